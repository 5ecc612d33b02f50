"""Exception hierarchy shared by all modules."""


class DymatchError(Exception):
    """Base class for every error raised by the package."""


class BadConfig(DymatchError):
    pass


class UnbalancedPartition(DymatchError):
    def __init__(self, player: int, load: int, bound: int):
        super().__init__(f"player {player} hosts {load} vertices (bound {bound})")
        self.player = player
        self.load = load
        self.bound = bound


class LinkOverflow(DymatchError):
    """A round tried to push more than beta tokens over one directed link."""

    def __init__(self, sender: int, receiver: int, count: int, beta: int):
        super().__init__(
            f"link {sender}->{receiver} carries {count} tokens (beta={beta})"
        )
        self.sender = sender
        self.receiver = receiver
        self.count = count


class DuplicateEdge(DymatchError):
    pass


class SelfLoop(DymatchError):
    pass


class MissingEdge(DymatchError):
    pass


class StateCorrupt(DymatchError):
    pass


class SamplingExhausted(DymatchError):
    pass


class G1Overflow(DymatchError):
    pass


class GStarOverflow(DymatchError):
    pass


class BadDimensions(DymatchError):
    pass


class InvalidUpdate(DymatchError):
    pass


class TooLarge(DymatchError):
    pass


class VerificationFailed(DymatchError):
    """An oracle check failed; ``record`` carries the offending update record."""

    def __init__(self, message: str, record: object = None):
        super().__init__(message)
        self.record = record
