"""Round-accurate simulation of distributed algorithms that maintain a
maximal matching without 3-augmenting paths under edge updates."""

from .adversary import Delete, Insert, InsertBatch, build_lb_instance, random_workload
from .batchinc import PhaseContext, process_batch
from .errors import DymatchError
from .fullydyn import apply_update
from .graphstate import Graph, Matching, Partition
from .oracle import certify, find_3aug_paths, is_maximal, max_matching_size
from .runner import RunConfig, run
from .simcore import SimConfig, Simulation, new_simulation
from .spreading import spread

__all__ = [
    "Delete", "DymatchError", "Graph", "Insert", "InsertBatch", "Matching", "Partition",
    "PhaseContext", "RunConfig", "SimConfig", "Simulation", "apply_update", "build_lb_instance",
    "certify", "find_3aug_paths", "is_maximal", "max_matching_size", "new_simulation",
    "process_batch", "random_workload", "run", "spread",
]
