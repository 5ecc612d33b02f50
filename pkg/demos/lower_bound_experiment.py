"""Build the five-vertex segment instance and count what player P hears.

Run with ``python3 demos/lower_bound_experiment.py``.
"""

from dymatch.experiments import run_lb_trial

n, k = 200, 4
print(f"n={n}, k={k}: {n // 5} segments, P hosts {n // (5 * k)} middle vertices\n")
print(f"{'ell':>4} {'bits to P':>10} {'ell*token':>10} {'flips':>6} {'ok':>4}")
for ell in (0, 1, 2, 5, 10):
    trial, inst = run_lb_trial(n, k, ell, seed=0)
    print(f"{ell:>4} {trial.bits_to_P:>10} {trial.reference_bits:>10} "
          f"{trial.flips_seen:>3}/{trial.flips_required:<2} {str(trial.ok):>4}")
print("\nEvery challenge edge sits in a segment whose middle vertex P hosts, so P must learn")
print("about each one: the received bits grow with ell.")
