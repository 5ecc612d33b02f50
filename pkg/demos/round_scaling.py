"""Small versions of the round-scaling benchmarks (the CLI ``bench`` runs the full grids).

Run with ``python3 demos/round_scaling.py``.
"""

from dymatch.experiments import bench_csv, run_bench

print("fully dynamic, worst-case deletions (k=4, beta=1):")
print(bench_csv(run_bench({"algorithm": "fullydyn", "sizes": [64, 256, 1024], "k": [4], "beta": [1], "samples": 50})))
print("batch insertions on 1024 vertices (k=4, beta=4):")
print(bench_csv(run_bench({"algorithm": "batchinc", "sizes": [16, 64, 256], "k": [4], "beta": [4], "samples": 2})))
