"""Computed Deg next to the expected degree for every catalog map."""

import time

from hilbertdeg.catalog import CATALOG
from hilbertdeg.pipeline import compute_Deg

print(f"{'map':48s} {'N':>3s} {'eps':>7s} {'Deg':>4s} {'expected':>8s} {'time':>7s}")
for e in CATALOG:
    t0 = time.perf_counter()
    rep = compute_Deg(e.build())
    dt = time.perf_counter() - t0
    name = e.describe().split("  ")[0]
    flag = "" if rep.value == e.expected_degree else "  MISMATCH"
    print(f"{name:48s} {rep.N:3d} {rep.epsilon.epsilon:7.3f} {rep.value:4d} {e.expected_degree:8d} {dt:6.2f}s{flag}")
