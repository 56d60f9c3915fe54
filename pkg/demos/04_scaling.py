"""How the nested search grows with the number of players.

Each extra player adds one level of bisection, so probe counts multiply by
roughly the per-level iteration count.  This prints the benchmark rows and
the log-log slope of probes against log(1/eps) plus the log of the smoothness bound for each n.
"""
import numpy as np

from asrg.cli import BENCH_HEADER, bench_rows

rows = bench_rows(range(1), [1, 2, 3, 4], 2, [1e-3, 1e-4, 1e-5], "affine", "both", "standard")
print(",".join(BENCH_HEADER))
for r in rows:
    print(",".join(str(x) for x in r))

from asrg import generate, solve_players_exp

print()
for n in range(1, 5):
    inst = generate(0, n, 2, "affine")
    pts = []
    for eps in (1e-3, 1e-4, 1e-5):
        res = solve_players_exp(inst, eps)
        pts.append((np.log(np.log(1 / eps) + np.log(res.psi)), np.log(res.probes), res.iterations))
    slope = np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0]
    print(f"n={n}: slope {slope:.2f}, per-level iterations at eps=1e-5: {[int(k) for k in pts[-1][2]]}")
