"""Sample the critical surface of three states and compare with the optimum.

Writes surface.csv (p1,p2,p3 per row) for external plotting, then polishes
the best sample with the pattern search.
"""
import sys

import numpy as np

from udisc import gram, optimize, validate
from udisc.oracle import refine, sample_surface

s5, s17 = np.sqrt(5), np.sqrt(17)
states = [[1, 0, 0], [1 / s5, 2 / s5, 0], [2 / s17, 2 / s17, 3 / s17]]
priors = (0.10, 0.80, 0.10)
out = sys.argv[1] if len(sys.argv) > 1 else "surface.csv"

ens = validate(states, priors)
X = gram(ens).entries
sample = sample_surface(X, priors, 20_000, seed=3)
np.savetxt(out, sample.points, delimiter=",", header="p1,p2,p3", comments="", fmt="%.17g")
print(f"wrote {len(sample.points)} surface points to {out}")

sol = optimize(ens)
best = refine(X, priors, sample.best, 2000, seed=3)
print("best sample ", np.round(sample.best, 5), f"{sample.best_value:.6f}")
print("refined     ", np.round(best, 5), f"{ens.priors @ best:.6f}")
print("solver      ", np.round(sol.p_opt, 5), f"{sol.p_bar:.6f}", sol.classification.value,
      "zero set", sol.zero_set)
