"""Closed forms for three states checked against the general solver.

The interior optimum comes from roots of a degree-6 polynomial in lambda, the
equal-probability point from a trigonometric formula, and the phases of the
optimum from the null vector of X - diag(p).
"""
import numpy as np

from udisc import gram, optimize, random_ensemble
from udisc.closedform import (extract_phases, gepm, reconstruct_from_phases,
                              three_state_constants, three_state_epm,
                              three_state_lambda_poly, three_state_solution)

rng = np.random.default_rng(7)
# the polynomial describes interior optima, so draw until one comes up
while True:
    ens = random_ensemble(3, rng=rng)
    sol = optimize(ens)
    if sol.classification.value == "interior":
        break
X = gram(ens).entries
print("priors     ", np.round(ens.priors, 4))
print("solver     ", sol.classification.value, np.round(sol.p_opt, 6), f"lambda {sol.lam:.6f}")

c = three_state_constants(X, ens.priors)
print("T          ", np.round(c.T, 6))
print("lambda roots", np.round(three_state_lambda_poly(c), 6))
cf = three_state_solution(X, ens.priors)
print("closed form", np.round(cf.p_opt, 6), f"|dp| {np.max(np.abs(cf.p_opt - sol.p_opt)):.1e}")

ph = extract_phases(X, ens.priors, sol.p_opt)
back = reconstruct_from_phases(X, ens.priors, ph)
print("phases     ", np.round(ph.thetas, 6), f"xi^2 {ph.xi ** 2:.6f}")
print("round trip ", np.round(back.p, 6), "in range:", back.in_range)

# equal success probabilities: p = sigma_min(X), and the priors that make it optimal
p_epm, priors = three_state_epm(X)
print("\nEPM p      ", f"{p_epm:.10f}", "sigma_min", f"{np.linalg.eigvalsh(X)[0]:.10f}")
print("EPM priors ", None if priors is None else np.round(priors, 6))
g = gepm(ens, [1, 1, 1])
print("GEPM priors", None if g.priors is None else np.round(g.priors, 6))
if priors is not None:
    back = optimize(ens.with_priors(priors))
    print("optimum at EPM priors", np.round(back.p_opt, 8))
