"""Three priors on the same three real states, one optimum of each kind.

Solves each case, prints the optimum and its certificate, then builds the
measurement and runs it a million times on the interior case.
"""
import numpy as np

from udisc import build_povm, optimize, outcome_table, simulate, validate

s5, s17 = np.sqrt(5), np.sqrt(17)
states = [[1, 0, 0], [1 / s5, 2 / s5, 0], [2 / s17, 2 / s17, 3 / s17]]
cases = {
    "interior": (0.05, 0.35, 0.60),
    "boundary": (0.10, 0.80, 0.10),
    "singular": (0.30, 0.35, 0.35),
}

print(f"{'priors':<20} {'class':<9} {'p':<28} {'lambda':>8} {'p_bar':>8}")
solved = {}
for name, priors in cases.items():
    ens = validate(states, priors)
    sol = optimize(ens)
    solved[name] = (ens, sol)
    p = " ".join(f"{x:.4f}" for x in sol.p_opt)
    print(f"{str(priors):<20} {sol.classification.value:<9} {p:<28} {sol.lam:8.4f} {sol.p_bar:8.4f}")

# zero-based: the third state is never identified at the boundary optimum
print("boundary zero set:", solved["boundary"][1].zero_set)
print("singular residuals:", {k: f"{v:.1e}" for k, v in solved["singular"][1].residuals.items()
                              if k in ("sigma_min", "max_minor")})

ens, sol = solved["interior"]
povm = build_povm(ens, sol.p_opt)
print("\noutcome table, rows = prepared state, last column inconclusive")
print(np.array2string(outcome_table(povm, ens), precision=4, suppress_small=True))

rep = simulate(povm, ens, 1_000_000, seed=1, shards=4)
sd = np.sqrt(sol.p_bar * (1 - sol.p_bar) / rep.trials)
print(f"\n{rep.trials} trials: success {rep.empirical_success:.5f} "
      f"(expected {sol.p_bar:.5f} +- {3 * sd:.5f}), errors {rep.empirical_error}")
