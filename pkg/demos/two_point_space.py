"""
The smallest curved space
=========================

Two points joined by one edge of rate 1. Every quantity the package computes
has a closed form here, which makes it the first thing to look at.
"""

import numpy as np

from coarse_ricci import (
    build_space, carre_du_champ, cd_estimate, coarse_ricci, distcarre_check,
    gamma2, invariant_measure, log_sobolev_audit, make_generator,
)

L = make_generator([[-1.0, 1.0], [1.0, -1.0]], "markov-generator")
space = build_space([[0.0, 1.0], [1.0, 0.0]], points=["a", "b"])

# The test function of the pair (a, b) is f = (0, 1).
f = np.array([0.0, 1.0])
print("Gamma(f, f)  =", carre_du_champ(L, f, f))
print("Gamma2(f, f) =", gamma2(L, f, f))
print("Ric(a, b)    =", coarse_ricci(L, space, 0, 1))

# Curvature-dimension constants: k = 2 without a dimension bound,
# k = 2 (1 - 1/N) with one.
for N in (np.inf, 4.0, 2.0):
    print(f"CD constant at N = {N}: k = {cd_estimate(L, 0, N).k:.6f}")

# Gamma(f, f)(a) = 1/2 while d(a, b)^2 = 1, so the distance / carre du champ
# comparison fails on this space.
print("distcarre ratios:", distcarre_check(L, space))

# The log-Sobolev inequality holds with the sharp constant K = 2 and fails
# for larger K on some densities.
mu = invariant_measure(L).measure
for K in (2.0, 10.0):
    audit = log_sobolev_audit(L, mu, K, trials=10_000, seed=11)
    print(f"K = {K:>4}: {audit.n_violations} violations in {audit.trials} probes")
