"""Mean-field participation against exact marginals, and the attention weights.

With no pairwise coupling the mean-field fixed point is exact.  Coupling
introduces a gap that shrinks as the coupling weakens.
"""

import numpy as np

from coalfe import PairwiseEnergy, attention_weights, compare_exact_meanfield, meanfield_fixed_point

rng = np.random.default_rng(42)
n, beta = 8, 1.0
phi = rng.normal(size=n)
upper = np.triu(rng.normal(size=(n, n)), 1)

print("coupling  max|alpha_exact - alpha_mf|  iterations")
for c in (0.0, 0.05, 0.1, 0.2, 0.4):
    e = PairwiseEnergy(phi, c * (upper + upper.T))
    cmp = compare_exact_meanfield(e, beta)
    sol = meanfield_fixed_point(e, beta)
    print(f"{c:8.2f}  {cmp.max_abs_gap:27.2e}  {sol.iterations:10d}")

e = PairwiseEnergy(phi, 0.2 * (upper + upper.T))
sol = meanfield_fixed_point(e, beta)
print("\nparticipation :", np.round(sol.alpha, 3))
print("attention     :", np.round(attention_weights(e, sol.alpha, beta), 3))
