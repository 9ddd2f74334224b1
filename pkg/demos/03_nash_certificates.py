"""Each agent picks a joining probability; is the profile an equilibrium?

An agent's cost is expected energy minus its own policy entropy over beta.
The mean-field fixed point is an exact equilibrium of this game, while the
participation marginals of the Gibbs posterior are only approximately one;
their epsilon can rise at moderate beta and vanishes once the posterior
concentrates on a single coalition.
"""

import numpy as np

from coalfe import epsilon_decay_scan, random_pairwise

E = random_pairwise(4, np.random.default_rng(5)).energy_table()
betas = [0.5, 1, 2, 4, 8, 16, 32, 64]

print(" beta   eps(mean-field)  eps(Gibbs marginals)  eps*beta (Gibbs)")
mf = epsilon_decay_scan(E, betas, profile="meanfield")
gb = epsilon_decay_scan(E, betas, profile="gibbs")
for a, b in zip(mf, gb):
    print(f"{a.beta:5.1f}   {a.epsilon:14.3e}  {b.epsilon:20.3e}  {b.epsilon * b.beta:14.3e}")
