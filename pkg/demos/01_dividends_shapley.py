"""Harsanyi dividends and Shapley values of a small three-agent game.

Agents 0 and 1 are only worth something together (a pure pairwise synergy);
agent 2 contributes on its own but partly duplicates agent 0.
"""

import numpy as np

from coalfe import ValueTable, classify_synergy, harsanyi_dividends, members_of, shapley_from_dividends
from coalfe import shapley_monte_carlo


def v(mask):
    s = set(members_of(mask))
    return 2.0 * ({0, 1} <= s) + 1.0 * (2 in s) + 0.5 * (0 in s) - 0.3 * ({0, 2} <= s)


game = ValueTable.from_function(3, v)
d = harsanyi_dividends(game)
labels = classify_synergy(d)

print("coalition   v(S)   dividend  label")
for mask in range(1, 8):
    print(f"{str(members_of(mask)):10s} {game.values[mask]:6.2f} {d.dividends[mask]:9.2f}  {int(labels[mask]):+d}")

eta = shapley_from_dividends(d).eta
print("\nShapley values:", np.round(eta, 4), " sum =", round(eta.sum(), 12), " v(N) =", game.grand)

mc = shapley_monte_carlo(game, 3, n_permutations=2000, seed=42)
print("sampled       :", np.round(mc.eta, 4), "+/-", np.round(mc.stderr, 4))
