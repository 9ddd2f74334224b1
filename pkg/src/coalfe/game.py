"""The stochastic game induced by a coalition energy.

A strategy of agent ``i`` is its probability ``q_i`` of joining the
coalition, so a profile ``q`` induces the product measure over masks.  The
cost of agent ``i`` is the expected energy minus its own policy entropy over
``beta``; the mean-field free energy is then an exact potential of the game
and its stationary points are Nash equilibria.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, rel_entr

from .gibbs import CoalitionDistribution, EnergyTable, _check_beta, gibbs_posterior
from .meanfield import binary_entropy, solve_self_consistency

#: Improvements below this are indistinguishable from rounding in the cost.
CERTIFICATE_ATOL = 1e-12


def _check_profile(q, n_agents: Optional[int] = None) -> np.ndarray:
    q = np.array(q, dtype=float).reshape(-1)
    if np.any(~np.isfinite(q)) or np.any(q < 0) or np.any(q > 1):
        raise ValueError("strategy probabilities must lie in [0, 1]")
    if n_agents is not None and q.size != n_agents:
        raise ValueError(f"profile has {q.size} agents, energy table has {n_agents}")
    return q


def product_probs(q) -> np.ndarray:
    probs = np.ones(1)
    for qi in q:
        probs = np.concatenate([probs * (1 - qi), probs * qi])
    return probs


def profile_distribution(q) -> CoalitionDistribution:
    """Product measure ``prod_i q_i**X_i (1 - q_i)**(1 - X_i)`` over masks."""
    q = _check_profile(q)
    probs = product_probs(q)
    return CoalitionDistribution(probs / probs.sum())


def expected_energy(q, E: EnergyTable) -> float:
    q = _check_profile(q, E.n_agents)
    return float(product_probs(q) @ E.energies)


def joining_gain(i: int, q, E: EnergyTable) -> float:
    """Derivative of the expected energy in ``q_i`` (it is linear in ``q_i``)."""
    q = _check_profile(q, E.n_agents)
    hi, lo = q.copy(), q.copy()
    hi[i], lo[i] = 1.0, 0.0
    return float((product_probs(hi) - product_probs(lo)) @ E.energies)


def local_fields(q, E: EnergyTable) -> np.ndarray:
    return np.array([joining_gain(i, q, E) for i in range(E.n_agents)])


def agent_cost(i: int, q, E: EnergyTable, beta: float) -> float:
    """``c_i(q) = E_q[E] - H(q_i) / beta``."""
    beta = _check_beta(beta)
    q = _check_profile(q, E.n_agents)
    return expected_energy(q, E) - float(binary_entropy(q[i])) / beta


def meanfield_potential(q, E: EnergyTable, beta: float) -> float:
    """``F_MF(q) = E_q[E] - (1/beta) sum_j H(q_j)``, an exact potential for the agent costs."""
    beta = _check_beta(beta)
    q = _check_profile(q, E.n_agents)
    return expected_energy(q, E) - float(np.sum(binary_entropy(q))) / beta


def best_response(
    i: int,
    q,
    E: EnergyTable,
    beta: float,
    grid: int = 1001,
    atol: float = CERTIFICATE_ATOL,
) -> tuple[float, float]:
    """Best unilateral deviation of agent ``i`` and the cost it saves.

    Scans ``grid`` uniform points of ``[0, 1]`` plus the stationary point
    ``sigmoid(-beta * a_i)``.  The saving for the stationary candidate is the
    closed form ``KL(q_i || q*) / beta``, so it is never negative.  Savings of
    at most ``atol`` are reported as zero and keep ``q_i`` unchanged.
    """
    if grid < 2:
        raise ValueError("grid must have at least two points")
    beta = _check_beta(beta)
    q = _check_profile(q, E.n_agents)
    a = joining_gain(i, q, E)
    qi = q[i]
    h_qi = float(binary_entropy(qi))

    xs = np.linspace(0.0, 1.0, grid)
    gains = a * (qi - xs) - (h_qi - binary_entropy(xs)) / beta
    k = int(np.argmax(gains))
    best_x, best_gain = float(xs[k]), float(gains[k])

    s = float(expit(-beta * a))
    kl = float(rel_entr(qi, s) + rel_entr(1 - qi, 1 - s))
    if np.isfinite(kl):
        s_gain = kl / beta
    else:
        s_gain = a * (qi - s) - (h_qi - float(binary_entropy(s))) / beta
    if s_gain >= best_gain:
        best_x, best_gain = s, s_gain

    if best_gain <= atol:
        return float(qi), 0.0
    return float(best_x), float(best_gain)


@dataclass(frozen=True)
class NashCertificate:
    epsilon: float
    worst_agent: int
    worst_deviation: float
    beta: float


def nash_certificate(
    q, E: EnergyTable, beta: float, grid: int = 1001, atol: float = CERTIFICATE_ATOL
) -> NashCertificate:
    """``epsilon`` = largest cost any single agent saves by deviating."""
    q = _check_profile(q, E.n_agents)
    worst = (0.0, 0, float(q[0]))
    for i in range(E.n_agents):
        x, gain = best_response(i, q, E, beta, grid, atol)
        if gain > worst[0]:
            worst = (gain, i, x)
    return NashCertificate(worst[0], worst[1], worst[2], float(beta))


def solve_profile(E: EnergyTable, beta: float, polish_sweeps: int = 200, **solver_kw):
    """Mean-field fixed point of a general energy table.

    Damped synchronous iteration gets close; sequential exact best-response
    sweeps (coordinate descent on the potential) then run until a sweep
    leaves the profile bit-for-bit unchanged.  The polish matters near the
    boundary, where an absolute tolerance of 1e-10 on ``alpha`` is far from
    the optimum in cost terms.
    """
    beta = _check_beta(beta)
    field = lambda a: local_fields(a, E)
    sol = solve_self_consistency(field, E.n_agents, beta, **solver_kw)
    alpha = sol.alpha.copy()
    for _ in range(polish_sweeps):
        prev = alpha.copy()
        for i in range(E.n_agents):
            alpha[i] = expit(-beta * joining_gain(i, alpha, E))
        sol.iterations += 1
        if np.array_equal(prev, alpha):
            break
    sol.alpha = alpha
    sol.residual = float(np.max(np.abs(alpha - expit(-beta * field(alpha)))))
    sol.converged = sol.residual <= solver_kw.get("tol", 1e-10)
    return sol


@dataclass(frozen=True)
class ScanRow:
    beta: float
    epsilon: float
    worst_agent: int
    converged: bool
    residual: float


def epsilon_decay_scan(
    E: EnergyTable,
    beta_grid: Sequence[float],
    grid: int = 1001,
    threads: int = 1,
    profile: str = "meanfield",
    **solver_kw,
) -> list[ScanRow]:
    """Certify a profile at every ``beta`` of an ascending grid.

    ``profile="meanfield"`` certifies the mean-field fixed point, which is an
    exact equilibrium of the potential game, so its epsilon only reflects
    grid and solver resolution.  ``profile="gibbs"`` certifies the exact
    participation marginals of the Gibbs posterior instead.
    """
    betas = [_check_beta(b) for b in beta_grid]
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta_grid must be strictly ascending")
    if profile not in ("meanfield", "gibbs"):
        raise ValueError(f"unknown profile {profile!r}")

    def one(beta):
        if profile == "gibbs":
            q, converged, residual = gibbs_posterior(E, beta).marginals, True, 0.0
        else:
            sol = solve_profile(E, beta, **solver_kw)
            q, converged, residual = sol.alpha, sol.converged, sol.residual
        cert = nash_certificate(q, E, beta, grid)
        return ScanRow(beta, cert.epsilon, cert.worst_agent, converged, residual)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, betas))
    return [one(b) for b in betas]
