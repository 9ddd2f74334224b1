"""Pairwise-truncated coalition energies and their mean-field solution.

With only singleton fields ``phi`` and pairwise couplings ``psi`` retained,
the factorised approximation to the Gibbs posterior satisfies

    alpha_i = sigmoid(-beta * (phi_i + sum_j psi_ij alpha_j)),

solved here by damped fixed-point iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, xlogy

from .gibbs import EnergyTable, gibbs_posterior
from .lattice import DividendTable, LatticeError, zeta_transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairwiseEnergy:
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float).reshape(-1)
        psi = np.array(self.psi, dtype=float)
        n = phi.size
        if n < 1 or psi.shape != (n, n):
            raise ValueError(f"psi must be {n}x{n}, got {psi.shape}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
            raise ValueError("energies must be finite")
        if np.max(np.abs(psi - psi.T), initial=0.0) > 1e-12:
            raise ValueError("psi must be symmetric")
        if np.any(np.diag(psi) != 0):
            raise ValueError("psi must have a zero diagonal")
        phi.setflags(write=False)
        psi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @property
    def n_agents(self) -> int:
        return self.phi.size

    @classmethod
    def from_dividends(cls, d: DividendTable) -> "PairwiseEnergy":
        """Order-two part of an energy dividend table (higher orders dropped)."""
        return cls(d.singletons, d.pairwise)

    def dividends(self) -> DividendTable:
        n = self.n_agents
        table = np.zeros(1 << n)
        table[1 << np.arange(n)] = self.phi
        for i in range(n):
            for j in range(i + 1, n):
                table[(1 << i) | (1 << j)] = self.psi[i, j]
        return DividendTable(table)

    def energy_table(self) -> EnergyTable:
        """Full lattice energy ``E(C) = sum_{i in C} phi_i + sum_{i<j in C} psi_ij``."""
        return EnergyTable(zeta_transform(self.dividends().dividends.copy()))

    def local_field(self, alpha: np.ndarray) -> np.ndarray:
        """``d E_q[E] / d alpha_i = phi_i + sum_j psi_ij alpha_j``."""
        return self.phi + self.psi @ alpha

    def energy(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.phi @ x + 0.5 * x @ self.psi @ x)


@dataclass
class MeanFieldSolution:
    alpha: np.ndarray
    iterations: int
    residual: float
    converged: bool
    free_energy_trace: Optional[list] = None


def solve_self_consistency(
    local_field: Callable[[np.ndarray], np.ndarray],
    n_agents: int,
    beta: float,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    damping: float = 0.5,
    init=0.5,
    schedule: str = "synchronous",
    objective: Optional[Callable[[np.ndarray], float]] = None,
) -> MeanFieldSolution:
    """Iterate ``alpha <- (1-d) alpha + d sigmoid(-beta * field(alpha))``.

    ``schedule="synchronous"`` updates every agent from the same iterate;
    ``"sequential"`` sweeps agents in index order (coordinate descent on the
    mean-field free energy when ``damping == 1``).  Non-convergence is
    reported through ``converged=False``, never raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if schedule not in ("synchronous", "sequential"):
        raise ValueError(f"unknown schedule {schedule!r}")
    alpha = np.broadcast_to(np.asarray(init, dtype=float), (n_agents,)).copy()
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("init must lie in [0, 1]")

    def residual_of(a):
        return float(np.max(np.abs(a - expit(-beta * local_field(a)))))

    trace = [objective(alpha)] if objective is not None else None
    residual = residual_of(alpha)
    it = 0
    while residual > tol and it < max_iter:
        if schedule == "synchronous":
            alpha = (1 - damping) * alpha + damping * expit(-beta * local_field(alpha))
        else:
            for i in range(n_agents):
                target = expit(-beta * local_field(alpha)[i])
                alpha[i] = (1 - damping) * alpha[i] + damping * target
        it += 1
        residual = residual_of(alpha)
        if trace is not None:
            trace.append(objective(alpha))
            if trace[-1] > trace[-2] + 1e-12:
                logger.info("mean-field free energy rose by %.3g at iteration %d", trace[-1] - trace[-2], it)
    return MeanFieldSolution(alpha, it, residual, residual <= tol, trace)


def meanfield_fixed_point(
    e: PairwiseEnergy,
    beta: float,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    damping: float = 0.5,
    init=0.5,
    schedule: str = "synchronous",
    track_free_energy: bool = False,
) -> MeanFieldSolution:
    """Solve the pairwise mean-field equations.

    >>> sol = meanfield_fixed_point(PairwiseEnergy([0.0, 0.0], [[0, 1], [1, 0]]), 1.0)
    >>> round(float(sol.alpha[0]), 4)
    0.4011
    """
    objective = (lambda a: meanfield_free_energy(a, e, beta)) if track_free_energy else None
    return solve_self_consistency(
        e.local_field, e.n_agents, beta, tol, max_iter, damping, init, schedule, objective
    )


def binary_entropy(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return -(xlogy(q, q) + xlogy(1 - q, 1 - q))


def meanfield_free_energy(alpha, e: PairwiseEnergy, beta: float) -> float:
    """``E_q[E] - (1/beta) sum_i H(alpha_i)`` under the factorised distribution."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise ValueError("alpha must lie in [0, 1]")
    return e.energy(alpha) - float(np.sum(binary_entropy(alpha))) / beta


def softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    z = np.exp(logits - logits.max())
    return z / z.sum()


def attention_weights(e: PairwiseEnergy, alpha, beta: float) -> np.ndarray:
    """Softmax over ``-beta * (phi_j + sum_i psi_ij alpha_i)``.

    Lower local energy means a larger weight, matching ``P* ~ exp(-beta E)``.
    """
    return softmax(-beta * e.local_field(np.asarray(alpha, dtype=float)))


@dataclass
class MeanFieldComparison:
    alpha_exact: np.ndarray
    alpha_mf: np.ndarray
    converged: bool

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.alpha_exact - self.alpha_mf)

    @property
    def max_abs_gap(self) -> float:
        return float(self.gaps.max())


def compare_exact_meanfield(e: PairwiseEnergy, beta: float, **solver_kw) -> MeanFieldComparison:
    """Exact Gibbs participation marginals against the mean-field solution."""
    try:
        exact = gibbs_posterior(e.energy_table(), beta).marginals
    except LatticeError as exc:
        raise LatticeError(f"exact marginals need the full lattice: {exc}") from exc
    sol = meanfield_fixed_point(e, beta, **solver_kw)
    return MeanFieldComparison(exact, sol.alpha, sol.converged)


def random_pairwise(n_agents: int, rng: np.random.Generator, coupling: float = 1.0) -> PairwiseEnergy:
    """Gaussian fields and symmetric Gaussian couplings scaled by ``coupling``."""
    phi = rng.normal(size=n_agents)
    upper = np.triu(rng.normal(size=(n_agents, n_agents)), 1)
    return PairwiseEnergy(phi, coupling * (upper + upper.T))

