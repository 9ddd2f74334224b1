"""Coalition value functions on the subset lattice.

Coalitions of ``N`` agents are encoded as ``N``-bit masks (bit ``i`` set when
agent ``i`` is a member).  Every table in this module is a dense array of
length ``2**N`` indexed by mask, so the Harsanyi dividends (Moebius inverse)
and the value function (zeta transform) are computed with per-bit sweeps in
``O(N 2**N)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

#: Default cap on the number of agents for dense tables (2**24 float64 = 128 MiB).
MAX_AGENTS = 24


class LatticeError(ValueError):
    """Raised for malformed or oversized lattice tables."""


def _check_size(n_agents: int, max_agents: Optional[int] = None) -> None:
    cap = MAX_AGENTS if max_agents is None else max_agents
    if n_agents < 1:
        raise LatticeError(f"need at least one agent, got {n_agents}")
    if n_agents > cap:
        raise LatticeError(
            f"{n_agents} agents exceeds the dense-lattice cap of {cap} "
            f"({8 * 2**n_agents / 2**20:.0f} MiB per table)"
        )


def _as_table(values, max_agents: Optional[int] = None) -> tuple[int, np.ndarray]:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2 or arr.size & (arr.size - 1):
        raise LatticeError(f"table length must be a power of two >= 2, got shape {arr.shape}")
    n = arr.size.bit_length() - 1
    _check_size(n, max_agents)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise LatticeError(f"non-finite entry at mask {bad}")
    arr.setflags(write=False)
    return n, arr


def popcounts(n_agents: int) -> np.ndarray:
    """Coalition size for every mask ``0 .. 2**n_agents - 1``."""
    sizes = np.zeros(1, dtype=np.int64)
    for _ in range(n_agents):
        sizes = np.concatenate([sizes, sizes + 1])
    return sizes


def mask_of(members: Iterable[int]) -> int:
    bits = 0
    for i in members:
        bits |= 1 << int(i)
    return bits


def members_of(bits: int) -> tuple[int, ...]:
    return tuple(i for i in range(bits.bit_length()) if bits >> i & 1)


@dataclass(frozen=True)
class CoalitionMask:
    """A coalition ``C`` of ``n_agents`` agents stored as a bit mask."""

    bits: int
    n_agents: int

    def __post_init__(self):
        if not 1 <= self.n_agents <= 64:
            raise LatticeError(f"n_agents out of range: {self.n_agents}")
        if not 0 <= self.bits < 1 << self.n_agents:
            raise LatticeError(f"mask {self.bits} does not fit {self.n_agents} agents")

    @classmethod
    def from_members(cls, members: Iterable[int], n_agents: int) -> "CoalitionMask":
        return cls(mask_of(members), n_agents)

    @property
    def size(self) -> int:
        return bin(self.bits).count("1")

    @property
    def members(self) -> tuple[int, ...]:
        return members_of(self.bits)

    def __contains__(self, agent: int) -> bool:
        return bool(self.bits >> agent & 1)


@dataclass(frozen=True)
class ValueTable:
    """Characteristic function ``v`` with ``values[mask] = v(C)`` and ``v(empty) = 0``."""

    values: np.ndarray
    n_agents: int = field(init=False)

    def __post_init__(self):
        n, arr = _as_table(self.values)
        if arr[0] != 0.0:
            raise LatticeError(f"v(empty) must be 0, got {arr[0]!r}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "n_agents", n)

    @classmethod
    def from_function(cls, n_agents: int, fn: Callable[[int], float]) -> "ValueTable":
        _check_size(n_agents)
        return cls(np.array([fn(m) for m in range(1 << n_agents)], dtype=float))

    @classmethod
    def from_sizes(cls, size_values) -> "ValueTable":
        """Symmetric game from ``size_values[k] = v(any coalition of size k)``."""
        size_values = np.asarray(size_values, dtype=float)
        n = size_values.size - 1
        _check_size(n)
        return cls(size_values[popcounts(n)])

    @property
    def grand(self) -> float:
        return float(self.values[-1])

    def __call__(self, bits: int) -> float:
        return float(self.values[bits])

    def __add__(self, other: "ValueTable") -> "ValueTable":
        return ValueTable(self.values + other.values)


@dataclass(frozen=True)
class DividendTable:
    """Harsanyi dividends ``dividends[mask] = Delta(B)`` of a value function."""

    dividends: np.ndarray
    n_agents: int = field(init=False)

    def __post_init__(self):
        n, arr = _as_table(self.dividends)
        if arr[0] != 0.0:
            raise LatticeError(f"dividend of the empty coalition must be 0, got {arr[0]!r}")
        object.__setattr__(self, "dividends", arr)
        object.__setattr__(self, "n_agents", n)

    def __getitem__(self, bits: int) -> float:
        return float(self.dividends[bits])

    @property
    def singletons(self) -> np.ndarray:
        """``phi_i = Delta({i})``."""
        return self.dividends[1 << np.arange(self.n_agents)]

    @property
    def pairwise(self) -> np.ndarray:
        """Symmetric matrix ``psi_ij = Delta({i, j})`` with zero diagonal."""
        n = self.n_agents
        psi = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                psi[i, j] = psi[j, i] = self.dividends[(1 << i) | (1 << j)]
        return psi


@dataclass(frozen=True)
class ShapleyVector:
    eta: np.ndarray
    stderr: Optional[np.ndarray] = None

    @property
    def n_agents(self) -> int:
        return int(self.eta.size)

    @property
    def total(self) -> float:
        return float(np.sum(self.eta))


def moebius_transform(table: np.ndarray) -> np.ndarray:
    """In-place fast Moebius transform over the subset lattice.

    After the call ``table[B] = sum_{A subset B} (-1)**(|B|-|A|) table_in[A]``.
    """
    n = table.size.bit_length() - 1
    for i in range(n):
        view = table.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    return table


def zeta_transform(table: np.ndarray) -> np.ndarray:
    """In-place fast zeta transform: ``table[C] = sum_{B subset C} table_in[B]``."""
    n = table.size.bit_length() - 1
    for i in range(n):
        view = table.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return table


def superset_sums(table: np.ndarray) -> np.ndarray:
    """Per-agent sums ``out[i] = sum over masks containing i``."""
    n = table.size.bit_length() - 1
    return np.array([table.reshape(-1, 2, 1 << i)[:, 1, :].sum() for i in range(n)])


def harsanyi_dividends(v: ValueTable, max_agents: Optional[int] = None) -> DividendTable:
    """Harsanyi dividends of ``v`` by Moebius inversion.

    Examples
    --------
    >>> harsanyi_dividends(ValueTable([0.0, 1.0, 2.0, 5.0])).dividends
    array([0., 1., 2., 2.])
    """
    _check_size(v.n_agents, max_agents)
    return DividendTable(moebius_transform(v.values.copy()))


def reconstruct_values(d: DividendTable, max_agents: Optional[int] = None) -> ValueTable:
    """Inverse of :func:`harsanyi_dividends`: ``v(C) = sum_{B subset C} Delta(B)``."""
    _check_size(d.n_agents, max_agents)
    return ValueTable(zeta_transform(d.dividends.copy()))


def energy_dividends(d: DividendTable) -> DividendTable:
    """Dividends of the energy ``E = -v``; the sign flips, synergy becomes negative energy."""
    return DividendTable(-d.dividends)


def shapley_from_dividends(d: DividendTable) -> ShapleyVector:
    """Shapley value as the even split of every dividend among its members."""
    sizes = popcounts(d.n_agents)
    shares = np.zeros_like(d.dividends)
    np.divide(d.dividends, sizes, out=shares, where=sizes > 0)
    return ShapleyVector(superset_sums(shares))


def shapley_values(v: ValueTable) -> ShapleyVector:
    return shapley_from_dividends(harsanyi_dividends(v))


ValueOracle = Union[ValueTable, Callable[[int], float]]


def shapley_monte_carlo(
    v: ValueOracle,
    n_agents: int,
    n_permutations: int,
    seed: Optional[int] = None,
) -> ShapleyVector:
    """Permutation-sampling estimate of the Shapley value.

    ``v`` is any callable mapping a coalition mask to its value, so the
    estimator also works beyond the dense-table cap.  The returned vector
    carries the standard error of each component.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    rng = np.random.default_rng(seed)
    totals = np.zeros(n_agents)
    squares = np.zeros(n_agents)
    fast = isinstance(v, ValueTable)

    for _ in range(n_permutations):
        order = rng.permutation(n_agents)
        if fast:
            masks = np.concatenate([[0], np.cumsum(1 << order)])
            vals = v.values[masks]
            contrib = np.diff(vals)
        else:
            contrib = np.empty(n_agents)
            mask, prev = 0, float(v(0))
            for k, i in enumerate(order):
                mask |= 1 << int(i)
                cur = float(v(mask))
                contrib[k] = cur - prev
                prev = cur
        marginal = np.empty(n_agents)
        marginal[order] = contrib
        totals += marginal
        squares += marginal**2

    mean = totals / n_permutations
    if n_permutations > 1:
        var = np.maximum(squares / n_permutations - mean**2, 0.0) * n_permutations / (n_permutations - 1)
        stderr = np.sqrt(var / n_permutations)
    else:
        stderr = np.full(n_agents, np.nan)
    return ShapleyVector(mean, stderr)


def truncate_dividends(d: DividendTable, max_order: int) -> DividendTable:
    """Keep dividends of coalitions with at most ``max_order`` members.

    ``max_order=2`` leaves exactly the Ising-form energy: fields on singletons
    and couplings on pairs.
    """
    if not 1 <= max_order <= d.n_agents:
        raise ValueError(f"max_order must lie in [1, {d.n_agents}], got {max_order}")
    keep = popcounts(d.n_agents) <= max_order
    return DividendTable(np.where(keep, d.dividends, 0.0))


class Synergy(enum.IntEnum):
    ANTAGONISTIC = -1
    NEUTRAL = 0
    SYNERGISTIC = 1


def classify_synergy(d: DividendTable, tol: float = 1e-9) -> np.ndarray:
    """Label each coalition by the sign of its value dividend.

    Returns an int8 array of :class:`Synergy` codes: positive dividends of
    ``v`` (beyond ``tol``) are synergistic, negative ones antagonistic.  The
    empty coalition is always neutral.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    labels = np.zeros(d.dividends.size, dtype=np.int8)
    labels[d.dividends > tol] = Synergy.SYNERGISTIC
    labels[d.dividends < -tol] = Synergy.ANTAGONISTIC
    return labels
