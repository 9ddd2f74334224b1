"""Precision sweeps: replicate aggregation, quadratic fit and peak location."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import stats

from .models import DomainPreset, InfluenceSample, analytic_peak, sample_influence


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepRow:
    beta: float
    mean: float
    std: float
    n: int

    @property
    def single_run(self) -> bool:
        return self.n == 1


@dataclass(frozen=True)
class QuadraticFit:
    a: float
    b: float
    c: float
    r_squared: float
    # (X^T X)^-1 and residual sum of squares, kept for the curvature test
    cov_unscaled: np.ndarray = field(repr=False, compare=False, default=None)
    ss_res: float = 0.0

    def __call__(self, beta):
        beta = np.asarray(beta, dtype=float)
        return self.a * beta**2 + self.b * beta + self.c


def aggregate(samples: Iterable[InfluenceSample]) -> list[SweepRow]:
    """Mean and sample standard deviation (divisor ``n - 1``) per precision.

    A precision with a single run gets ``std = 0``; check ``row.single_run``.
    """
    groups = defaultdict(list)
    for s in samples:
        groups[s.beta].append(s.eta)
    rows = []
    for beta in sorted(groups):
        vals = np.asarray(groups[beta])
        std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        rows.append(SweepRow(float(beta), float(np.mean(vals)), std, int(vals.size)))
    return rows


def _xy(rows) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([r.beta for r in rows], dtype=float)
    y = np.array([r.mean for r in rows], dtype=float)
    return x, y


def quadratic_fit(rows: list[SweepRow]) -> QuadraticFit:
    """Unweighted least squares ``mean = a beta**2 + b beta + c`` via QR."""
    x, y = _xy(rows)
    if np.unique(x).size < 3:
        raise SweepError("quadratic fit needs at least 3 distinct beta values")
    X = np.column_stack([x**2, x, np.ones_like(x)])
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * diag.max():
        raise SweepError("design matrix is rank deficient")
    coef = np.linalg.solve(R, Q.T @ y)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    R_inv = np.linalg.inv(R)
    return QuadraticFit(float(coef[0]), float(coef[1]), float(coef[2]), r2, R_inv @ R_inv.T, ss_res)


def curvature_significance(rows: list[SweepRow], fit: QuadraticFit) -> float:
    """Two-tailed p-value of the t-test on the quadratic coefficient ``a``."""
    dof = len(rows) - 3
    if dof < 1:
        raise SweepError("t-test on the curvature needs at least 4 points")
    sigma2 = fit.ss_res / dof
    se = float(np.sqrt(sigma2 * fit.cov_unscaled[0, 0]))
    if se == 0.0:
        return 0.0 if fit.a != 0.0 else 1.0
    t = fit.a / se
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), dof)))


def find_beta_star(rows: list[SweepRow], fit: QuadraticFit) -> tuple[float, str]:
    """Vertex ``-b / 2a`` for a concave fit, else the precision of maximum mean."""
    if fit.a < 0:
        vertex = -fit.b / (2 * fit.a)
        if np.isfinite(vertex):
            return float(vertex), "vertex"
    means = np.array([r.mean for r in rows])
    k = int(np.argmax(means))  # first maximum, i.e. the smaller beta on ties
    return rows[k].beta, "argmax"


@dataclass
class SweepResult:
    domain: str
    rows: list
    fit: QuadraticFit
    p_value_a: float
    beta_star: float
    beta_star_method: str
    analytic_beta_star: Optional[float] = None
    reference_beta_star: Optional[float] = None
    samples: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        out = {
            "domain": self.domain,
            "a": self.fit.a,
            "b": self.fit.b,
            "c": self.fit.c,
            "r_squared": self.fit.r_squared,
            "p_value_a": self.p_value_a,
            "beta_star": self.beta_star,
            "beta_star_method": self.beta_star_method,
            "analytic_beta_star": self.analytic_beta_star,
            "reference_beta_star": self.reference_beta_star,
        }
        note = self.discrepancy_note()
        if note:
            out["note"] = note
        return out

    def discrepancy_note(self, tol: float = 0.1) -> Optional[str]:
        ref = self.reference_beta_star
        if ref is None or abs(self.beta_star - ref) <= tol:
            return None
        msg = (
            f"fitted beta* {self.beta_star:.3f} differs from the reference {ref:.2f}"
        )
        if self.analytic_beta_star is not None:
            msg += f"; the coalition-value formula peaks at {self.analytic_beta_star:.3f}"
            lo, hi = self.rows[0].beta, self.rows[-1].beta
            if not lo <= self.analytic_beta_star <= hi:
                msg += f", outside the swept range [{lo:g}, {hi:g}]"
        return msg


def run_sweep(preset: DomainPreset, threads: int = 1) -> SweepResult:
    samples = sample_influence(preset, threads=threads)
    rows = aggregate(samples)
    fit = quadratic_fit(rows)
    p = curvature_significance(rows, fit)
    beta_star, method = find_beta_star(rows, fit)
    peak = analytic_peak(preset.n_agents, preset.alpha_penalty) if preset.alpha_penalty > 0 else None
    return SweepResult(
        preset.name, rows, fit, p, beta_star, method, peak, preset.reference_beta_star, samples
    )


def normalize_overlay(results: list[SweepResult]) -> list[tuple[str, float, float]]:
    """Min-max normalise each domain's mean curve to ``[0, 1]``; long format rows."""
    out = []
    for res in results:
        means = np.array([r.mean for r in res.rows])
        shifted = means - means.min()
        top = shifted.max()
        norm = np.ones_like(means) if top == 0 else shifted / top
        out.extend((res.domain, r.beta, float(v)) for r, v in zip(res.rows, norm))
    return out
