"""Weak-Lebesgue and Lorentz norms of sampled fields via decreasing rearrangement.

Samples are read as piecewise constant on cells of volume ``h``, so the
rearrangement ``f*`` is a step function with value ``values[k]`` on
``[k h, (k+1) h)``.  Every norm below is exact for that interpretation.

The ``check_*`` helpers compare both sides of the functional inequalities
used for the blowup and smallness analysis and report the empirical
constant; none of them claims to recover the analytic constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Grid, ScalarField, VectorField, gradient_tensor, lp_norm, magnitude

__all__ = [
    "Rearrangement",
    "rearrange",
    "distribution_measure",
    "weak_lp_norm",
    "lorentz_norm",
    "GNReport",
    "check_gn",
    "EmbeddingReport",
    "check_weak_embedding",
    "HolderReport",
    "check_lorentz_holder",
]


@dataclass(frozen=True)
class Rearrangement:
    values: np.ndarray
    cell_volume: float

    @property
    def cumulative_measure(self) -> np.ndarray:
        """Measure of the first k+1 cells, i.e. ``(k+1) h``."""
        return np.arange(1, self.values.size + 1) * self.cell_volume


def rearrange(f: ScalarField | VectorField) -> Rearrangement:
    vals = np.sort(magnitude(f), axis=None)[::-1]
    return Rearrangement(values=vals, cell_volume=f.grid.cell_volume)


def distribution_measure(f: ScalarField | VectorField, lam: float) -> float:
    """``|{|f| > lam}|`` for the cellwise-constant reading of the samples."""
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    return float(np.count_nonzero(magnitude(f) > lam) * f.grid.cell_volume)


def _weak_from(r: Rearrangement, p: float) -> float:
    if r.values.size == 0:
        return 0.0
    cands = r.values * r.cumulative_measure ** (1.0 / p)
    return float(cands.max())


def weak_lp_norm(f: ScalarField | VectorField, p: float) -> float:
    """``sup_lam lam |{|f| > lam}|^{1/p}``, attained at a sample value."""
    if not p > 1:
        raise ValueError(f"weak L^p needs p > 1, got {p}")
    if np.isinf(p):
        return float(magnitude(f).max())
    return _weak_from(rearrange(f), p)


def lorentz_norm(f: ScalarField | VectorField, p: float, q: float) -> float:
    """L^{p,q} quasi-norm ``(int_0^inf (t^{1/p} f*(t))^q dt/t)^{1/q}``.

    Each step of ``f*`` integrates in closed form:
    ``v^q (p/q) [((k+1)h)^{q/p} - (kh)^{q/p}]``.
    """
    if not p > 1:
        raise ValueError(f"Lorentz norm needs p > 1, got {p}")
    if np.isinf(q):
        return weak_lp_norm(f, p)
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    r = rearrange(f)
    edges = np.arange(r.values.size + 1) * r.cell_volume
    weights = np.diff(edges ** (q / p)) * (p / q)
    return float(np.sum(r.values**q * weights) ** (1.0 / q))


# -- inequality harnesses ------------------------------------------------------


@dataclass(frozen=True)
class GNReport:
    p: float
    lhs: float
    rhs: float
    alpha: float
    degenerate: bool = False

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else np.inf


def _grad_l2(f: ScalarField | VectorField) -> float:
    data = f.data if isinstance(f, VectorField) else f.data[None]
    g = gradient_tensor(f.grid, data)
    return float(np.sqrt(np.sum(g * g) * f.grid.cell_volume))


def check_gn(f: ScalarField, p: float) -> GNReport:
    """Compare ``||f||_p`` with ``||f||_2^a ||grad f||_2^{1-a}``, ``a = (6-p)/(2p)``."""
    if not 2 <= p <= 6:
        raise ValueError("Gagliardo-Nirenberg check needs p in [2, 6]")
    alpha = (6.0 - p) / (2.0 * p)
    lhs = lp_norm(f, p)
    l2 = lp_norm(f, 2)
    g2 = _grad_l2(f)
    if l2 == 0.0:
        return GNReport(p, 0.0, 0.0, alpha, degenerate=True)
    rhs = l2**alpha * g2 ** (1.0 - alpha) if alpha < 1 else l2
    return GNReport(p, lhs, rhs, alpha)


@dataclass(frozen=True)
class EmbeddingReport:
    lhs: float
    grad_term: float
    weak_norm: float
    l2_sq: float
    epsilon: float
    s: float
    constant: float

    @property
    def rhs(self) -> float:
        return self.grad_term + self.constant * (self.weak_norm**self.s + 1.0) * self.l2_sq

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def required_constant(self) -> float:
        """Smallest C(eps) making the slack non-negative for this pair."""
        denom = (self.weak_norm**self.s + 1.0) * self.l2_sq
        excess = self.lhs - self.grad_term
        if excess <= 0:
            return 0.0
        return excess / denom if denom > 0 else np.inf


def serrin_exponent(r: float) -> float:
    """Time exponent s with 2/s + 3/r = 1."""
    if np.isinf(r):
        return 2.0
    return 2.0 * r / (r - 3.0)


def check_weak_embedding(
    f: ScalarField | VectorField,
    g: ScalarField,
    r: float,
    epsilon: float,
    constant: float = 1.0,
    s: float | None = None,
) -> EmbeddingReport:
    """Both sides of ``||f g||_2^2 <= eps||grad g||^2 + C (||f||_{L^r_w}^s + 1)||g||_2^2``."""
    if not r > 3:
        raise ValueError("weak embedding requires r > 3")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    s = serrin_exponent(r) if s is None else s
    fg = magnitude(f) * g.data
    lhs = float(np.sum(fg * fg) * g.grid.cell_volume)
    grad_term = epsilon * _grad_l2(g) ** 2
    return EmbeddingReport(
        lhs=lhs,
        grad_term=grad_term,
        weak_norm=weak_lp_norm(f, r),
        l2_sq=lp_norm(g, 2) ** 2,
        epsilon=epsilon,
        s=s,
        constant=constant,
    )


@dataclass(frozen=True)
class HolderReport:
    product_norm: float
    f_norm: float
    g_norm: float
    p: float
    q: float

    @property
    def ratio(self) -> float:
        denom = self.f_norm * self.g_norm
        return self.product_norm / denom if denom > 0 else np.inf


def check_lorentz_holder(f, g, p1, q1, p2, q2) -> HolderReport:
    """Ratio ``||fg||_{L^{p,q}} / (||f||_{L^{p1,q1}} ||g||_{L^{p2,q2}})``."""
    inv_p = 1.0 / p1 + 1.0 / p2
    if not (p1 > 1 and p2 > 1 and 0 < inv_p < 1):
        raise ValueError("need 1/p = 1/p1 + 1/p2 < 1 with p1, p2 > 1")
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    p = 1.0 / inv_p
    q = min(q1, q2)
    prod = ScalarField(f.grid, magnitude(f) * magnitude(g))
    return HolderReport(
        product_norm=lorentz_norm(prod, p, q),
        f_norm=lorentz_norm(f, p1, q1),
        g_norm=lorentz_norm(g, p2, q2),
        p=p,
        q=q,
    )


def indicator(grid: Grid, mask: np.ndarray, value: float = 1.0) -> ScalarField:
    return ScalarField(grid, np.where(mask, value, 0.0))
