"""Random-field ensembles for the functional inequalities and the Stokes estimate.

Every ensemble draws from its own ``PCG64(seed)`` stream, so each recorded
maximum is reproducible on its own.  The maxima feed the calibration of
the bootstrap constant M.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .diagnostics import calibrate_M
from .fields import Grid, ScalarField, VectorField, lp_norm, random_bandlimited
from .lorentz import check_gn, check_lorentz_holder, check_weak_embedding, weak_lp_norm
from .stokes import verify_regularity

__all__ = [
    "EnsembleReport",
    "random_scalar",
    "weak_strong_ensemble",
    "gn_ensemble",
    "holder_ensemble",
    "embedding_ensemble",
    "stokes_ensemble",
    "run_inequality_ensembles",
]

GN_EXPONENTS = (3.0, 4.0, 5.0, 6.0)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_scalar(grid: Grid, rng: np.random.Generator) -> ScalarField:
    """Band-limited noise with random cutoff, half the time reshaped by a random power."""
    kmax = rng.uniform(1.0, grid.n / 3.0)
    data = random_bandlimited(grid, rng, kmax)
    if rng.random() < 0.5:
        data = np.sign(data) * np.abs(data) ** rng.uniform(0.5, 3.0)
    return ScalarField(grid, data)


def weak_strong_ensemble(seed: int, trials: int, n: int = 16, ps=(2.0, 4.0, 6.0)):
    """Max of ``||f||_{p,w} / ||f||_p`` per p, and the count of draws exceeding 1."""
    grid, rng = Grid(n), _rng(seed)
    worst = {p: 0.0 for p in ps}
    violations = 0
    for _ in range(trials):
        f = random_scalar(grid, rng)
        for p in ps:
            w, s = weak_lp_norm(f, p), lp_norm(f, p)
            worst[p] = max(worst[p], w / s)
            violations += w > s
    return worst, int(violations)


def gn_ensemble(seed: int, trials: int, n: int = 16, ps=GN_EXPONENTS) -> dict:
    grid, rng = Grid(n), _rng(seed)
    worst = {p: 0.0 for p in ps}
    for _ in range(trials):
        f = random_scalar(grid, rng)
        f = ScalarField(grid, f.data - f.data.mean())
        for p in ps:
            worst[p] = max(worst[p], check_gn(f, p).ratio)
    return worst


def holder_ensemble(seed: int, pairs: int, n: int = 32, exps=(6.0, np.inf, 3.0, 2.0)) -> float:
    grid, rng = Grid(n), _rng(seed)
    worst = 0.0
    for _ in range(pairs):
        f, g = random_scalar(grid, rng), random_scalar(grid, rng)
        worst = max(worst, check_lorentz_holder(f, g, *exps).ratio)
    return worst


def embedding_ensemble(seed: int, pairs: int, n: int = 32, r: float = 6.0, epsilon: float = 0.1) -> float:
    """Smallest C(eps) that makes the weak-norm embedding hold on every draw."""
    grid, rng = Grid(n), _rng(seed)
    worst = 0.0
    for _ in range(pairs):
        f, g = random_scalar(grid, rng), random_scalar(grid, rng)
        worst = max(worst, check_weak_embedding(f, g, r, epsilon).required_constant)
    return worst


def stokes_ensemble(seed: int, trials: int, n: int = 16, r: float = 2.0) -> dict:
    grid, rng = Grid(n), _rng(seed)
    out = {"ratio": 0.0, "rss_ratio": 0.0, "residual": 0.0}
    for _ in range(trials):
        F = VectorField(grid, random_bandlimited(grid, rng, rng.uniform(1.0, n / 3.0), components=3))
        rep = verify_regularity(F, r)
        out["ratio"] = max(out["ratio"], rep.ratio)
        out["rss_ratio"] = max(out["rss_ratio"], rep.rss_ratio)
        out["residual"] = max(out["residual"], rep.residual / lp_norm(F, 2))
    return out


@dataclass
class EnsembleReport:
    seed: int
    trials: int
    n: int
    weak_vs_strong_max: dict = field(default_factory=dict)
    weak_violations: int = 0
    gn_max: dict = field(default_factory=dict)
    holder_max: float = 0.0
    embedding_constant_max: float = 0.0
    stokes_r2: dict = field(default_factory=dict)
    stokes_r4: dict = field(default_factory=dict)
    M: float = 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weak_vs_strong_max"] = {str(k): v for k, v in self.weak_vs_strong_max.items()}
        d["gn_max"] = {str(k): v for k, v in self.gn_max.items()}
        return d


def run_inequality_ensembles(seed: int = 0, trials: int = 100, n: int = 16) -> EnsembleReport:
    """All ensembles at one seed; deterministic in (seed, trials, n)."""
    weak, violations = weak_strong_ensemble(seed, trials, n)
    gn = gn_ensemble(seed, trials, n)
    st2 = stokes_ensemble(seed, trials, n, 2.0)
    rep = EnsembleReport(
        seed=seed,
        trials=trials,
        n=n,
        weak_vs_strong_max=weak,
        weak_violations=violations,
        gn_max=gn,
        holder_max=holder_ensemble(seed, trials, n),
        embedding_constant_max=embedding_ensemble(seed, trials, n),
        stokes_r2=st2,
        stokes_r4=stokes_ensemble(seed, trials, n, 4.0),
    )
    rep.M = calibrate_M(gn, st2["rss_ratio"])
    return rep
