"""Steady periodic Stokes problem ``-Lap U + grad P = F, div U = 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Grid, ScalarField, VectorField, grad_hat, lp_norm, project_hat

__all__ = ["StokesSolution", "solve_stokes", "RegularityReport", "verify_regularity"]


@dataclass(eq=False)
class StokesSolution:
    velocity: VectorField
    pressure: ScalarField
    discarded_mean: np.ndarray
    """Box average of F; it has no periodic steady response and is dropped."""


def solve_stokes(F: VectorField) -> StokesSolution:
    """Modewise solve.

    ``U_hat = (I - k k^T/|k|^2) F_hat / |k|^2`` and
    ``P_hat = -i (k . F_hat) / |k|^2``, so that ``i k P_hat`` is the
    longitudinal part of ``F_hat``.  Both have zero mean.
    """
    grid = F.grid
    F_hat = F.spectrum()
    k2 = grid.k_squared
    inv_k2 = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    U_hat = project_hat(grid, F_hat) * inv_k2
    kx, ky, kz = grid.k
    P_hat = -1j * (kx * F_hat[0] + ky * F_hat[1] + kz * F_hat[2]) * grid.inv_kd_squared
    mean = F.data.mean(axis=(1, 2, 3))
    return StokesSolution(
        velocity=VectorField(grid, grid.ifft(U_hat), solenoidal=True),
        pressure=ScalarField(grid, grid.ifft(P_hat)),
        discarded_mean=mean,
    )


def stokes_residual(F: VectorField, sol: StokesSolution) -> float:
    """``||-Lap U + grad P - (F - mean F)||_2``."""
    grid = F.grid
    lap = grid.ifft(-grid.k_squared * sol.velocity.spectrum())
    gp = grid.ifft(grad_hat(grid, sol.pressure.spectrum()))
    target = F.data - sol.discarded_mean[:, None, None, None]
    return lp_norm(VectorField(grid, -lap + gp - target), 2)


def hessian(grid: Grid, v: np.ndarray) -> np.ndarray:
    """``out[l, i, j] = d_i d_j v_l`` for a (3, n, n, n) array."""
    v_hat = grid.fft(v)
    kx, ky, kz = grid.k
    ks = (kx, ky, kz)
    out = np.empty((3, 3, 3) + grid.shape)
    for i in range(3):
        for j in range(i, 3):
            d = grid.ifft(-ks[i] * ks[j] * v_hat)
            out[:, i, j] = d
            out[:, j, i] = d
    return out


@dataclass(frozen=True)
class RegularityReport:
    r: float
    hessian_norm: float
    pressure_grad_norm: float
    forcing_norm: float
    residual: float

    @property
    def ratio(self) -> float:
        """``(||Hess U||_r + ||grad P||_r) / ||F||_r``."""
        return (self.hessian_norm + self.pressure_grad_norm) / self.forcing_norm

    @property
    def rss_ratio(self) -> float:
        """``(||Hess U||_r^2 + ||grad P||_r^2)^{1/2} / ||F||_r``.

        For r = 2 this is the operator norm of an orthogonal split and is
        at most 1; the plain sum above can reach sqrt(2).
        """
        return float(np.hypot(self.hessian_norm, self.pressure_grad_norm) / self.forcing_norm)


def verify_regularity(F: VectorField, r: float = 2.0) -> RegularityReport:
    if not 1 < r < np.inf:
        raise ValueError("r must lie in (1, inf)")
    norm_F = lp_norm(F, r)
    if norm_F == 0.0:
        raise ValueError("degenerate forcing: F is identically zero")
    grid = F.grid
    sol = solve_stokes(F)
    hess = hessian(grid, sol.velocity.data)
    hess_mag = np.sqrt(np.einsum("lij...,lij...->...", hess, hess))
    gp = grid.ifft(grad_hat(grid, sol.pressure.spectrum()))
    return RegularityReport(
        r=r,
        hessian_norm=lp_norm(ScalarField(grid, hess_mag), r),
        pressure_grad_norm=lp_norm(VectorField(grid, gp), r),
        forcing_norm=norm_F,
        residual=stokes_residual(F, sol),
    )
