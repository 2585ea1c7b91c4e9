"""Time integration of the nonhomogeneous heat-conducting MHD system.

Velocity form::

    rho_t + u.grad rho = 0
    rho (u_t + u.grad u) - mu Lap u + grad P = H.grad H
    c_v rho (theta_t + u.grad theta) - kappa Lap theta = 2 mu |D(u)|^2 + nu |curl H|^2
    H_t + u.grad H - H.grad u = nu Lap H
    div u = div H = 0

u, H and theta are advanced with a Lawson (integrating factor) Runge-Kutta
scheme: the constant-coefficient diffusion ``mu/rho_mean``, ``nu`` and
``kappa/(c_v rho_mean)`` is integrated exactly per Fourier mode and the rest
is explicit.  Density is transported semi-Lagrangian and clamped to its
incoming range.  Quadratic advection products are dealiased with the 2/3
rule; the heating source is left unmasked so that it stays pointwise
non-negative.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .fields import (
    Grid,
    NonFiniteFieldError,
    ScalarField,
    VectorField,
    div_hat,
    grad_hat,
    magnitude,
    project_hat,
)

log = logging.getLogger(__name__)

__all__ = [
    "PhysicalConstants",
    "SchemeConfig",
    "SubstepScheme",
    "State",
    "StepReport",
    "SolverFault",
    "VacuumFault",
    "NaNFault",
    "advect_density",
    "momentum_rhs",
    "induction_rhs",
    "temperature_rhs",
    "pressure",
    "cfl_dt",
    "step",
    "step_with_report",
]


class SolverFault(RuntimeError):
    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class VacuumFault(SolverFault):
    """Division by a vanishing density with ``density_floor == 0``."""


class NaNFault(SolverFault):
    """A step produced non-finite values."""


@dataclass(frozen=True)
class PhysicalConstants:
    mu: float = 0.05
    nu: float = 0.05
    c_v: float = 1.0
    kappa: float = 0.1

    def __post_init__(self):
        for name in ("mu", "nu", "c_v", "kappa"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


class SubstepScheme(str, enum.Enum):
    rk2_imex = "rk2_imex"
    rk3_imex = "rk3_imex"

    @property
    def order(self) -> int:
        return 2 if self is SubstepScheme.rk2_imex else 3


@dataclass(frozen=True)
class SchemeConfig:
    cfl_number: float = 0.5
    density_floor: float | None = None  # None: floor_fraction * max(rho)
    floor_fraction: float = 1e-6
    dealias: bool = True
    max_dt: float = 1e-2
    substep_scheme: SubstepScheme = SubstepScheme.rk3_imex
    fixed_dt: float | None = None
    max_courant: float = 1.0
    pressure_tol: float = 1e-12
    pressure_maxiter: int = 500

    def __post_init__(self):
        if not 0 < self.cfl_number <= 1:
            raise ValueError("cfl_number must lie in (0, 1]")
        if self.density_floor is not None and self.density_floor < 0:
            raise ValueError("density_floor must be >= 0")
        if not 0 <= self.floor_fraction < 1:
            raise ValueError("floor_fraction must lie in [0, 1)")
        if not self.max_dt > 0:
            raise ValueError("max_dt must be positive")
        if self.fixed_dt is not None and not self.fixed_dt > 0:
            raise ValueError("fixed_dt must be positive")
        object.__setattr__(self, "substep_scheme", SubstepScheme(self.substep_scheme))

    def floor_for(self, rho: np.ndarray) -> float:
        if self.density_floor is not None:
            return self.density_floor
        return self.floor_fraction * float(rho.max())


@dataclass(eq=False)
class State:
    rho: ScalarField
    u: VectorField
    H: VectorField
    theta: ScalarField
    time: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def copy(self) -> State:
        return State(
            ScalarField(self.grid, self.rho.data.copy()),
            VectorField(self.grid, self.u.data.copy(), solenoidal=self.u.solenoidal),
            VectorField(self.grid, self.H.data.copy(), solenoidal=self.H.solenoidal),
            ScalarField(self.grid, self.theta.data.copy()),
            self.time,
        )

    @classmethod
    def zeros(cls, grid: Grid, rho: float = 1.0) -> State:
        return cls(
            ScalarField(grid, np.full(grid.shape, rho)),
            VectorField.zeros(grid),
            VectorField.zeros(grid),
            ScalarField.zeros(grid),
        )

    def bitwise_equal(self, other: State) -> bool:
        return (
            self.grid == other.grid
            and np.float64(self.time).tobytes() == np.float64(other.time).tobytes()
            and all(
                np.array_equal(a.data.view(np.uint64), b.data.view(np.uint64))
                for a, b in zip(self._fields(), other._fields())
            )
        )

    def _fields(self):
        return (self.rho, self.u, self.H, self.theta)


@dataclass
class StepReport:
    dt: float
    theta_min_before_clip: float
    theta_max: float
    clipped_mass: float
    pressure_iterations: int = 0
    extra: dict = field(default_factory=dict)


# -- density transport -----------------------------------------------------


def advect_density(
    rho: ScalarField, u: VectorField, dt: float, max_courant: float = 1.0
) -> ScalarField:
    """Semi-Lagrangian step of ``rho_t + u.grad rho = 0``.

    Departure points come from a midpoint backtrace through the frozen
    velocity ``u``; the density is then sampled with periodic cubic-spline
    interpolation and clamped to the incoming ``[min rho, max rho]``.
    """
    grid = rho.grid
    if dt < 0:
        raise ValueError("dt must be non-negative")
    umax = float(magnitude(u).max())
    if dt * umax > max_courant * grid.spacing * (1 + 1e-12):
        raise ValueError(
            f"dt={dt:g} exceeds the Courant bound {max_courant} (max|u|={umax:g})"
        )
    lo, hi = float(rho.data.min()), float(rho.data.max())
    if dt == 0 or umax == 0 or lo == hi:
        return ScalarField(grid, rho.data.copy())

    h = grid.spacing
    idx = np.indices(grid.shape, dtype=float)
    # u(x - dt/2 u, t) ~ u - dt/2 (u.grad)u, accurate enough for the midpoint backtrace
    u_mid = u.data - 0.5 * dt * _advect(u.data, _grad_tensor(grid, grid.fft(u.data)))
    dep = (idx - dt * u_mid / h).reshape(3, -1)
    rho_coeffs = ndimage.spline_filter(rho.data, order=3, mode="grid-wrap")
    out = ndimage.map_coordinates(rho_coeffs, dep, order=3, mode="grid-wrap", prefilter=False)
    out = out.reshape(grid.shape)
    np.clip(out, lo, hi, out=out)
    return ScalarField(grid, out)


# -- right-hand sides ------------------------------------------------------


def _grad_tensor(grid: Grid, v_hat: np.ndarray) -> np.ndarray:
    """``out[i, j] = d_j v_i`` from the spectrum of a vector field."""
    kx, ky, kz = grid.k
    return grid.ifft(np.stack([1j * kx * v_hat, 1j * ky * v_hat, 1j * kz * v_hat], axis=1))


def _advect(a: np.ndarray, grad_b: np.ndarray) -> np.ndarray:
    """``(a . grad) b`` given ``grad_b[i, j] = d_j b_i``."""
    return np.einsum("j...,ij...->i...", a, grad_b)


class _Kernel:
    """Evaluates the explicit right-hand sides for one density snapshot."""

    def __init__(self, grid: Grid, rho: np.ndarray, constants: PhysicalConstants,
                 config: SchemeConfig, floor: float, rho_ref: float, time: float = 0.0,
                 phi_guess: np.ndarray | None = None):
        self.grid = grid
        self.c = constants
        self.config = config
        if floor == 0.0 and float(rho.min()) <= 0.0:
            raise VacuumFault("vacuum (rho = 0) with density_floor = 0", time)
        self.rho = rho
        self.rho_f = np.maximum(rho, floor)
        self.constant_rho = float(self.rho_f.max()) == float(self.rho_f.min())
        self.rho_ref = rho_ref
        self.sigma = 1.0 / self.rho_f
        self.mask = grid.dealias_mask if config.dealias else 1.0
        self.pressure_iterations = 0
        self._phi = phi_guess

    def evaluate(self, u_hat, H_hat, th_hat, split: bool = True):
        """Return spectral (N_u, N_H, N_theta).

        With ``split`` the constant-coefficient diffusion handled by the
        integrating factor is excluded.
        """
        grid, c, mask = self.grid, self.c, self.mask
        u = grid.ifft(u_hat)
        H = grid.ifft(H_hat)
        gu = _grad_tensor(grid, u_hat)
        gH = _grad_tensor(grid, H_hat)
        gth = grid.ifft(grad_hat(grid, th_hat))

        u_adv_u = _advect(u, gu)
        H_adv_H = _advect(H, gH)
        u_adv_H = _advect(u, gH)
        H_adv_u = _advect(H, gu)
        u_adv_th = np.einsum("j...,j...->...", u, gth)

        k2 = grid.k_squared
        # induction
        NH_hat = project_hat(grid, mask * grid.fft(H_adv_u - u_adv_H))
        if not split:
            NH_hat = NH_hat - c.nu * k2 * H_hat

        # heating, pointwise non-negative
        sym = 0.5 * (gu + gu.transpose(1, 0, 2, 3, 4))
        curlH = np.stack([gH[2, 1] - gH[1, 2], gH[0, 2] - gH[2, 0], gH[1, 0] - gH[0, 1]])
        heat = 2 * c.mu * np.einsum("ij...,ij...->...", sym, sym) + c.nu * np.einsum(
            "i...,i...->...", curlH, curlH
        )

        adv_u_hat = mask * grid.fft(u_adv_u)
        lorentz_hat = mask * grid.fft(H_adv_H)
        adv_th_hat = mask * grid.fft(u_adv_th)
        mu_eff = 0.0 if split else c.mu / self.rho_ref
        kap_eff = 0.0 if split else c.kappa / (c.c_v * self.rho_ref)
        mu_ref = c.mu / self.rho_ref
        kap_ref = c.kappa / (c.c_v * self.rho_ref)

        if self.constant_rho:
            r = float(self.rho_f.flat[0])
            rho_ratio = float(self.rho.flat[0]) / r
            Nu_hat = project_hat(grid, -adv_u_hat + lorentz_hat / r)
            Nu_hat = Nu_hat - (c.mu / r - mu_ref + mu_eff) * k2 * u_hat
            Nth_hat = (
                -rho_ratio * adv_th_hat
                + grid.fft(heat) / (c.c_v * r)
                - (c.kappa / (c.c_v * r) - kap_ref + kap_eff) * k2 * th_hat
            )
            return Nu_hat, NH_hat, Nth_hat

        lap_u = grid.ifft(-k2 * u_hat)
        adv_u = grid.ifft(adv_u_hat)
        lorentz = grid.ifft(lorentz_hat)
        g = -adv_u + (lorentz + c.mu * lap_u) * self.sigma - (mu_ref - mu_eff) * lap_u
        g_hat = grid.fft(g)
        phi = self._solve_pressure(div_hat(grid, g_hat))
        grad_phi = grid.ifft(grad_hat(grid, grid.fft(phi)))
        Nu_hat = project_hat(grid, grid.fft(g - self.sigma * grad_phi))

        lap_th = grid.ifft(-k2 * th_hat)
        adv_th = grid.ifft(adv_th_hat)
        th_rhs = (
            -self.rho * self.sigma * adv_th
            + (c.kappa * lap_th + heat) * self.sigma / c.c_v
            - (kap_ref - kap_eff) * lap_th
        )
        return Nu_hat, NH_hat, grid.fft(th_rhs)

    def _solve_pressure(self, b_hat):
        """Conjugate gradients for ``div(sigma grad phi) = b`` on zero-mean fields.

        Iterates on rfft coefficients (inner products carry the Hermitian
        weights) and is preconditioned with the inverse of ``mean(sigma) Lap``.
        Returns phi in physical space.
        """
        grid = self.grid
        sigma = self.sigma
        sbar = float(sigma.mean())
        inv = grid.inv_kd_squared
        w = grid.rfft_weights

        def dot(a, b):
            return float(np.sum(w * (a.real * b.real + a.imag * b.imag)))

        def apply_neg(x_hat):
            gp = grid.ifft(grad_hat(grid, x_hat))
            return -div_hat(grid, grid.fft(sigma * gp))

        b = -b_hat.copy()
        b[0, 0, 0] = 0.0
        bnorm = np.sqrt(dot(b, b))
        x = np.zeros_like(b) if self._phi is None else grid.fft(self._phi)
        if bnorm == 0.0:
            return grid.ifft(x)
        r = b - apply_neg(x)
        z = r * inv / sbar
        p = z.copy()
        rz = dot(r, z)
        tol = self.config.pressure_tol * bnorm
        for _ in range(self.config.pressure_maxiter):
            if np.sqrt(dot(r, r)) <= tol:
                break
            Ap = apply_neg(p)
            alpha = rz / dot(p, Ap)
            x += alpha * p
            r -= alpha * Ap
            self.pressure_iterations += 1
            z = r * inv / sbar
            rz_new = dot(r, z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        else:
            log.warning("pressure solve hit maxiter (residual %.3e)", np.sqrt(dot(r, r)) / bnorm)
        x[0, 0, 0] = 0.0
        phi = grid.ifft(x)
        self._phi = phi
        return phi


def _kernel_for(state: State, constants, config, floor=None, rho_ref=None) -> _Kernel:
    rho = state.rho.data
    floor = config.floor_for(rho) if floor is None else floor
    rho_f = np.maximum(rho, floor)
    rho_ref = float(rho_f.mean()) if rho_ref is None else rho_ref
    return _Kernel(state.grid, rho, constants, config, floor, rho_ref, state.time)


def _spectra(state: State):
    g = state.grid
    return g.fft(state.u.data), g.fft(state.H.data), g.fft(state.theta.data)


def momentum_rhs(state: State, constants: PhysicalConstants, config: SchemeConfig = SchemeConfig(),
                 split: bool = False) -> VectorField:
    """du/dt, projected onto divergence-free fields (density-weighted when rho varies)."""
    k = _kernel_for(state, constants, config)
    Nu, _, _ = k.evaluate(*_spectra(state), split=split)
    return VectorField(state.grid, state.grid.ifft(Nu), solenoidal=True)


def induction_rhs(state: State, constants: PhysicalConstants, config: SchemeConfig = SchemeConfig(),
                  split: bool = False) -> VectorField:
    grid = state.grid
    mask = grid.dealias_mask if config.dealias else 1.0
    u_hat, H_hat, _ = _spectra(state)
    u, H = state.u.data, state.H.data
    stretch = _advect(H, _grad_tensor(grid, u_hat)) - _advect(u, _grad_tensor(grid, H_hat))
    out = project_hat(grid, mask * grid.fft(stretch))
    if not split:
        out = out - constants.nu * grid.k_squared * H_hat
    return VectorField(grid, grid.ifft(out), solenoidal=True)


def temperature_rhs(state: State, constants: PhysicalConstants, config: SchemeConfig = SchemeConfig(),
                    split: bool = False) -> ScalarField:
    k = _kernel_for(state, constants, config)
    _, _, Nth = k.evaluate(*_spectra(state), split=split)
    return ScalarField(state.grid, state.grid.ifft(Nth))


def pressure(state: State, constants: PhysicalConstants, config: SchemeConfig = SchemeConfig()) -> ScalarField:
    """Zero-mean pressure P with ``div(grad P / rho) = div((mu Lap u + H.grad H)/rho - u.grad u)``."""
    grid = state.grid
    k = _kernel_for(state, constants, config)
    u_hat, H_hat, _ = _spectra(state)
    adv = _advect(state.u.data, _grad_tensor(grid, u_hat))
    lor = _advect(state.H.data, _grad_tensor(grid, H_hat))
    if config.dealias:
        adv, lor = grid.dealias(adv), grid.dealias(lor)
    lap = grid.ifft(-grid.k_squared * u_hat)
    g = -adv + (lor + constants.mu * lap) * k.sigma
    phi = k._solve_pressure(div_hat(grid, grid.fft(g)))
    return ScalarField(grid, phi)


# -- time step -------------------------------------------------------------


def cfl_dt(state: State, config: SchemeConfig, constants: PhysicalConstants | None = None) -> float:
    """Strict minimum of the advective, Alfven and diffusion-remainder limits and max_dt."""
    grid = state.grid
    h = grid.spacing
    candidates = [config.max_dt]
    umax = float(magnitude(state.u).max())
    if umax > 0:
        candidates.append(config.cfl_number * h / umax)
    rho = state.rho.data
    floor = config.floor_for(rho)
    rho_low = max(float(rho.min()), floor)
    hmax = float(magnitude(state.H).max())
    if hmax > 0 and rho_low > 0:
        candidates.append(config.cfl_number * h / (hmax / np.sqrt(rho_low)))
    if constants is not None and float(rho.max()) != float(rho.min()) and rho_low > 0:
        rho_f = np.maximum(rho, floor)
        inv_ref = 1.0 / float(rho_f.mean())
        spread = max(abs(1.0 / rho_low - inv_ref), abs(1.0 / float(rho_f.max()) - inv_ref))
        diff = spread * max(constants.mu, constants.kappa / constants.c_v)
        if diff > 0:
            candidates.append(config.cfl_number / (diff * grid.max_wavenumber**2))
    return float(min(candidates))


def step(state: State, config: SchemeConfig, constants: PhysicalConstants, dt: float | None = None) -> State:
    return step_with_report(state, config, constants, dt)[0]


def step_with_report(state: State, config: SchemeConfig, constants: PhysicalConstants,
                     dt: float | None = None, floor: float | None = None) -> tuple[State, StepReport]:
    """One IMEX step; returns the new state and the clip/iteration report.

    Raises VacuumFault (zero floor over vacuum) or NaNFault (non-finite values).
    """
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return _step(state, config, constants, dt, floor)
    except NonFiniteFieldError as exc:
        raise NaNFault(f"non-finite values during step at t={state.time:g}: {exc}", state.time) from None


def _step(state, config, constants, dt, floor):
    grid = state.grid
    if dt is None:
        dt = config.fixed_dt if config.fixed_dt is not None else cfl_dt(state, config, constants)
    rho0 = state.rho
    floor = config.floor_for(rho0.data) if floor is None else floor
    rho_ref = float(np.maximum(rho0.data, floor).mean())
    c = constants
    k2 = grid.k_squared
    decay = np.stack([
        np.broadcast_to(c.mu / rho_ref * k2, k2.shape),
        np.broadcast_to(c.nu * k2, k2.shape),
        np.broadcast_to(c.kappa / (c.c_v * rho_ref) * k2, k2.shape),
    ])
    # component -> decay row: u (3), H (3), theta (1)
    rows = np.array([0, 0, 0, 1, 1, 1, 2])

    def E(tau):
        return np.exp(-decay[rows] * tau)

    Y0 = np.concatenate([grid.fft(state.u.data), grid.fft(state.H.data), grid.fft(state.theta.data)[None]])
    iterations = 0
    phi = None  # pressure warm start, reused across the stages of this step only

    def N(Y, rho):
        nonlocal iterations, phi
        kern = _Kernel(grid, rho.data, c, config, floor, rho_ref, state.time, phi)
        Nu, NH, Nth = kern.evaluate(Y[0:3], Y[3:6], Y[6])
        iterations += kern.pressure_iterations
        phi = kern._phi
        return np.concatenate([Nu, NH, Nth[None]])

    def proj(Y):
        Y[0:3] = project_hat(grid, Y[0:3])
        Y[3:6] = project_hat(grid, Y[3:6])
        return Y

    def phys_u(Y):
        return VectorField(grid, grid.ifft(Y[0:3]))

    mc = config.max_courant
    if config.substep_scheme is SubstepScheme.rk2_imex:
        E1 = E(dt)
        k1 = N(Y0, rho0)
        Y1 = proj(E1 * (Y0 + dt * k1))
        rho1 = advect_density(rho0, state.u, dt, mc)
        k2_ = N(Y1, rho1)
        Yn = proj(E1 * Y0 + 0.5 * dt * (E1 * k1 + k2_))
        u_mid = VectorField(grid, 0.5 * (state.u.data + grid.ifft(Y1[0:3])))
        rho_n = advect_density(rho0, u_mid, dt, mc)
    else:
        Eh, E1 = E(0.5 * dt), E(dt)
        k1 = N(Y0, rho0)
        Ya = proj(Eh * (Y0 + 0.5 * dt * k1))
        rho_a = advect_density(rho0, state.u, 0.5 * dt, mc)
        k2_ = N(Ya, rho_a)
        Yb = proj(E1 * Y0 + dt * (-E1 * k1 + 2 * Eh * k2_))
        rho_n = advect_density(rho0, phys_u(Ya), dt, mc)
        k3 = N(Yb, rho_n)
        Yn = proj(E1 * Y0 + dt / 6.0 * (E1 * k1 + 4 * Eh * k2_ + k3))

    phys = grid.ifft(Yn)
    if not np.all(np.isfinite(phys)):
        raise NaNFault(f"non-finite values after step at t={state.time:g}", state.time)
    theta = phys[6]
    th_min = float(theta.min())
    th_max = float(theta.max())
    neg = np.minimum(theta, 0.0)
    clipped = float(-np.sum(rho_n.data * neg) * grid.cell_volume)
    theta = np.maximum(theta, 0.0)
    new = State(
        rho=rho_n,
        u=VectorField(grid, phys[0:3], solenoidal=True),
        H=VectorField(grid, phys[3:6], solenoidal=True),
        theta=ScalarField(grid, theta),
        time=state.time + dt,
    )
    return new, StepReport(dt, th_min, th_max, clipped, iterations)


def with_time(state: State, time: float) -> State:
    return replace(state, time=time)
