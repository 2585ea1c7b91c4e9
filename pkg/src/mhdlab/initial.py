"""Initial data for the scenario presets."""

from __future__ import annotations

import numpy as np

from .config import DensitySpec, Preset, ScenarioSpec
from .fields import Grid, ScalarField, VectorField, leray_project, random_bandlimited
from .solver import State

__all__ = ["generate_initial_data", "density_profile", "make_grid"]


def make_grid(spec: ScenarioSpec) -> Grid:
    return Grid(spec.n, spec.box_length)


def _angles(grid: Grid):
    # coordinates rescaled to [0, 2pi) so presets keep unit wavenumber for any L
    s = 2 * np.pi / grid.box_length
    x, y, z = grid.coords
    return s * x, s * y, s * z


def _periodic_offset(a, centre):
    return (a - centre + np.pi) % (2 * np.pi) - np.pi


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def density_profile(grid: Grid, d: DensitySpec) -> np.ndarray:
    x, y, z = _angles(grid)
    if d.kind == "constant":
        rho = np.full(grid.shape, d.base)
    elif d.kind == "sine":
        rho = d.base * (1.0 + d.contrast * np.sin(x) * np.sin(y) * np.sin(z))
    else:
        r2 = sum(_periodic_offset(a, np.pi) ** 2 for a in (x, y, z))
        rho = d.base + d.contrast * np.exp(-r2 / (2.0 * d.width**2))
    if d.vacuum_radius > 0:
        r = np.sqrt(sum(_periodic_offset(a, 0.0) ** 2 for a in (x, y, z)))
        rho = rho * _smoothstep((r - d.vacuum_radius) / d.vacuum_radius)
    return np.maximum(np.broadcast_to(rho, grid.shape), 0.0).copy()


def _taylor_green(grid: Grid):
    x, y, z = _angles(grid)
    u = np.stack(np.broadcast_arrays(
        np.sin(x) * np.cos(y) * np.cos(z),
        -np.cos(x) * np.sin(y) * np.cos(z),
        0.0 * x,
    ))
    return u


def _cross_field(grid: Grid):
    x, y, z = _angles(grid)
    return np.stack(np.broadcast_arrays(np.sin(z), np.sin(x), np.sin(y)))


def _beltrami(grid: Grid):
    x, y, z = _angles(grid)
    return np.stack(np.broadcast_arrays(np.sin(z), np.cos(z), 0.0 * z))


def generate_initial_data(spec: ScenarioSpec) -> State:
    """Deterministic in (spec, seed); u0 and H0 are Leray-projected."""
    grid = make_grid(spec)
    a = spec.amplitude
    rho = density_profile(grid, spec.density)
    theta = np.full(grid.shape, a.theta)
    preset = spec.preset

    if preset in (Preset.taylor_green, Preset.vacuum_blob):
        u = a.u * _taylor_green(grid)
        H = a.H * _cross_field(grid)
    elif preset is Preset.aligned_mhd_mode:
        u = a.u * _beltrami(grid)
        H = a.H * _beltrami(grid)
    elif preset is Preset.random_bandlimited:
        rng = np.random.Generator(np.random.PCG64(spec.rng_seed))
        u = a.u * random_bandlimited(grid, rng, spec.random_kmax, components=3)
        H = a.H * random_bandlimited(grid, rng, spec.random_kmax, components=3)
        s = random_bandlimited(grid, rng, spec.random_kmax)
        theta = a.theta * (1.0 + 0.5 * s / np.abs(s).max())
    elif preset is Preset.pure_heat:
        u = np.zeros((3,) + grid.shape)
        H = np.zeros((3,) + grid.shape)
        x, _, _ = _angles(grid)
        # unit offset keeps theta >= 0; the cos mode is the decaying part
        theta = a.theta * (1.0 + np.broadcast_to(np.cos(x), grid.shape))
    else:  # pragma: no cover
        raise ValueError(f"unknown preset {preset}")

    if spec.scheme.dealias:
        u, H = grid.dealias(u), grid.dealias(H)
    return State(
        rho=ScalarField(grid, rho),
        u=leray_project(VectorField(grid, u)),
        H=leray_project(VectorField(grid, H)),
        theta=ScalarField(grid, np.maximum(theta, 0.0)),
        time=0.0,
    )
