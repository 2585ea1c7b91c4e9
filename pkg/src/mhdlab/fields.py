"""Periodic grid, sampled fields and spectral differential operators.

Arrays are indexed ``[ix, iy, iz]``; serialisation flattens them in
Fortran order so that x varies fastest.  Transforms are real-to-complex
over the last three axes, forward unnormalised and inverse scaled by
``1/n**3`` (the numpy/scipy "backward" convention).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "NonFiniteFieldError",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "leray_project",
    "deformation_heating",
    "lp_norm",
    "magnitude",
    "random_bandlimited",
]

THREADS_ENV = "MHDLAB_THREADS"


def fft_workers() -> int:
    value = os.environ.get(THREADS_ENV)
    return max(1, int(value)) if value else 1


class NonFiniteFieldError(ValueError):
    """A field contains NaN or Inf samples."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform ``n**3`` periodic discretisation of a cube of side ``box_length``."""

    n: int
    box_length: float = 2 * np.pi

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.n == other.n
            and self.box_length == other.box_length
        )

    def __hash__(self):
        return hash((self.n, self.box_length))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, x, indexing="ij", sparse=True)

    @cached_property
    def _wavenumbers(self):
        n = self.n
        scale = 2 * np.pi / self.box_length
        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.arange(n // 2 + 1, dtype=float)
        # first-derivative symbols drop the (unpaired) Nyquist mode
        full_d = full.copy()
        full_d[n // 2] = 0.0
        half_d = half.copy()
        half_d[n // 2] = 0.0
        kx = (scale * full_d)[:, None, None]
        ky = (scale * full_d)[None, :, None]
        kz = (scale * half_d)[None, None, :]
        k2 = (
            (scale * full)[:, None, None] ** 2
            + (scale * full)[None, :, None] ** 2
            + (scale * half)[None, None, :] ** 2
        )
        kd2 = kx**2 + ky**2 + kz**2
        inv_kd2 = np.zeros_like(kd2)
        np.divide(1.0, kd2, out=inv_kd2, where=kd2 > 0)
        cutoff = n / 3.0
        mask = (
            (np.abs(full)[:, None, None] < cutoff)
            & (np.abs(full)[None, :, None] < cutoff)
            & (half[None, None, :] < cutoff)
        )
        return (kx, ky, kz), k2, kd2, inv_kd2, mask

    @property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable first-derivative wavenumbers (Nyquist zeroed)."""
        return self._wavenumbers[0]

    @property
    def k_squared(self) -> np.ndarray:
        """|k|^2 including the Nyquist mode; symbol of -Laplacian."""
        return self._wavenumbers[1]

    @property
    def kd_squared(self) -> np.ndarray:
        return self._wavenumbers[2]

    @property
    def inv_kd_squared(self) -> np.ndarray:
        """1/|k|^2 of the derivative symbols, 0 where that vanishes."""
        return self._wavenumbers[3]

    @property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps modes with every |k_i| < n/3 (in index units)."""
        return self._wavenumbers[4]

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each rfft coefficient in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = w[-1] = 1.0
        return np.broadcast_to(w[None, None, :], (self.n, self.n, self.n // 2 + 1))

    @property
    def max_wavenumber(self) -> float:
        return np.sqrt(self.k_squared.max())

    def fft(self, a: np.ndarray) -> np.ndarray:
        return sfft.rfftn(a, axes=(-3, -2, -1), workers=fft_workers())

    def ifft(self, a_hat: np.ndarray) -> np.ndarray:
        return sfft.irfftn(a_hat, s=self.shape, axes=(-3, -2, -1), workers=fft_workers())

    def dealias(self, a: np.ndarray) -> np.ndarray:
        return self.ifft(self.fft(a) * self.dealias_mask)

    def integrate(self, a: np.ndarray) -> float:
        """Rectangle-rule integral of a scalar sample array over the box."""
        return float(np.sum(a) * self.cell_volume)


def _check_finite(data: np.ndarray):
    if not np.all(np.isfinite(data)):
        raise NonFiniteFieldError("field contains non-finite samples")


@dataclass(eq=False)
class ScalarField:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {self.data.shape}")
        _check_finite(self.data)

    @classmethod
    def zeros(cls, grid: Grid) -> ScalarField:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> ScalarField:
        x, y, z = grid.coords
        return cls(grid, np.broadcast_to(fn(x, y, z), grid.shape).copy())

    @property
    def samples(self) -> np.ndarray:
        """Flat samples, x fastest."""
        return self.data.ravel(order="F")

    def spectrum(self) -> np.ndarray:
        return self.grid.fft(self.data)

    def __add__(self, other):
        return ScalarField(self.grid, self.data + _data(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.data - _data(other))

    def __mul__(self, c):
        return ScalarField(self.grid, self.data * _data(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.data)


@dataclass(eq=False)
class VectorField:
    grid: Grid
    data: np.ndarray
    solenoidal: bool = field(default=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (3,) + self.grid.shape:
            raise ValueError(
                f"expected shape {(3,) + self.grid.shape}, got {self.data.shape}"
            )
        _check_finite(self.data)

    @classmethod
    def zeros(cls, grid: Grid) -> VectorField:
        return cls(grid, np.zeros((3,) + grid.shape), solenoidal=True)

    @classmethod
    def from_components(cls, grid: Grid, fx, fy, fz) -> VectorField:
        x, y, z = grid.coords
        comps = [np.broadcast_to(f(x, y, z), grid.shape) for f in (fx, fy, fz)]
        return cls(grid, np.stack(comps))

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return tuple(ScalarField(self.grid, c) for c in self.data)

    def spectrum(self) -> np.ndarray:
        return self.grid.fft(self.data)

    def __add__(self, other):
        return VectorField(self.grid, self.data + _data(other))

    def __sub__(self, other):
        return VectorField(self.grid, self.data - _data(other))

    def __mul__(self, c):
        return VectorField(self.grid, self.data * _data(c), solenoidal=self.solenoidal)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.grid, -self.data, solenoidal=self.solenoidal)


def _data(x):
    return x.data if isinstance(x, (ScalarField, VectorField)) else x


# -- array-level kernels (shared with the solver) ---------------------------


def grad_hat(grid: Grid, f_hat: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.k
    return np.stack([1j * kx * f_hat, 1j * ky * f_hat, 1j * kz * f_hat])


def div_hat(grid: Grid, v_hat: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.k
    return 1j * (kx * v_hat[0] + ky * v_hat[1] + kz * v_hat[2])


def curl_hat(grid: Grid, v_hat: np.ndarray) -> np.ndarray:
    kx, ky, kz = grid.k
    return 1j * np.stack(
        [
            ky * v_hat[2] - kz * v_hat[1],
            kz * v_hat[0] - kx * v_hat[2],
            kx * v_hat[1] - ky * v_hat[0],
        ]
    )


def project_hat(grid: Grid, v_hat: np.ndarray) -> np.ndarray:
    """Modewise v - k (k.v)/|k|^2; the zero mode passes through."""
    kx, ky, kz = grid.k
    kdotv = (kx * v_hat[0] + ky * v_hat[1] + kz * v_hat[2]) * grid.inv_kd_squared
    return np.stack([v_hat[0] - kx * kdotv, v_hat[1] - ky * kdotv, v_hat[2] - kz * kdotv])


def gradient_tensor(grid: Grid, v: np.ndarray) -> np.ndarray:
    """``out[i, j] = d v_i / d x_j`` for a (3, n, n, n) array."""
    v_hat = grid.fft(v)
    kx, ky, kz = grid.k
    g_hat = np.stack([1j * kx * v_hat, 1j * ky * v_hat, 1j * kz * v_hat], axis=1)
    return grid.ifft(g_hat)


# -- field-level operators ---------------------------------------------------


def gradient(f: ScalarField) -> VectorField:
    grid = f.grid
    return VectorField(grid, grid.ifft(grad_hat(grid, f.spectrum())))


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    return ScalarField(grid, grid.ifft(div_hat(grid, v.spectrum())))


def curl(v: VectorField) -> VectorField:
    grid = v.grid
    return VectorField(grid, grid.ifft(curl_hat(grid, v.spectrum())), solenoidal=True)


def laplacian(f: ScalarField | VectorField) -> ScalarField | VectorField:
    grid = f.grid
    out = grid.ifft(-grid.k_squared * f.spectrum())
    if isinstance(f, VectorField):
        return VectorField(grid, out, solenoidal=f.solenoidal)
    return ScalarField(grid, out)


def leray_project(v: VectorField) -> VectorField:
    grid = v.grid
    return VectorField(grid, grid.ifft(project_hat(grid, v.spectrum())), solenoidal=True)


def deformation_heating(u: VectorField) -> ScalarField:
    """Pointwise |D(u)|^2 with D(u) the symmetric part of the velocity gradient."""
    g = gradient_tensor(u.grid, u.data)
    sym = 0.5 * (g + g.transpose(1, 0, 2, 3, 4))
    return ScalarField(u.grid, np.einsum("ij...,ij...->...", sym, sym))


def magnitude(f: ScalarField | VectorField | np.ndarray) -> np.ndarray:
    if isinstance(f, VectorField):
        return np.sqrt(np.einsum("i...,i...->...", f.data, f.data))
    if isinstance(f, ScalarField):
        return np.abs(f.data)
    return np.abs(np.asarray(f))


def lp_norm(f: ScalarField | VectorField, p: float) -> float:
    """Discrete L^p norm (rectangle rule); vectors use the pointwise Euclidean length."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = magnitude(f)
    if np.isinf(p):
        return float(a.max())
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * f.grid.cell_volume))
    return float((np.sum(a**p) * f.grid.cell_volume) ** (1.0 / p))


def random_bandlimited(
    grid: Grid,
    rng: np.random.Generator,
    kmax: float = 4.0,
    components: int | None = None,
    zero_mean: bool = True,
) -> np.ndarray:
    """White noise low-pass filtered to ``|k| <= kmax`` (index units), unit rms.

    Returns a (n, n, n) array, or (components, n, n, n) if ``components`` is set.
    """
    shape = grid.shape if components is None else (components,) + grid.shape
    noise = rng.standard_normal(shape)
    scale = 2 * np.pi / grid.box_length
    keep = grid.k_squared <= (kmax * scale) ** 2
    if zero_mean:
        keep = keep.copy()
        keep[0, 0, 0] = False
    out = grid.ifft(grid.fft(noise) * keep)
    rms = np.sqrt(np.mean(out * out))
    return out / rms if rms > 0 else out
