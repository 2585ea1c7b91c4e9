"""Binary checkpoints.

Layout (little endian): magic ``b"MHD3"``, u32 version, u32 n, then f64
L, time, mu, nu, c_v, kappa, then the arrays rho, u_x, u_y, u_z, H_x, H_y,
H_z, theta as f64 with x varying fastest.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, VectorField
from .solver import PhysicalConstants, State

__all__ = [
    "MAGIC",
    "VERSION",
    "CheckpointError",
    "BadMagicError",
    "VersionMismatchError",
    "TruncatedCheckpointError",
    "GridMismatchError",
    "Checkpoint",
    "checkpoint_save",
    "checkpoint_load",
    "read_checkpoint",
]

MAGIC = b"MHD3"
VERSION = 1
_HEADER = struct.Struct("<4sII6d")
_N_ARRAYS = 8


class CheckpointError(ValueError):
    pass


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class GridMismatchError(CheckpointError):
    pass


@dataclass(eq=False)
class Checkpoint:
    state: State
    constants: PhysicalConstants


def _to_bytes(a: np.ndarray) -> bytes:
    return np.asarray(a, dtype="<f8").tobytes(order="F")


def checkpoint_save(state: State, path: str | Path,
                    constants: PhysicalConstants = PhysicalConstants()) -> Path:
    """Write atomically (temp file then rename)."""
    path = Path(path)
    grid = state.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.n, grid.box_length, state.time,
                          constants.mu, constants.nu, constants.c_v, constants.kappa)
    arrays = [state.rho.data, *state.u.data, *state.H.data, state.theta.data]
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        for a in arrays:
            fh.write(_to_bytes(a))
    os.replace(tmp, path)
    return path


def read_checkpoint(path: str | Path, expect_grid: Grid | None = None) -> Checkpoint:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not an MHD3 checkpoint")
    if len(raw) < _HEADER.size:
        raise TruncatedCheckpointError(f"{path}: header truncated")
    _, version, n, L, time, mu, nu, c_v, kappa = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    count = n**3
    expected = _HEADER.size + _N_ARRAYS * count * 8
    if len(raw) < expected:
        raise TruncatedCheckpointError(f"{path}: {len(raw)} bytes, expected {expected}")
    if len(raw) > expected:
        raise CheckpointError(f"{path}: {len(raw) - expected} trailing bytes")
    grid = Grid(n, L)
    if expect_grid is not None and grid != expect_grid:
        raise GridMismatchError(
            f"{path}: grid (n={n}, L={L!r}) does not match (n={expect_grid.n}, L={expect_grid.box_length!r})"
        )
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=_N_ARRAYS * count)
    # C-contiguous copies: reductions then sum in the same order as live states
    arrays = [np.ascontiguousarray(flat[i * count:(i + 1) * count].reshape(grid.shape, order="F"),
                                   dtype=np.float64)
              for i in range(_N_ARRAYS)]
    state = State(
        rho=ScalarField(grid, arrays[0]),
        u=VectorField(grid, np.stack(arrays[1:4])),
        H=VectorField(grid, np.stack(arrays[4:7])),
        theta=ScalarField(grid, arrays[7]),
        time=time,
    )
    return Checkpoint(state, PhysicalConstants(mu=mu, nu=nu, c_v=c_v, kappa=kappa))


def checkpoint_load(path: str | Path, expect_grid: Grid | None = None) -> State:
    return read_checkpoint(path, expect_grid).state
