"""Grids, time grids, trajectories and the discrete calculus they share.

Space is a cell-centered tensor grid on an interval (1D) or rectangle (2D)
with homogeneous Neumann faces realised by reflecting ghost cells: the
ghost value equals the adjacent interior value, which makes the discrete
Laplacian symmetric and exactly conservative (its integral vanishes to
roundoff). Fields are plain float64 numpy arrays of shape ``grid.shape``.

Time is a uniform grid on [0, T]. A :class:`Trajectory` stores one triple
of fields per node; the same container is used for the state (mu, phi,
sigma), for sensitivities (d_mu, d_phi, d_sigma) and for adjoint
multipliers (adj_mu, adj_phi, adj_sigma), with component names bound at
construction.

Snapshots use a fixed 32-byte header (magic ``CHFLD1``, dimension, cells
per axis) followed by little-endian float64 values in row-major order.
A trajectory manifest is a JSON index of node times and snapshot paths.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import GridMismatchError, ShapeMismatchError, TimeDomainError

_SNAPSHOT_MAGIC = b"CHFLD1"
_HEADER_FMT = "<6sHII16x"  # magic, dim, n per axis (second 0 in 1D); 32 bytes
MANIFEST_FORMAT = "chcontrol-trajectory-1"


@dataclass(frozen=True)
class Grid:
    """Cell-centered tensor grid on (0, L1) or (0, L1) x (0, L2)."""

    n: tuple
    extents: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        extents = tuple(float(v) for v in self.extents)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "extents", extents)
        if len(n) not in (1, 2) or len(extents) != len(n):
            raise GridMismatchError("grid must be 1D or 2D with matching extents")
        if any(v < 3 for v in n):
            raise GridMismatchError("need at least 3 cells per axis")
        if any(v <= 0 for v in extents):
            raise GridMismatchError("extents must be positive")

    @classmethod
    def line(cls, n: int, length: float = 1.0) -> "Grid":
        return cls((n,), (length,))

    @classmethod
    def rectangle(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid":
        return cls((nx, ny), (lx, ly))

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def h(self) -> tuple:
        return tuple(l / m for l, m in zip(self.extents, self.n))

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axis_centers(self, axis: int = 0) -> np.ndarray:
        h = self.h[axis]
        return (np.arange(self.n[axis]) + 0.5) * h

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))


class TimeGrid:
    """Uniform time grid t_k = k dt on [0, T] with dt = T / nt."""

    def __init__(self, horizon: float, steps: int):
        if steps < 1:
            raise TimeDomainError("need at least one time step")
        if horizon <= 0:
            raise TimeDomainError("time horizon must be positive")
        self.horizon = float(horizon)
        self.steps = int(steps)
        self.dt = self.horizon / self.steps
        self.times = np.linspace(0.0, self.horizon, self.steps + 1)

    def __eq__(self, other):
        return (
            isinstance(other, TimeGrid)
            and other.horizon == self.horizon
            and other.steps == self.steps
        )

    def __repr__(self):
        return f"TimeGrid(horizon={self.horizon}, steps={self.steps})"

    def clamp(self, tau: float) -> float:
        if tau < -1e-12 or tau > self.horizon * (1 + 1e-12):
            raise TimeDomainError(f"time {tau} outside [0, {self.horizon}]")
        return min(max(tau, 0.0), self.horizon)

    def nearest_node(self, tau: float):
        """Snap tau to the nearest node; returns (index, snap_error)."""
        tau = self.clamp(tau)
        k = int(round(tau / self.dt))
        k = min(max(k, 0), self.steps)
        return k, abs(tau - self.times[k])


def ensure_same_grid(f: np.ndarray, g: np.ndarray) -> None:
    if f.shape != g.shape:
        raise GridMismatchError(f"field shapes differ: {f.shape} vs {g.shape}")


def laplacian_neumann(grid: Grid, f: np.ndarray, out=None) -> np.ndarray:
    """Second-order Laplacian with reflecting ghost cells (zero normal
    derivative on every face)."""
    if f.shape != grid.shape:
        raise GridMismatchError(f"field shape {f.shape} does not match grid {grid.shape}")
    h = grid.h
    if grid.dim == 1:
        return kernels.lap1d(f, 1.0 / h[0] ** 2, out)
    return kernels.lap2d(f, 1.0 / h[0] ** 2, 1.0 / h[1] ** 2, out)


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Midpoint-rule integral, cell volume times the (fixed-order) sum."""
    if f.shape != grid.shape:
        raise GridMismatchError(f"field shape {f.shape} does not match grid {grid.shape}")
    return grid.cell_volume * float(np.sum(f))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """L2 inner product of two fields on the same grid."""
    ensure_same_grid(f, g)
    return integrate(grid, f * g)


def norm2(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(max(inner(grid, f, f), 0.0)))


class Trajectory:
    """Time-indexed triple of fields with per-kind component names.

    ``data`` has shape (nframes, 3, *grid.shape). Component arrays are
    exposed as attributes named at construction, e.g. ``traj.phi[k]``.
    """

    def __init__(self, grid: Grid, time_grid: TimeGrid, data: np.ndarray, names,
                 diagnostics=None):
        names = tuple(names)
        if len(names) != 3:
            raise ShapeMismatchError("a trajectory has exactly three components")
        expected_tail = (3,) + grid.shape
        if data.ndim != len(expected_tail) + 1 or data.shape[1:] != expected_tail:
            raise ShapeMismatchError(
                f"trajectory data shape {data.shape} does not match (frames, 3, "
                f"{grid.shape})"
            )
        if data.shape[0] > time_grid.steps + 1 or data.shape[0] < 1:
            raise ShapeMismatchError(
                f"{data.shape[0]} frames incompatible with {time_grid.steps} steps"
            )
        self.grid = grid
        self.time_grid = time_grid
        self.data = data
        self.names = names
        self.diagnostics = diagnostics

    @classmethod
    def zeros(cls, grid, time_grid, names, nframes=None):
        nframes = time_grid.steps + 1 if nframes is None else nframes
        return cls(grid, time_grid, np.zeros((nframes, 3) + grid.shape), names)

    @property
    def nframes(self) -> int:
        return self.data.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.time_grid.times[: self.nframes]

    def component(self, name: str) -> np.ndarray:
        return self.data[:, self.names.index(name)]

    def frame(self, k: int) -> np.ndarray:
        return self.data[k]

    def __getattr__(self, name):
        names = self.__dict__.get("names", ())
        if name in names:
            return self.__dict__["data"][:, names.index(name)]
        raise AttributeError(name)


def interpolate_in_time(traj: Trajectory, component: str, tau: float) -> np.ndarray:
    """Piecewise-linear interpolation of one component at time tau.

    Exact (bitwise) at nodes; raises outside the trajectory's time span.
    """
    values = traj.component(component)
    times = traj.times
    t_max = times[-1]
    if tau < 0.0 or tau > t_max * (1 + 1e-12):
        raise TimeDomainError(f"time {tau} outside [0, {t_max}]")
    tau = min(tau, t_max)
    idx = int(np.searchsorted(times, tau, side="left"))
    if idx < len(times) and times[idx] == tau:
        return values[idx].copy()
    k = min(max(idx - 1, 0), len(times) - 2)
    s = (tau - times[k]) / traj.time_grid.dt
    return (1.0 - s) * values[k] + s * values[k + 1]


# ---------------------------------------------------------------------------
# Snapshot and manifest I/O
# ---------------------------------------------------------------------------


def write_snapshot(path, grid: Grid, values: np.ndarray) -> None:
    if values.shape != grid.shape:
        raise GridMismatchError("snapshot values do not match the grid")
    n = grid.n + (0,) * (2 - grid.dim)
    header = struct.pack(_HEADER_FMT, _SNAPSHOT_MAGIC, grid.dim, n[0], n[1])
    data = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))


def read_snapshot(path, grid: Grid | None = None) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    header_size = struct.calcsize(_HEADER_FMT)
    magic, dim, n0, n1 = struct.unpack(_HEADER_FMT, raw[:header_size])
    if magic != _SNAPSHOT_MAGIC:
        raise ShapeMismatchError(f"{path}: not a field snapshot (bad magic)")
    shape = (n0,) if dim == 1 else (n0, n1)
    values = np.frombuffer(raw[header_size:], dtype="<f8").reshape(shape).copy()
    if grid is not None and shape != grid.shape:
        raise GridMismatchError(
            f"{path}: snapshot shape {shape} does not match grid {grid.shape}"
        )
    return values


def write_trajectory(directory, traj: Trajectory, prefix: str = "") -> Path:
    """Write one snapshot per node per component plus a JSON manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = {name: [] for name in traj.names}
    for k in range(traj.nframes):
        for j, name in enumerate(traj.names):
            fname = f"{prefix}{name}_{k:05d}.fld"
            write_snapshot(directory / fname, traj.grid, traj.data[k, j])
            entries[name].append(fname)
    manifest = {
        "format": MANIFEST_FORMAT,
        "grid": {"n": list(traj.grid.n), "extents": list(traj.grid.extents)},
        "time": {"horizon": traj.time_grid.horizon, "steps": traj.time_grid.steps},
        "times": [float(t) for t in traj.times],
        "components": entries,
    }
    manifest_path = directory / f"{prefix}manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest_path


def read_trajectory(manifest_path) -> Trajectory:
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ShapeMismatchError(f"{manifest_path}: unknown manifest format")
    grid = Grid(tuple(manifest["grid"]["n"]), tuple(manifest["grid"]["extents"]))
    time_grid = TimeGrid(manifest["time"]["horizon"], manifest["time"]["steps"])
    names = tuple(manifest["components"].keys())
    nframes = len(manifest["times"])
    data = np.empty((nframes, 3) + grid.shape)
    for j, name in enumerate(names):
        paths = manifest["components"][name]
        if len(paths) != nframes:
            raise ShapeMismatchError(f"{manifest_path}: ragged component {name}")
        for k, rel in enumerate(paths):
            data[k, j] = read_snapshot(manifest_path.parent / rel, grid)
    return Trajectory(grid, time_grid, data, names)
