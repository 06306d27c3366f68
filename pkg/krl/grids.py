"""
Spatial and velocity grids and the field containers defined on them.

The spatial grid is uniform in the Lagrangian mass coordinate. The velocity
grid is a truncated tensor product midpoint grid; every node carries the
weight ``h^3``.

Snapshots
---------

A :class:`DistributionField` is written as a little endian binary file::

    b"KRL1" | u32 n_cells | u32 n_velocity_nodes | f64 time | f64 values...

with the values in row major (cell, velocity node) order.
"""
import logging
import struct
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from krl import errors
from krl.gas import FluidState


log = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b'KRL1'
SNAPSHOT_HEADER = struct.Struct('<4sIId')


class SpatialGrid:
    """Uniform grid of ``n_cells`` cells on ``[x_left, x_right]``."""

    def __init__(self, x_left: float, x_right: float, n_cells: int) -> None:
        if not x_left < x_right:
            raise errors.GridError(
                f"Expected x_left < x_right, got {x_left} >= {x_right}")
        if n_cells < 1:
            raise errors.GridError(f"Invalid number of cells: {n_cells}")
        self.x_left     = float(x_left)
        self.x_right    = float(x_right)
        self.n_cells    = int(n_cells)
        self.dx         = (self.x_right - self.x_left) / self.n_cells
        self.centers    = self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpatialGrid):
            return NotImplemented
        return (self.x_left, self.x_right, self.n_cells) == \
            (other.x_left, other.x_right, other.n_cells)

    def __repr__(self) -> str:
        return f"SpatialGrid({self.x_left}, {self.x_right}, {self.n_cells})"

    def integrate(self, values: np.ndarray) -> float:
        """Midpoint quadrature over the domain along the first axis."""
        return float(np.sum(values, axis=0) * self.dx)

    def derivative(self, values: np.ndarray) -> np.ndarray:
        """Second order centered differences, one sided at the edges."""
        return np.gradient(values, self.dx, axis=0)


class VelocityGrid:
    """Tensor midpoint grid on the box ``center + [-radius, radius]^3``.

    ``nodes`` has shape ``(N, 3)`` with ``N = n_per_axis**3`` in ``ij``
    order, ``weights`` has shape ``(N,)``.
    """

    def __init__(
        self,
        center: Sequence[float],
        radius: float,
        n_per_axis: int,
    ) -> None:
        self.center     = np.asarray(center, dtype=float).reshape(3)
        self.radius     = float(radius)
        self.n_per_axis = int(n_per_axis)
        self.spacing    = 2.0 * self.radius / self.n_per_axis
        steps           = np.arange(self.n_per_axis) + 0.5
        offsets         = -self.radius + steps * self.spacing
        self.axes       = [c + offsets for c in self.center]
        mesh            = np.meshgrid(*self.axes, indexing='ij')
        self.nodes      = np.stack([m.ravel() for m in mesh], axis=1)
        self.weights    = np.full(len(self.nodes), self.spacing ** 3)
        self.xi1        = self.nodes[:, 0]
        self.speed_sq   = np.sum(self.nodes ** 2, axis=1)
        # index of each node's first component on the first axis
        self.xi1_level  = np.repeat(np.arange(self.n_per_axis), self.n_per_axis ** 2)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def box_volume(self) -> float:
        return (2.0 * self.radius) ** 3

    def mirror_index(self) -> np.ndarray:
        """Index of the node ``2 center - xi`` for every node."""
        n = self.n_per_axis
        idx = np.arange(n)[::-1]
        mesh = np.meshgrid(idx, idx, idx, indexing='ij')
        return (mesh[0] * n * n + mesh[1] * n + mesh[2]).ravel()

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature over the last axis."""
        return values @ self.weights

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VelocityGrid):
            return NotImplemented
        return (np.array_equal(self.center, other.center)
                and self.radius == other.radius
                and self.n_per_axis == other.n_per_axis)

    def __repr__(self) -> str:
        return "VelocityGrid(center={}, radius={}, n_per_axis={})".format(
            tuple(self.center), self.radius, self.n_per_axis)


def build_velocity_grid(
    center: Sequence[float],
    radius: float,
    n_per_axis: int,
) -> VelocityGrid:
    """Build a velocity grid, rejecting odd node counts and bad radii."""
    if not radius > 0:
        raise errors.GridError(f"Velocity radius must be positive: {radius}")
    if n_per_axis < 4 or n_per_axis % 2:
        raise errors.GridError(
            f"Nodes per axis must be even and at least 4: {n_per_axis}")
    return VelocityGrid(center, radius, n_per_axis)


def default_velocity_grid(
    states: Sequence[FluidState],
    n_per_axis: int,
    radius: Optional[float] = None,
) -> VelocityGrid:
    """Grid centered on the mean bulk velocity of ``states`` extending
    ``6 sqrt(theta_max)`` beyond the largest bulk speed.
    """
    u1 = [state.u1 for state in states]
    center = 0.5 * (max(u1) + min(u1))
    if radius is None:
        theta_max = max(state.theta for state in states)
        radius = 6.0 * np.sqrt(theta_max) + max(abs(u - center) for u in u1)
    return build_velocity_grid((center, 0.0, 0.0), radius, n_per_axis)


class FluidField:
    """Cell values of the macroscopic state. ``u`` has shape ``(n, 3)``."""

    def __init__(
        self,
        v: np.ndarray,
        u: np.ndarray,
        theta: np.ndarray,
        time: float = 0.0,
    ) -> None:
        self.v          = np.asarray(v, dtype=float)
        self.u          = np.asarray(u, dtype=float).reshape(len(self.v), 3)
        self.theta      = np.asarray(theta, dtype=float)
        self.time       = float(time)
        if np.any(self.v <= 0) or np.any(self.theta <= 0):
            raise errors.StateError(
                f"Non-positive volume or temperature at t={self.time}")

    @classmethod
    def constant(
        cls,
        state: FluidState,
        n_cells: int,
        time: float = 0.0,
    ) -> "FluidField":
        return cls(
            np.full(n_cells, state.v),
            np.tile(state.velocity, (n_cells, 1)),
            np.full(n_cells, state.theta),
            time)

    @property
    def u1(self) -> np.ndarray:
        return self.u[:, 0]

    @property
    def rho(self) -> np.ndarray:
        return 1.0 / self.v

    @property
    def pressure(self) -> np.ndarray:
        return 2.0 * self.theta / (3.0 * self.v)

    def __len__(self) -> int:
        return len(self.v)

    def state(self, j: int) -> FluidState:
        return FluidState(self.v[j], self.u[j, 0], self.theta[j],
                          self.u[j, 1], self.u[j, 2])


def moments(
    values: np.ndarray,
    grid: VelocityGrid,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Density, momentum and energy of one cell ``(N,)`` or of many cells
    ``(n, N)``: ``rho = sum w f``, ``m = sum w xi f``,
    ``E = sum w |xi|^2/2 f``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != grid.size:
        raise errors.GridError(
            f"Distribution has {values.shape[-1]} velocity values, "
            f"grid has {grid.size}")
    weighted = values * grid.weights
    density = weighted.sum(axis=-1)
    momentum = weighted @ grid.nodes
    energy = 0.5 * (weighted @ grid.speed_sq)
    if np.any(density < 0):
        raise errors.StateError("Negative density, distribution is corrupted")
    return density, momentum, energy


def fluid_from_moments(
    density: np.ndarray,
    momentum: np.ndarray,
    energy: np.ndarray,
    time: float = 0.0,
) -> FluidField:
    if np.any(density <= 0):
        raise errors.StateError("Vanishing density, no fluid state defined")
    u = momentum / density[:, None]
    theta = energy / density - 0.5 * np.sum(u ** 2, axis=1)
    return FluidField(1.0 / density, u, theta, time)


class DistributionField:
    """Phase space density ``values[j, k] = f(t, x_j, xi_k)``."""

    def __init__(
        self,
        values: np.ndarray,
        space: SpatialGrid,
        velocity: VelocityGrid,
        time: float = 0.0,
    ) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (space.n_cells, velocity.size):
            raise errors.GridError(
                f"Expected values of shape {(space.n_cells, velocity.size)}, "
                f"got {values.shape}")
        self.values     = values
        self.space      = space
        self.velocity   = velocity
        self.time       = float(time)

    def moments(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return moments(self.values, self.velocity)

    def fluid(self) -> FluidField:
        return fluid_from_moments(*self.moments(), time=self.time)

    def copy(self) -> "DistributionField":
        return DistributionField(self.values.copy(), self.space, self.velocity,
                                 self.time)

    def replace(self, values: np.ndarray, time: float) -> "DistributionField":
        return DistributionField(values, self.space, self.velocity, time)

    def same_grids(self, other: "DistributionField") -> bool:
        return self.space == other.space and self.velocity == other.velocity


def write_snapshot(path: str, field: DistributionField) -> None:
    n_cells, n_nodes = field.values.shape
    with open(path, 'wb') as fh:
        fh.write(SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, n_cells, n_nodes, field.time))
        fh.write(np.ascontiguousarray(field.values, dtype='<f8').tobytes())
    log.debug("Wrote snapshot t=%s to %s", field.time, path)


def read_snapshot(
    path: str,
    space: SpatialGrid,
    velocity: VelocityGrid,
) -> DistributionField:
    with open(path, 'rb') as fh:
        data = fh.read()
    if len(data) < SNAPSHOT_HEADER.size:
        raise errors.GridError(f"Truncated snapshot header in {path}")
    magic, n_cells, n_nodes, time = SNAPSHOT_HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise errors.GridError(f"{path} is not a snapshot (magic {magic!r})")
    if (n_cells, n_nodes) != (space.n_cells, velocity.size):
        raise errors.GridError(
            f"Snapshot {path} has shape {(n_cells, n_nodes)}, grids expect "
            f"{(space.n_cells, velocity.size)}")
    values = np.frombuffer(data, dtype='<f8', offset=SNAPSHOT_HEADER.size)
    if values.size != n_cells * n_nodes:
        raise errors.GridError(f"Truncated snapshot values in {path}")
    return DistributionField(
        values.reshape(n_cells, n_nodes).astype(float), space, velocity, time)
