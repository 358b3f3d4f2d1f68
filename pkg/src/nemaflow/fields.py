"""Grids, staggered fields, quadrature, and snapshot I/O.

Layout
------
The domain is a rectangular box of extent ``length[a]`` per axis split into
``n[a]`` uniform cells.  Scalars and director components live at cell
centers, coordinates ``(i + 1/2) h``.  Velocity is stored MAC-staggered:
component ``a`` lives at faces normal to axis ``a``, coordinates ``i h``
along that axis and cell centers along the others, so its array carries one
extra layer along axis ``a``.  The first and last layers of component ``a``
sit exactly on the walls.

The director always has three components, regardless of spatial dimension.
In dimension 2 the third component is advected and relaxed like the others
but never feeds back into the in-plane stresses through derivatives along a
missing axis, so all formulas below survive the index restriction.

Quadrature is the midpoint rule: integrals are plain sums times the cell
volume.  Velocity integrals weight wall layers by 1/2 along their normal
axis (trapezoid in that direction), which makes the integral of a constant
exact.  Sums use numpy's pairwise accumulation, which is deterministic for
a fixed shape, so repeated runs reduce in the same order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BoundaryDataError, NonFiniteError, ShapeError

SNAPSHOT_MAGIC = b"NEMA1\x00"

_BC_TAGS = {"neumann": 0, "dirichlet": 1}
_BC_NAMES = {v: k for k, v in _BC_TAGS.items()}


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid, dimension 2 or 3, at least 4 cells per axis."""

    n: tuple[int, ...]
    length: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "length", tuple(float(v) for v in self.length))
        if len(self.n) not in (2, 3):
            raise ShapeError(f"grid dimension must be 2 or 3, got {len(self.n)}")
        if len(self.length) != len(self.n):
            raise ShapeError("n and length must have equal length")
        if any(v < 4 for v in self.n):
            raise ShapeError(f"need at least 4 cells per axis, got {self.n}")
        if any(l <= 0 for l in self.length):
            raise ShapeError(f"box extents must be positive, got {self.length}")

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(l / m for l, m in zip(self.length, self.n))

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for s in self.h:
            vol *= s
        return vol

    @property
    def volume(self) -> float:
        vol = 1.0
        for l in self.length:
            vol *= l
        return vol

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    def face_shape(self, axis: int) -> tuple[int, ...]:
        return tuple(m + 1 if a == axis else m for a, m in enumerate(self.n))

    def centers(self, axis: int) -> np.ndarray:
        step = self.h[axis]
        return (np.arange(self.n[axis]) + 0.5) * step

    def faces(self, axis: int) -> np.ndarray:
        return np.arange(self.n[axis] + 1) * self.h[axis]

    def center_mesh(self) -> tuple[np.ndarray, ...]:
        return np.meshgrid(*(self.centers(a) for a in range(self.dim)), indexing="ij")

    def face_mesh(self, axis: int) -> tuple[np.ndarray, ...]:
        coords = [
            self.faces(a) if a == axis else self.centers(a) for a in range(self.dim)
        ]
        return np.meshgrid(*coords, indexing="ij")

    @staticmethod
    def square(n: int, length: float = 1.0) -> "Grid":
        return Grid((n, n), (length, length))

    @staticmethod
    def cube(n: int, length: float = 1.0) -> "Grid":
        return Grid((n, n, n), (length, length, length))


class VelocityField:
    """MAC-staggered velocity: ``comps[a]`` has shape ``grid.face_shape(a)``."""

    __slots__ = ("grid", "comps")

    def __init__(self, grid: Grid, comps: Sequence[np.ndarray]):
        if len(comps) != grid.dim:
            raise ShapeError(f"expected {grid.dim} velocity components, got {len(comps)}")
        for a, c in enumerate(comps):
            if c.shape != grid.face_shape(a):
                raise ShapeError(
                    f"component {a} has shape {c.shape}, expected {grid.face_shape(a)}"
                )
        self.grid = grid
        self.comps = tuple(np.asarray(c, dtype=float) for c in comps)

    @classmethod
    def zeros(cls, grid: Grid) -> "VelocityField":
        return cls(grid, [np.zeros(grid.face_shape(a)) for a in range(grid.dim)])

    @classmethod
    def from_streamfunction(cls, grid: Grid, psi: np.ndarray) -> "VelocityField":
        """Discretely divergence-free 2D field from node values of a streamfunction.

        ``psi`` has shape ``(n0+1, n1+1)`` (grid nodes).  The returned field has
        u = d(psi)/dy and v = -d(psi)/dx taken as exact node differences, so
        its discrete divergence vanishes identically and its wall-normal
        components are zero whenever psi is constant along each wall.
        """
        if grid.dim != 2:
            raise ShapeError("streamfunction construction is 2D only")
        expect = (grid.n[0] + 1, grid.n[1] + 1)
        if psi.shape != expect:
            raise ShapeError(f"psi has shape {psi.shape}, expected {expect}")
        h0, h1 = grid.h
        u = (psi[:, 1:] - psi[:, :-1]) / h1
        v = -(psi[1:, :] - psi[:-1, :]) / h0
        return cls(grid, [u, v])

    def copy(self) -> "VelocityField":
        return VelocityField(self.grid, [c.copy() for c in self.comps])

    def scaled(self, factor: float) -> "VelocityField":
        return VelocityField(self.grid, [factor * c for c in self.comps])

    def plus(self, other: "VelocityField", factor: float = 1.0) -> "VelocityField":
        _same_grid(self.grid, other.grid)
        return VelocityField(
            self.grid, [a + factor * b for a, b in zip(self.comps, other.comps)]
        )

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.comps)

    def zero_wall_normal(self) -> "VelocityField":
        """Copy with the wall layers of each normal component set to zero."""
        comps = [c.copy() for c in self.comps]
        for a, c in enumerate(comps):
            sl_lo = [slice(None)] * self.grid.dim
            sl_lo[a] = 0
            c[tuple(sl_lo)] = 0.0
            sl_hi = [slice(None)] * self.grid.dim
            sl_hi[a] = -1
            c[tuple(sl_hi)] = 0.0
        return VelocityField(self.grid, comps)


class DirectorField:
    """Cell-centered director with three components in every dimension."""

    __slots__ = ("grid", "comps")

    def __init__(self, grid: Grid, comps: Sequence[np.ndarray]):
        if len(comps) != 3:
            raise ShapeError(f"director needs 3 components, got {len(comps)}")
        for c in comps:
            if c.shape != grid.shape:
                raise ShapeError(f"component shape {c.shape} != grid shape {grid.shape}")
        self.grid = grid
        self.comps = tuple(np.asarray(c, dtype=float) for c in comps)

    @classmethod
    def zeros(cls, grid: Grid) -> "DirectorField":
        return cls(grid, [np.zeros(grid.shape) for _ in range(3)])

    @classmethod
    def constant(cls, grid: Grid, vec: Sequence[float]) -> "DirectorField":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (3,):
            raise ShapeError("constant director needs a 3-vector")
        return cls(grid, [np.full(grid.shape, v) for v in vec])

    @classmethod
    def from_stack(cls, grid: Grid, stack: np.ndarray) -> "DirectorField":
        if stack.shape != grid.shape + (3,):
            raise ShapeError(f"stack shape {stack.shape} != {grid.shape + (3,)}")
        return cls(grid, [stack[..., k] for k in range(3)])

    def stack(self) -> np.ndarray:
        return np.stack(self.comps, axis=-1)

    def copy(self) -> "DirectorField":
        return DirectorField(self.grid, [c.copy() for c in self.comps])

    def scaled(self, factor: float) -> "DirectorField":
        return DirectorField(self.grid, [factor * c for c in self.comps])

    def plus(self, other: "DirectorField", factor: float = 1.0) -> "DirectorField":
        _same_grid(self.grid, other.grid)
        return DirectorField(
            self.grid, [a + factor * b for a, b in zip(self.comps, other.comps)]
        )

    def max_abs(self) -> float:
        mag2 = sum(c * c for c in self.comps)
        return float(np.sqrt(np.max(mag2)))


@dataclass(frozen=True)
class DirichletTrace:
    """Time-dependent director boundary value, uniform along the walls.

    ``value(t)`` and ``rate(t)`` return 3-vectors; ``rate`` is the exact time
    derivative of ``value``.  Spatially varying traces are out of scope: the
    named boundary programs are all uniform in space.
    """

    value: Callable[[float], np.ndarray]
    rate: Callable[[float], np.ndarray]
    tag: str = "custom"

    def shifted(self, offset: float) -> "DirichletTrace":
        val, rat = self.value, self.rate
        return DirichletTrace(
            value=lambda t, _o=offset: val(t + _o),
            rate=lambda t, _o=offset: rat(t + _o),
            tag=self.tag,
        )

    @staticmethod
    def constant(vec: Sequence[float]) -> "DirichletTrace":
        v = np.asarray(vec, dtype=float).copy()
        z = np.zeros(3)
        return DirichletTrace(
            value=lambda t: v, rate=lambda t: z,
            tag=f"constant({v[0]:g},{v[1]:g},{v[2]:g})",
        )

    @staticmethod
    def rotating(omega: float) -> "DirichletTrace":
        def value(t: float) -> np.ndarray:
            return np.array([np.cos(omega * t), np.sin(omega * t), 0.0])

        def rate(t: float) -> np.ndarray:
            return np.array([-omega * np.sin(omega * t), omega * np.cos(omega * t), 0.0])

        return DirichletTrace(value=value, rate=rate, tag=f"rotating({omega:g})")


@dataclass(frozen=True)
class BoundarySpec:
    """Wall condition for the director: homogeneous Neumann or Dirichlet.

    Velocity is always no-slip; only the director condition varies.
    """

    kind: str
    trace: DirichletTrace | None = None

    def __post_init__(self):
        if self.kind not in ("neumann", "dirichlet"):
            raise BoundaryDataError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and self.trace is None:
            raise BoundaryDataError("dirichlet boundary requires a trace")
        if self.kind == "neumann" and self.trace is not None:
            raise BoundaryDataError("neumann boundary takes no trace")

    @property
    def tag(self) -> int:
        return _BC_TAGS[self.kind]

    def g(self, t: float) -> np.ndarray:
        if self.trace is None:
            raise BoundaryDataError("no trace on a Neumann boundary")
        return np.asarray(self.trace.value(t), dtype=float)

    def g_rate(self, t: float) -> np.ndarray:
        if self.trace is None:
            raise BoundaryDataError("no trace on a Neumann boundary")
        return np.asarray(self.trace.rate(t), dtype=float)

    def shifted(self, offset: float) -> "BoundarySpec":
        if self.kind == "neumann":
            return self
        return BoundarySpec("dirichlet", self.trace.shifted(offset))


NEUMANN = BoundarySpec("neumann")


@dataclass
class State:
    """Velocity, director, and the time they belong to."""

    u: VelocityField
    d: DirectorField
    t: float = 0.0

    def __post_init__(self):
        _same_grid(self.u.grid, self.d.grid)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def copy(self) -> "State":
        return State(self.u.copy(), self.d.copy(), self.t)


def _same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ShapeError(f"grid mismatch: {a} vs {b}")


def _check_finite(arrays: Iterable[np.ndarray], where: str) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))
            raise NonFiniteError(
                f"non-finite value in {where} at index {tuple(bad[0])}",
                where=where,
                point=tuple(int(i) for i in bad[0]),
            )


def _as_component_list(f) -> tuple[list[np.ndarray], str]:
    if isinstance(f, VelocityField):
        return list(f.comps), "velocity"
    if isinstance(f, DirectorField):
        return list(f.comps), "director"
    arr = np.asarray(f, dtype=float)
    return [arr], "scalar"


def integrate_scalar(f: np.ndarray, grid: Grid) -> float:
    """Midpoint-rule integral of a cell-centered scalar field."""
    arr = np.asarray(f, dtype=float)
    if arr.shape != grid.shape:
        raise ShapeError(f"field shape {arr.shape} != grid shape {grid.shape}")
    _check_finite([arr], "integrate_scalar")
    return float(np.sum(arr)) * grid.cell_volume


def _face_weights(grid: Grid, axis: int) -> np.ndarray:
    """Trapezoid weights along the staggered axis: wall layers count 1/2."""
    w = np.ones(grid.n[axis] + 1)
    w[0] = 0.5
    w[-1] = 0.5
    shape = [1] * grid.dim
    shape[axis] = grid.n[axis] + 1
    return w.reshape(shape)


def velocity_inner(u: VelocityField, v: VelocityField) -> float:
    """L2 inner product of two velocity fields (trapezoid along normal axes)."""
    _same_grid(u.grid, v.grid)
    total = 0.0
    for a in range(u.grid.dim):
        w = _face_weights(u.grid, a)
        total += float(np.sum(w * u.comps[a] * v.comps[a]))
    return total * u.grid.cell_volume


def l2_norm(f, grid: Grid | None = None) -> float:
    """L2 norm with midpoint quadrature; NaN raises a structured error.

    Accepts a cell-centered array, a DirectorField (sum over 3 components),
    or a VelocityField (per-component face sums, trapezoid at walls).
    """
    if isinstance(f, VelocityField):
        _check_finite(f.comps, "l2_norm")
        return float(np.sqrt(velocity_inner(f, f)))
    comps, kind = _as_component_list(f)
    _check_finite(comps, "l2_norm")
    if kind == "director":
        grid = f.grid
    if grid is None:
        raise ShapeError("l2_norm of a bare array needs the grid")
    total = 0.0
    for c in comps:
        if c.shape != grid.shape:
            raise ShapeError(f"field shape {c.shape} != grid shape {grid.shape}")
        total += float(np.sum(c * c))
    return float(np.sqrt(total * grid.cell_volume))


def lp_norm(f, grid: Grid | None = None, p: float = 2.0) -> float:
    """L^p quadrature norm of a cell-centered field; vectors use the pointwise
    Euclidean magnitude."""
    comps, kind = _as_component_list(f)
    _check_finite(comps, "lp_norm")
    if kind == "director":
        grid = f.grid
    if kind == "velocity":
        raise ShapeError("lp_norm is defined on cell-centered data")
    if grid is None:
        raise ShapeError("lp_norm of a bare array needs the grid")
    mag2 = sum(c * c for c in comps)
    return float(np.sum(mag2 ** (p / 2.0)) * grid.cell_volume) ** (1.0 / p)


def linf_norm(f) -> float:
    """Max absolute value over all stored components; NaN raises."""
    comps, _ = _as_component_list(f)
    _check_finite(comps, "linf_norm")
    return max(float(np.max(np.abs(c))) for c in comps)


def interp_face_to_center(u: VelocityField) -> np.ndarray:
    """Two-point average of each MAC component onto cell centers.

    Returns shape ``grid.shape + (dim,)``.  Exact for fields linear along the
    staggered axis.
    """
    grid = u.grid
    out = np.empty(grid.shape + (grid.dim,))
    for a, c in enumerate(u.comps):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        out[..., a] = 0.5 * (c[tuple(lo)] + c[tuple(hi)])
    return out


# ---------------------------------------------------------------------------
# snapshot I/O
#
# Header: magic "NEMA1\0", then little-endian u32 dim, u32 n per axis,
# f64 length per axis, f64 time, u8 boundary tag.  Payload: velocity
# components in axis order, then the 3 director components, all float64
# little-endian in C order.  Round-trips are bit exact.
# ---------------------------------------------------------------------------


def write_snapshot(path, state: State, bc: BoundarySpec | str = NEUMANN) -> None:
    tag = _BC_TAGS[bc] if isinstance(bc, str) else bc.tag
    grid = state.grid
    _check_finite(state.u.comps, "write_snapshot velocity")
    _check_finite(state.d.comps, "write_snapshot director")
    parts = [SNAPSHOT_MAGIC, struct.pack("<I", grid.dim)]
    parts.append(struct.pack(f"<{grid.dim}I", *grid.n))
    parts.append(struct.pack(f"<{grid.dim}d", *grid.length))
    parts.append(struct.pack("<d", state.t))
    parts.append(struct.pack("<B", tag))
    for c in state.u.comps:
        parts.append(np.ascontiguousarray(c, dtype="<f8").tobytes())
    for c in state.d.comps:
        parts.append(np.ascontiguousarray(c, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_snapshot(path) -> tuple[State, str]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(SNAPSHOT_MAGIC)] != SNAPSHOT_MAGIC:
        raise ShapeError(f"{path}: bad snapshot magic")
    off = len(SNAPSHOT_MAGIC)
    (dim,) = struct.unpack_from("<I", blob, off)
    off += 4
    if dim not in (2, 3):
        raise ShapeError(f"{path}: bad dimension {dim}")
    n = struct.unpack_from(f"<{dim}I", blob, off)
    off += 4 * dim
    length = struct.unpack_from(f"<{dim}d", blob, off)
    off += 8 * dim
    (t,) = struct.unpack_from("<d", blob, off)
    off += 8
    (tag,) = struct.unpack_from("<B", blob, off)
    off += 1
    if tag not in _BC_NAMES:
        raise ShapeError(f"{path}: bad boundary tag {tag}")
    grid = Grid(n, length)

    def take(shape: tuple[int, ...]) -> np.ndarray:
        nonlocal off
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
        off += 8 * count
        return arr.reshape(shape).astype(float)

    ucomps = [take(grid.face_shape(a)) for a in range(dim)]
    dcomps = [take(grid.shape) for _ in range(3)]
    if off != len(blob):
        raise ShapeError(f"{path}: trailing bytes in snapshot")
    return State(VelocityField(grid, ucomps), DirectorField(grid, dcomps), t), _BC_NAMES[tag]
