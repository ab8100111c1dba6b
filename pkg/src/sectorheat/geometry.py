"""Sector geometry: parameter specs, tensor grids, anti-symmetric extension,
dilation, and the weighted sup ratio used as the data-space norm.

The working domain is the sector {x_1 > 0, ..., x_m > 0} of R^N, truncated
to a box of half-width L.  Grids never place a node at the origin or on a
sector wall, so singular reference profiles are evaluable everywhere.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

AXIS_ANTISYM = "antisym"   # nodes in (0, L), implied zero at the wall
AXIS_SYM = "sym"           # half-cell offset nodes in (-L, L)
AXIS_FULL = "full"         # odd mirror of an antisym axis: nodes in (-L,0)u(0,L)
AXIS_PERIODIC = "periodic" # uniform nodes on [-L, L) with wraparound

_AXIS_KINDS = (AXIS_ANTISYM, AXIS_SYM, AXIS_FULL, AXIS_PERIODIC)


@dataclass(frozen=True)
class SectorSpec:
    """Problem parameters: dimension, anti-symmetry count, and exponents.

    N       spatial dimension (1..3)
    m       number of anti-symmetric coordinates (0 <= m <= N)
    gamma   decay exponent of the reference singular profile, in (0, N)
    alpha   nonlinearity power, > 0
    sign_a  sign of the nonlinear term, +1 (focusing) or -1 (absorbing)
    """

    N: int
    m: int
    gamma: float
    alpha: float
    sign_a: int = 1

    def __post_init__(self):
        if not (1 <= self.N <= 3):
            raise ValueError(f"N must be in 1..3, got {self.N}")
        if not (0 <= self.m <= self.N):
            raise ValueError(f"m must satisfy 0 <= m <= N, got m={self.m}")
        if not (0.0 < self.gamma < self.N):
            raise ValueError(f"gamma must lie in (0, N), got {self.gamma}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.sign_a not in (+1, -1):
            raise ValueError(f"sign_a must be +1 or -1, got {self.sign_a}")

    @property
    def decay(self) -> float:
        """Homogeneity degree gamma + m of the reference profile (with sign)."""
        return self.gamma + self.m

    @property
    def alpha_critical(self) -> float:
        """Largest admissible nonlinearity power, 2/(gamma+m)."""
        return 2.0 / self.decay

    @property
    def subcritical(self) -> bool:
        return self.alpha < self.alpha_critical

    @property
    def sigma(self) -> float:
        """Life-span scaling exponent (1/alpha - (gamma+m)/2)^(-1)."""
        denom = 1.0 / self.alpha - self.decay / 2.0
        if denom <= 0.0:
            raise ValueError("sigma undefined: alpha is not subcritical")
        return 1.0 / denom


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid over the truncated sector.

    L     box half-width
    n     points per axis
    axes  per-axis kind; antisym axes carry n nodes in (0, L), the others
          n (or 2n, for "full") nodes spanning (-L, L)
    """

    L: float
    n: int
    axes: tuple[str, ...]

    def __post_init__(self):
        if self.L <= 0.0 or self.n < 4:
            raise ValueError("need L > 0 and n >= 4")
        for kind in self.axes:
            if kind not in _AXIS_KINDS:
                raise ValueError(f"unknown axis kind {kind!r}")

    @classmethod
    def for_spec(cls, spec: SectorSpec, L: float, n: int) -> "GridSpec":
        axes = (AXIS_ANTISYM,) * spec.m + (AXIS_SYM,) * (spec.N - spec.m)
        return cls(L=L, n=n, axes=axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def axis_nodes(self, i: int) -> np.ndarray:
        kind = self.axes[i]
        if kind == AXIS_ANTISYM:
            h = self.L / (self.n + 1)
            return h * np.arange(1, self.n + 1)
        if kind == AXIS_FULL:
            h = self.L / (self.n + 1)
            pos = h * np.arange(1, self.n + 1)
            return np.concatenate([-pos[::-1], pos])
        if kind == AXIS_SYM:
            h = 2.0 * self.L / self.n
            return -self.L + h * (np.arange(self.n) + 0.5)
        # periodic
        h = 2.0 * self.L / self.n
        return -self.L + h * np.arange(self.n)

    def axis_spacing(self, i: int) -> float:
        kind = self.axes[i]
        if kind in (AXIS_ANTISYM, AXIS_FULL):
            return self.L / (self.n + 1)
        return 2.0 * self.L / self.n

    def shape(self) -> tuple[int, ...]:
        return tuple(len(self.axis_nodes(i)) for i in range(self.ndim))

    def cell_volume(self) -> float:
        vol = 1.0
        for i in range(self.ndim):
            vol *= self.axis_spacing(i)
        return vol

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.axis_nodes(i) for i in range(self.ndim)],
                           indexing="ij")

    def points(self) -> np.ndarray:
        """All grid nodes as an array of shape grid.shape() + (ndim,)."""
        return np.stack(self.meshgrid(), axis=-1)

    def radii(self) -> np.ndarray:
        mesh = self.meshgrid()
        return np.sqrt(sum(x * x for x in mesh))


@dataclass
class Field:
    """Real values sampled on a tensor grid, with optional analytic backing.

    ``profile``, when present, is a callable evaluating the underlying
    function at arbitrary points (shape (..., N)); it may expose a
    ``tail_degree`` attribute giving the homogeneity of its far-field tail.
    Fields are treated as immutable: operations return new instances.
    """

    spec: SectorSpec
    grid: GridSpec
    values: np.ndarray
    time_tag: float | None = None
    profile: object | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape():
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"{self.grid.shape()}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def with_values(self, values, time_tag=None, profile=None) -> "Field":
        return Field(self.spec, self.grid, values, time_tag=time_tag,
                     profile=profile)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l1_annulus(self, r_min: float, r_max: float) -> float:
        """Grid L1 norm over the annulus r_min < |x| < r_max."""
        r = self.grid.radii()
        mask = (r > r_min) & (r < r_max)
        return float(np.sum(np.abs(self.values[mask])) * self.grid.cell_volume())

    def is_nonnegative(self, rel_tol: float = 1e-12) -> bool:
        vmax = float(np.max(self.values, initial=0.0))
        return float(np.min(self.values)) >= -rel_tol * max(vmax, 1.0)


def field_from_profile(spec: SectorSpec, grid: GridSpec, profile,
                       time_tag=None) -> Field:
    values = profile(grid.points())
    return Field(spec, grid, values, time_tag=time_tag, profile=profile)


# ---------------------------------------------------------------------------
# anti-symmetric extension / restriction

def extend_antisym(f: Field) -> Field:
    """Odd-reflect a sector field across each of the first m coordinate walls.

    Antisym axes become "full" axes with 2n nodes; the reflected values are
    negated once per reflected coordinate.  Restriction back to the sector
    recovers the input exactly.
    """
    grid = f.grid
    values = f.values
    axes = list(grid.axes)
    for i, kind in enumerate(axes):
        if kind != AXIS_ANTISYM:
            continue
        mirrored = -np.flip(values, axis=i)
        values = np.concatenate([mirrored, values], axis=i)
        axes[i] = AXIS_FULL
    new_grid = replace(grid, axes=tuple(axes))
    return Field(f.spec, new_grid, values, time_tag=f.time_tag,
                 profile=f.profile)


def restrict_antisym(f: Field) -> Field:
    """Inverse of extend_antisym: keep the positive-orthant block."""
    grid = f.grid
    values = f.values
    axes = list(grid.axes)
    for i, kind in enumerate(axes):
        if kind != AXIS_FULL:
            continue
        n = values.shape[i] // 2
        values = np.take(values, np.arange(n, 2 * n), axis=i)
        axes[i] = AXIS_ANTISYM
    new_grid = replace(grid, axes=tuple(axes))
    return Field(f.spec, new_grid, values, time_tag=f.time_tag,
                 profile=f.profile)


# ---------------------------------------------------------------------------
# interpolation helpers

def _augmented_axes_values(f: Field):
    """Axes and values padded so multilinear interpolation is well posed
    up to the walls: antisym axes get an explicit zero at x=0 (odd mirror
    below), and every axis gets zero padding just outside the box."""
    axes = []
    values = f.values
    for i, kind in enumerate(f.grid.axes):
        nodes = f.grid.axis_nodes(i)
        h = f.grid.axis_spacing(i)
        if kind == AXIS_ANTISYM:
            # odd extension: mirror across 0 so interpolation near the wall
            # sees the sign change, then pad the outer edge with 0
            ext = np.concatenate([-nodes[::-1], [0.0], nodes, [nodes[-1] + h]])
            mirrored = -np.flip(values, axis=i)
            zero_shape = list(values.shape)
            zero_shape[i] = 1
            zeros = np.zeros(zero_shape)
            values = np.concatenate([mirrored, zeros, values, zeros], axis=i)
        else:
            ext = np.concatenate([[nodes[0] - h], nodes, [nodes[-1] + h]])
            zero_shape = list(values.shape)
            zero_shape[i] = 1
            zeros = np.zeros(zero_shape)
            values = np.concatenate([zeros, values, zeros], axis=i)
        axes.append(ext)
    return axes, values


def interpolator(f: Field) -> RegularGridInterpolator:
    axes, values = _augmented_axes_values(f)
    return RegularGridInterpolator(axes, values, method="linear",
                                   bounds_error=False, fill_value=0.0)


class _DilatedProfile:
    """Profile handle for x -> p(lam * x); keeps the tail degree."""

    def __init__(self, base, lam):
        self.base = base
        self.lam = lam
        self.tail_degree = getattr(base, "tail_degree", None)

    def __call__(self, pts):
        return self.base(np.asarray(pts) * self.lam)


def dilate(f: Field, lam: float) -> Field:
    """Sample x -> f(lam x) on the grid of f.

    Uses the analytic profile when the field carries one; otherwise
    multilinear interpolation, with nodes mapped outside the box filled by
    the profile tail if available, else zero.  Warns when more than 10% of
    target nodes land outside the source support and no tail is available.
    """
    if lam <= 0.0:
        raise ValueError("dilation factor must be positive")
    pts = f.grid.points()
    if f.profile is not None:
        values = f.profile(pts * lam)
        return Field(f.spec, f.grid, values, time_tag=f.time_tag,
                     profile=_DilatedProfile(f.profile, lam))
    interp = interpolator(f)
    target = pts * lam
    values = interp(target.reshape(-1, f.grid.ndim)).reshape(f.values.shape)
    outside = np.max(np.abs(target), axis=-1) > f.grid.L
    if np.mean(outside) > 0.10:
        warnings.warn(
            f"dilate: {100 * np.mean(outside):.0f}% of target nodes fall "
            "outside the source box; values there were truncated to 0",
            RuntimeWarning)
    return Field(f.spec, f.grid, values, time_tag=f.time_tag)


def weighted_sup_ratio(f: Field, g: Field) -> float:
    """sup over grid nodes of |f| / g; g must be strictly positive."""
    if f.grid != g.grid:
        raise ValueError("fields must share a grid")
    if np.any(g.values <= 0.0):
        raise ValueError("weight field must be strictly positive on the grid")
    return float(np.max(np.abs(f.values) / g.values))


# ---------------------------------------------------------------------------
# serialization: little-endian binary with a fixed header, or CSV

_MAGIC = b"SHF1"
_KIND_CODE = {AXIS_ANTISYM: 0, AXIS_SYM: 1, AXIS_FULL: 2, AXIS_PERIODIC: 3}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def save_field(f: Field, path: str, fmt: str = "bin") -> None:
    """Write a field to disk.

    Binary layout (all little-endian): magic "SHF1", int32 N, int32 m,
    float64 gamma, float64 alpha, int32 sign_a, float64 L, int32 n,
    int32 ndim, ndim * int32 axis-kind codes, then the row-major float64
    values.  CSV: one header line with the same metadata, then one value
    per line in row-major order.
    """
    spec, grid = f.spec, f.grid
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<ii", spec.N, spec.m))
            fh.write(struct.pack("<dd", spec.gamma, spec.alpha))
            fh.write(struct.pack("<i", spec.sign_a))
            fh.write(struct.pack("<d", grid.L))
            fh.write(struct.pack("<ii", grid.n, grid.ndim))
            for kind in grid.axes:
                fh.write(struct.pack("<i", _KIND_CODE[kind]))
            fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            axes = ",".join(grid.axes)
            fh.write(f"# N={spec.N} m={spec.m} gamma={spec.gamma!r} "
                     f"alpha={spec.alpha!r} sign_a={spec.sign_a} "
                     f"L={grid.L!r} n={grid.n} axes={axes}\n")
            for v in f.values.ravel():
                fh.write(f"{float(v)!r}\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_field(path: str) -> Field:
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            N, m = struct.unpack("<ii", fh.read(8))
            gamma, alpha = struct.unpack("<dd", fh.read(16))
            (sign_a,) = struct.unpack("<i", fh.read(4))
            (L,) = struct.unpack("<d", fh.read(8))
            n, ndim = struct.unpack("<ii", fh.read(8))
            axes = tuple(_CODE_KIND[struct.unpack("<i", fh.read(4))[0]]
                         for _ in range(ndim))
            spec = SectorSpec(N, m, gamma, alpha, sign_a)
            grid = GridSpec(L, n, axes)
            count = int(np.prod(grid.shape()))
            values = np.frombuffer(fh.read(8 * count), dtype="<f8")
            return Field(spec, grid, values.reshape(grid.shape()))
    # fall through: CSV
    with open(path) as fh:
        header = fh.readline().lstrip("# ").split()
        meta = dict(item.split("=", 1) for item in header)
        spec = SectorSpec(int(meta["N"]), int(meta["m"]), float(meta["gamma"]),
                          float(meta["alpha"]), int(meta["sign_a"]))
        grid = GridSpec(float(meta["L"]), int(meta["n"]),
                        tuple(meta["axes"].split(",")))
        values = np.array([float(line) for line in fh])
    return Field(spec, grid, values.reshape(grid.shape()))
