"""The heat semigroup on the sector, three ways.

* apply_kernel: quadrature against the reflected product kernel
      K_t(x,y) = (4 pi t)^{-N/2} prod_sym exp(-(x_j-y_j)^2/4t)
                 * prod_anti [exp(-(x_i-y_i)^2/4t) - exp(-(x_i+y_i)^2/4t)],
  with geometric (dyadic-shell) radial refinement toward the origin so
  singular data integrate accurately, and analytic continuation of the
  quadrature beyond the box for profile-backed fields.
* apply_spectral: sine transforms (Dirichlet outer boundary) on the box,
  exact in time for the transformed modes; for bounded post-smoothing data.
* psi_fast: the dilation identity for the reference profile,
      e^{t D} psi0 = t^{-(gamma+m)/2} E(x / sqrt t),  E = e^{D} psi0,
  which collapses every t to a single cached reference field E.
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.fft import dst, idst, fft, ifft
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize

from .geometry import (AXIS_ANTISYM, AXIS_FULL, AXIS_PERIODIC, AXIS_SYM,
                       Field, GridSpec, SectorSpec)
from .profiles import Psi0Profile, leading_constant


@dataclass
class KernelPlan:
    """Quadrature/transform plan bound to one sector spec and grid.

    refine_target   relative mass tolerance for the dropped origin core
    gl_smooth       Gauss-Legendre order on regular cells
    gl_singular     Gauss-Legendre order on dyadic shells near the origin
    pad_sigma       analytic quadrature extends to L + pad_sigma*sqrt(t)
    tail_tol        truncation-mass warning threshold for grid-only fields
    """

    spec: SectorSpec
    grid: GridSpec
    method: str = "quadrature"
    refine_target: float = 1e-10
    gl_smooth: int = 3
    gl_singular: int = 6
    pad_sigma: float = 8.0
    tail_tol: float = 1e-8
    _rules: dict = field(default_factory=dict, repr=False)
    _mats: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------------------
# quadrature rules

def _gl_on_cells(edges: np.ndarray, order: int):
    """Composite Gauss-Legendre nodes/weights on consecutive cells."""
    x0, w0 = leggauss(order)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)[:, None]
    half = 0.5 * (b - a)[:, None]
    nodes = (mid + half * x0[None, :]).ravel()
    weights = (half * w0[None, :]).ravel()
    return nodes, weights


def _positive_partition(plan: KernelPlan, t: float) -> np.ndarray:
    """Cell edges on (0, L_out] for the analytic rule: dyadic shells toward
    the origin, uniform cells across the box, geometric extension beyond."""
    grid = plan.grid
    h = min(grid.axis_spacing(i) for i in range(grid.ndim))
    w = min(h, np.sqrt(t), 0.5)
    # dyadic levels chosen so the dropped core mass ~ r_min^(N-gamma) is
    # below the refinement target
    margin = plan.spec.N - plan.spec.gamma
    levels = int(np.ceil(np.log2(w) - np.log(plan.refine_target) / margin
                         / np.log(2.0)))
    levels = min(max(levels, 10), 400)
    shells = w * 2.0 ** (-np.arange(levels, -1, -1, dtype=float))
    n_cells = int(np.ceil((grid.L - w) / w))
    body = np.linspace(w, grid.L, n_cells + 1)[1:]
    L_out = grid.L + plan.pad_sigma * np.sqrt(t)
    w_ext = max(w, np.sqrt(t))
    n_ext = int(np.ceil((L_out - grid.L) / w_ext))
    ext = grid.L + w_ext * np.arange(1, n_ext + 1)
    return np.concatenate([shells, body, ext])


def _axis_rule(plan: KernelPlan, axis: int, t: float, analytic: bool):
    """Per-axis quadrature nodes/weights.

    Grid-only fields use the midpoint rule on the grid itself; analytic
    (profile-backed) fields get the refined composite rule.
    """
    kind = plan.grid.axes[axis]
    key = (axis, float(t), analytic)
    rule = plan._rules.get(key)
    if rule is not None:
        return rule
    if not analytic:
        nodes = plan.grid.axis_nodes(axis)
        weights = np.full(nodes.size, plan.grid.axis_spacing(axis))
        rule = (nodes, weights)
    else:
        edges = _positive_partition(plan, t)
        h = min(plan.grid.axis_spacing(i) for i in range(plan.grid.ndim))
        w = min(h, np.sqrt(t), 0.5)
        n_shells = int(np.searchsorted(edges, w * (1.0 + 1e-12)))
        sing_nodes, sing_w = _gl_on_cells(edges[:n_shells + 1],
                                          plan.gl_singular)
        smooth_nodes, smooth_w = _gl_on_cells(edges[n_shells:], plan.gl_smooth)
        # innermost dropped core [0, edges[0]] is below refine_target by
        # construction
        pos = np.concatenate([sing_nodes, smooth_nodes])
        wts = np.concatenate([sing_w, smooth_w])
        if kind in (AXIS_SYM, AXIS_FULL, AXIS_PERIODIC):
            pos = np.concatenate([-pos[::-1], pos])
            wts = np.concatenate([wts[::-1], wts])
        rule = (pos, wts)
    plan._rules[key] = rule
    return rule


def _k1d(kind: str, x: np.ndarray, y: np.ndarray, t: float,
         L: float) -> np.ndarray:
    """One-axis kernel factor matrix, shape (len(x), len(y))."""
    c = (4.0 * np.pi * t) ** -0.5
    dx = x[:, None] - y[None, :]
    if kind == AXIS_ANTISYM:
        sx = x[:, None] + y[None, :]
        return c * (np.exp(-dx * dx / (4.0 * t))
                    - np.exp(-sx * sx / (4.0 * t)))
    if kind == AXIS_PERIODIC:
        images = int(np.ceil(4.0 * np.sqrt(t) / (2.0 * L))) + 1
        out = np.zeros_like(dx)
        for k in range(-images, images + 1):
            d = dx + 2.0 * L * k
            out += np.exp(-d * d / (4.0 * t))
        return c * out
    return c * np.exp(-dx * dx / (4.0 * t))


def _axis_matrix(plan: KernelPlan, axis: int, t: float, analytic: bool,
                 out_nodes: np.ndarray) -> np.ndarray:
    key = (axis, float(t), analytic, out_nodes.size,
           float(out_nodes[0]), float(out_nodes[-1]))
    mat = plan._mats.get(key)
    if mat is not None:
        return mat
    y, w = _axis_rule(plan, axis, t, analytic)
    mat = _k1d(plan.grid.axes[axis], out_nodes, y, t, plan.grid.L) * w[None, :]
    plan._mats[key] = mat
    return mat


def _quad_mesh(plan: KernelPlan, t: float) -> np.ndarray:
    axes = [_axis_rule(plan, i, t, True)[0] for i in range(plan.grid.ndim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _contract(mats: list[np.ndarray], F: np.ndarray) -> np.ndarray:
    out = F
    for i, A in enumerate(mats):
        out = np.moveaxis(np.tensordot(A, out, axes=([1], [i])), 0, i)
    return out


def apply_kernel(plan: KernelPlan, t: float, f: Field,
                 out_grid: GridSpec | None = None) -> Field:
    """e^{t D_Omega} f by product-kernel quadrature.

    Profile-backed fields are re-sampled on the refined rule (resolving the
    origin singularity and the tail beyond the box); plain grid fields use
    the grid itself as the rule.
    """
    if t <= 0.0:
        raise ValueError("apply_kernel requires t > 0")
    out_grid = out_grid or f.grid
    analytic = f.profile is not None
    if analytic:
        F = f.profile(_quad_mesh(plan, t))
    else:
        F = f.values
        h = max(f.grid.axis_spacing(i) for i in range(f.grid.ndim))
        if np.sqrt(4.0 * t) < 1.5 * h:
            warnings.warn(
                f"apply_kernel: kernel width sqrt(4t)={np.sqrt(4 * t):.3g} "
                f"under-resolved by grid spacing {h:.3g}", RuntimeWarning)
        _warn_tail_mass(plan, t, f)
    mats = [_axis_matrix(plan, i, t, analytic, out_grid.axis_nodes(i))
            for i in range(out_grid.ndim)]
    values = _contract(mats, F)
    prev = f.time_tag or 0.0
    return Field(f.spec, out_grid, values, time_tag=prev + t)


def _warn_tail_mass(plan: KernelPlan, t: float, f: Field) -> None:
    # crude truncation estimate: largest boundary magnitude times the
    # Gaussian mass that one axis can pull in from beyond the box
    edge = 0.0
    for i in range(f.grid.ndim):
        sl = [slice(None)] * f.grid.ndim
        for j in (0, -1):
            sl[i] = j
            edge = max(edge, float(np.max(np.abs(f.values[tuple(sl)]))))
    if edge == 0.0:
        return
    from scipy.special import erfc
    h = f.grid.axis_spacing(0)
    mass = 0.5 * erfc(0.5 * h / np.sqrt(4.0 * t))
    if edge * mass > plan.tail_tol * max(f.sup_norm(), 1e-300):
        warnings.warn(
            f"apply_kernel: boundary truncation mass ~{edge * mass:.2e} "
            "exceeds tolerance; enlarge the box", RuntimeWarning)


def heat_at_points(plan: KernelPlan, t: float, profile, pts,
                   F: np.ndarray | None = None) -> np.ndarray:
    """Pointwise e^{t D_Omega} applied to an analytic profile at arbitrary
    points (used for sup-norm refinement off the grid).  Pass F (the profile
    pre-sampled on the quadrature mesh) to amortize repeated calls."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if F is None:
        F = profile(_quad_mesh(plan, t))
    out = np.empty(pts.shape[0])
    for k, x in enumerate(pts):
        v = F
        for i in range(plan.grid.ndim):
            y, w = _axis_rule(plan, i, t, True)
            row = _k1d(plan.grid.axes[i], np.array([x[i]]), y, t,
                       plan.grid.L)[0] * w
            v = np.tensordot(row, v, axes=([0], [0]))
        out[k] = float(v)
    return out


# ---------------------------------------------------------------------------
# spectral path (Dirichlet at the outer box, sine bases make anti-symmetry
# exact; periodic axes use the FFT)

def _axis_freqs(grid: GridSpec, i: int) -> np.ndarray:
    kind = grid.axes[i]
    n = len(grid.axis_nodes(i))
    if kind == AXIS_ANTISYM:
        return np.arange(1, n + 1) * np.pi / grid.L
    if kind in (AXIS_SYM, AXIS_FULL):
        return np.arange(1, n + 1) * np.pi / (2.0 * grid.L)
    # periodic
    return 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * grid.L / n)


def _forward(kind: str, v: np.ndarray, axis: int) -> np.ndarray:
    if kind == AXIS_ANTISYM:
        return dst(v, type=1, axis=axis)
    if kind in (AXIS_SYM, AXIS_FULL):
        return dst(v, type=2, axis=axis)
    return fft(v, axis=axis)


def _inverse(kind: str, v: np.ndarray, axis: int) -> np.ndarray:
    if kind == AXIS_ANTISYM:
        return idst(v, type=1, axis=axis)
    if kind in (AXIS_SYM, AXIS_FULL):
        return idst(v, type=2, axis=axis)
    return ifft(v, axis=axis)


def apply_spectral(plan: KernelPlan, t: float, f: Field) -> Field:
    """e^{t D} f via per-axis sine/Fourier transforms; exact in time for the
    discrete modes, identity at t = 0."""
    if t < 0.0:
        raise ValueError("apply_spectral requires t >= 0")
    grid = f.grid
    v = f.values.astype(complex if AXIS_PERIODIC in grid.axes else float)
    for i in range(grid.ndim):
        v = _forward(grid.axes[i], v, i)
    ksq = np.zeros(v.shape)
    for i in range(grid.ndim):
        k = _axis_freqs(grid, i)
        shape = [1] * grid.ndim
        shape[i] = k.size
        ksq = ksq + (k ** 2).reshape(shape)
    v = v * np.exp(-t * ksq)
    for i in range(grid.ndim):
        v = _inverse(grid.axes[i], v, i)
    values = v.real if np.iscomplexobj(v) else v
    prev = f.time_tag or 0.0
    return Field(f.spec, grid, values, time_tag=prev + t)


# ---------------------------------------------------------------------------
# the reference linear flow Psi(t) = e^{t D_Omega} psi0 and its cache

def _tail_series(spec: SectorSpec, kmax: int = 6) -> np.ndarray:
    """Far-field expansion e^D psi0 = psi0 sum_k c_k r^{-2k} (asymptotic),
    from iterating Lap (psi0 r^{-2k}) = (gamma+2m+2k)(gamma+2k+2-N)
    psi0 r^{-2k-2}: c_0 = 1, c_{k+1} = c_k (gamma+2m+2k)(gamma+2k+2-N)/(k+1).
    """
    b = spec.gamma + 2 * spec.m
    c = np.empty(kmax + 1)
    c[0] = 1.0
    for k in range(kmax):
        c[k + 1] = c[k] * (b + 2 * k) * (spec.gamma + 2 * k + 2.0 - spec.N) \
            / (k + 1)
    return c


def _tail_coeffs(spec: SectorSpec) -> tuple[float, float]:
    c = _tail_series(spec, 2)
    return float(c[1]), float(c[2])


@dataclass
class PsiCache:
    """Reference field E = e^{D_Omega} psi0 on a fine grid plus its sup-norm."""

    spec: SectorSpec
    grid: GridSpec
    values: np.ndarray
    C_inf: float
    _interp: object = field(default=None, repr=False)

    def interp(self):
        if self._interp is None:
            ref = Field(self.spec, self.grid, self.values)
            from .geometry import _augmented_axes_values
            axes, vals = _augmented_axes_values(ref)
            self._interp = RegularGridInterpolator(
                axes, vals, method="cubic", bounds_error=False,
                fill_value=None)
        return self._interp

    @property
    def tail_radius(self) -> float:
        # stay a cell inside the cached box so cubic interpolation never
        # touches the zero-padded boundary stencil
        edge = min(float(np.max(np.abs(self.grid.axis_nodes(i))))
                   for i in range(self.grid.ndim))
        return 0.95 * edge


def linear_sup(plan: KernelPlan, profile, t: float,
               sampled: Field | None = None) -> float:
    """sup-norm of e^{t D_Omega} applied to an analytic profile.

    Starts from the grid argmax (plus the origin when no axis is
    anti-symmetric, since offset grids exclude it) and refines off-grid with
    a simplex search over pointwise quadrature evaluations.
    """
    spec, grid = plan.spec, plan.grid
    if sampled is None:
        from .geometry import field_from_profile
        sampled = apply_kernel(plan, t, field_from_profile(spec, grid, profile))
    idx = np.unravel_index(np.argmax(np.abs(sampled.values)),
                           sampled.values.shape)
    x0 = np.array([grid.axis_nodes(i)[idx[i]] for i in range(grid.ndim)])
    candidates = [x0]
    if spec.m == 0:
        candidates.append(np.zeros(grid.ndim))

    F = profile(_quad_mesh(plan, t))

    def neg(x):
        xc = np.clip(x, -0.95 * grid.L, 0.95 * grid.L)
        xc[:spec.m] = np.abs(xc[:spec.m])
        return -abs(heat_at_points(plan, t, profile, xc[None, :], F=F)[0])

    best = 0.0
    for c in candidates:
        res = minimize(neg, c, method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-12,
                                "maxiter": 400})
        best = max(best, -res.fun, -neg(c))
    return float(best)


def build_psi_cache(spec: SectorSpec, grid: GridSpec,
                    plan: KernelPlan | None = None) -> PsiCache:
    """Compute E = e^{D_Omega} psi0 once at t = 1 and locate its sup-norm."""
    plan = plan or KernelPlan(spec, grid)
    psi0 = Psi0Profile(spec)
    from .geometry import field_from_profile
    E = apply_kernel(plan, 1.0, field_from_profile(spec, grid, psi0))
    C_inf = linear_sup(plan, psi0, 1.0, sampled=E)
    return PsiCache(spec=spec, grid=grid, values=E.values, C_inf=C_inf)


def psi_values(cache: PsiCache, t: float, pts: np.ndarray) -> np.ndarray:
    """Psi(t, x) = t^{-(gamma+m)/2} E(x / sqrt t), with the asymptotic tail
    once the dilated argument leaves the cached grid."""
    if t <= 0.0:
        raise ValueError("psi requires t > 0")
    spec = cache.spec
    pts = np.asarray(pts, dtype=float)
    y = pts / np.sqrt(t)
    r = np.sqrt(np.sum(y * y, axis=-1))
    flat_y = y.reshape(-1, cache.grid.ndim)
    flat_r = r.ravel()
    out = np.empty(flat_r.shape)
    inside = flat_r < cache.tail_radius
    if np.any(inside):
        out[inside] = cache.interp()(flat_y[inside])
    if np.any(~inside):
        yo = flat_y[~inside]
        ro = flat_r[~inside]
        ck = _tail_series(spec)
        coord = np.prod(yo[:, :spec.m], axis=-1) if spec.m else 1.0
        psi0v = leading_constant(spec) * coord * ro ** (-spec.gamma - 2 * spec.m)
        out[~inside] = psi0v * np.polyval(ck[::-1], ro ** -2.0)
    out = out * t ** (-spec.decay / 2.0)
    return np.maximum(out, 1e-280).reshape(r.shape)


class PsiProfile:
    """Analytic-style handle for Psi(t) = e^{t D_Omega} psi0 built on a cache."""

    def __init__(self, cache: PsiCache, t: float, amplitude: float = 1.0):
        self.cache = cache
        self.t = t
        self.amplitude = amplitude
        self.tail_degree = -(cache.spec.gamma + cache.spec.m)

    def __call__(self, pts):
        return self.amplitude * psi_values(self.cache, self.t, pts)


def psi_fast(cache: PsiCache, t: float,
             grid: GridSpec | None = None) -> Field:
    """Sample Psi(t) on a grid through the dilation identity."""
    grid = grid or cache.grid
    vals = psi_values(cache, t, grid.points())
    return Field(cache.spec, grid, vals, time_tag=t,
                 profile=PsiProfile(cache, t))


def psi_sup(cache: PsiCache, t: float) -> float:
    """sup-norm law: ||Psi(t)|| = C_inf * t^{-(gamma+m)/2}, exact."""
    return cache.C_inf * t ** (-cache.spec.decay / 2.0)


def alpha_time_integral(cache: PsiCache, T: float,
                        alpha: float | None = None) -> float:
    """I(T) = int_0^T ||Psi||^alpha dt, closed form from the sup-norm law.

    Finite only in the subcritical range alpha < 2/(gamma+m).
    """
    spec = cache.spec
    alpha = spec.alpha if alpha is None else alpha
    expo = 1.0 - alpha * spec.decay / 2.0
    if expo <= 0.0:
        raise ValueError(
            f"int_0^T ||Psi||^alpha diverges at t=0: alpha={alpha} >= "
            f"2/(gamma+m)={spec.alpha_critical}")
    if T < 0.0:
        raise ValueError("T must be nonnegative")
    return cache.C_inf ** alpha * T ** expo / expo


# ---------------------------------------------------------------------------
# cache persistence (deterministic layout + checksum)

def save_cache(cache: PsiCache, path: str) -> None:
    spec, grid = cache.spec, cache.grid
    header = json.dumps({
        "N": spec.N, "m": spec.m, "gamma": spec.gamma, "alpha": spec.alpha,
        "sign_a": spec.sign_a, "L": grid.L, "n": grid.n,
        "axes": list(grid.axes), "C_inf": cache.C_inf,
    }, sort_keys=True).encode()
    payload = np.ascontiguousarray(cache.values, dtype="<f8").tobytes()
    digest = hashlib.sha256(header + payload).hexdigest().encode()
    with open(path, "wb") as fh:
        fh.write(b"SHC1")
        fh.write(struct.pack("<i", len(header)))
        fh.write(header)
        fh.write(digest)
        fh.write(payload)


def load_cache(path: str) -> PsiCache:
    with open(path, "rb") as fh:
        if fh.read(4) != b"SHC1":
            raise ValueError(f"{path} is not a psi cache file")
        (hlen,) = struct.unpack("<i", fh.read(4))
        header = fh.read(hlen)
        digest = fh.read(64)
        payload = fh.read()
    if hashlib.sha256(header + payload).hexdigest().encode() != digest:
        raise ValueError(f"{path}: checksum mismatch, cache corrupted")
    meta = json.loads(header)
    spec = SectorSpec(meta["N"], meta["m"], meta["gamma"], meta["alpha"],
                      meta["sign_a"])
    grid = GridSpec(meta["L"], meta["n"], tuple(meta["axes"]))
    values = np.frombuffer(payload, dtype="<f8").reshape(grid.shape())
    return PsiCache(spec=spec, grid=grid, values=values.copy(),
                    C_inf=meta["C_inf"])
