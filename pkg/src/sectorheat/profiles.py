"""Initial-data families with exact pointwise evaluation.

The reference singular profile is

    psi0(x) = c * x_1 ... x_m * |x|^(-gamma-2m),
    c = gamma (gamma+2) ... (gamma+2m-2),  c = 1 when m = 0,

positive on the sector and homogeneous of degree -(gamma+m).  Built-in
families: psi0 itself, log-radially modulated psi0, the m-fold Gaussian
derivative (smoothed derivative-of-delta data), constants, and custom
callables with a declared tail homogeneity.
"""

from __future__ import annotations

import numpy as np

from .geometry import SectorSpec


def leading_constant(spec: SectorSpec) -> float:
    """c = gamma (gamma+2) ... (gamma+2m-2); equals 1 when m = 0."""
    c = 1.0
    for k in range(spec.m):
        c *= spec.gamma + 2 * k
    return c


def _split_points(spec: SectorSpec, pts):
    pts = np.asarray(pts, dtype=float)
    if pts.shape[-1] != spec.N:
        raise ValueError(f"points must have last dimension {spec.N}")
    r = np.sqrt(np.sum(pts * pts, axis=-1))
    return pts, r


def eval_psi0(spec: SectorSpec, pts) -> np.ndarray:
    """Exact pointwise psi0.  Rejects the origin and sector walls."""
    pts, r = _split_points(spec, pts)
    if np.any(r == 0.0):
        raise ValueError("psi0 is singular at the origin")
    coord_prod = np.prod(pts[..., :spec.m], axis=-1) if spec.m else 1.0
    if spec.m and np.any(coord_prod == 0.0):
        raise ValueError("psi0 evaluation point lies on a sector wall")
    return leading_constant(spec) * coord_prod * r ** (-spec.gamma - 2 * spec.m)


def _psi0_signed(spec: SectorSpec, pts) -> np.ndarray:
    """psi0 extended anti-symmetrically: sign flips with the first m
    coordinates, zero on walls.  Used internally for full-box sampling."""
    pts, r = _split_points(spec, pts)
    out = np.zeros(r.shape)
    ok = r > 0.0
    coord_prod = np.prod(pts[..., :spec.m], axis=-1) if spec.m else np.ones(r.shape)
    out[ok] = (leading_constant(spec) * np.asarray(coord_prod)[ok]
               * r[ok] ** (-spec.gamma - 2 * spec.m))
    return out


def eval_gaussian_derivative(spec: SectorSpec, t: float, pts) -> np.ndarray:
    """(-1)^m d_1...d_m G_t(x) = G_t(x) * prod_i x_i/(2t); equals G_t if m=0."""
    if t <= 0.0:
        raise ValueError("Gaussian-derivative profile requires t > 0")
    pts, r = _split_points(spec, pts)
    g = (4.0 * np.pi * t) ** (-spec.N / 2.0) * np.exp(-r * r / (4.0 * t))
    for i in range(spec.m):
        g = g * pts[..., i] / (2.0 * t)
    return g


def eval_modulated(spec: SectorSpec, g, zeta, pts) -> np.ndarray:
    """psi0(x) * g(log|x|) * zeta(x/|x|); g bounded, zeta anti-symmetric.

    Pass zeta=None for the default (the angular factor of psi0 is already
    absorbed in psi0, so zeta is identically 1).
    """
    pts, r = _split_points(spec, pts)
    base = eval_psi0(spec, pts)
    out = base * g(np.log(r))
    if zeta is not None:
        out = out * zeta(pts / r[..., None])
    return out


# ---------------------------------------------------------------------------
# profile objects (callables with metadata), usable as Field profile handles

class Psi0Profile:
    kind = "psi0"

    def __init__(self, spec: SectorSpec, amplitude: float = 1.0):
        self.spec = spec
        self.amplitude = amplitude
        self.tail_degree = -(spec.gamma + spec.m)

    def __call__(self, pts):
        return self.amplitude * _psi0_signed(self.spec, pts)

    def x_norm(self) -> float:
        # psi0 has X-norm exactly 1
        return abs(self.amplitude)

    def scaled(self, lam: float) -> "Psi0Profile":
        return Psi0Profile(self.spec, self.amplitude * lam)


class SinSquaredLog:
    """g(s) = sin^2(s + shift) + eps; eps > 0 keeps the liminf positive."""

    def __init__(self, eps: float = 0.05, shift: float = 0.0):
        self.eps = eps
        self.shift = shift

    def __call__(self, s):
        return np.sin(np.asarray(s) + self.shift) ** 2 + self.eps

    @property
    def sup(self) -> float:
        return 1.0 + self.eps


class ConstantModulation:
    def __init__(self, value: float = 1.0):
        self.value = value

    def __call__(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.value)

    @property
    def sup(self) -> float:
        return abs(self.value)


class LogBlockModulation:
    """Piecewise-constant g alternating between c1 and c2 on log-radius
    blocks [a_k, a_{k+1}) with geometrically growing lengths, so dilation
    along matched sequences sees a single constant over any fixed annulus."""

    def __init__(self, c1: float, c2: float, base: float = 1.0,
                 growth: float = 2.0):
        self.c1 = c1
        self.c2 = c2
        self.base = base
        self.growth = growth

    def block_edge(self, k: int) -> float:
        return self.base * self.growth ** k

    def block_center(self, k: int) -> float:
        return 0.5 * (self.block_edge(k) + self.block_edge(k + 1))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        # block index: k such that base*growth^k <= s < base*growth^(k+1);
        # everything below the first edge belongs to block 0
        k = np.floor(np.log(np.maximum(s, self.base) / self.base)
                     / np.log(self.growth)).astype(int)
        return np.where(k % 2 == 0, self.c1, self.c2)

    @property
    def sup(self) -> float:
        return max(abs(self.c1), abs(self.c2))


class ModulatedProfile:
    kind = "modulated_psi0"

    def __init__(self, spec: SectorSpec, g, amplitude: float = 1.0,
                 zeta=None):
        self.spec = spec
        self.g = g
        self.zeta = zeta
        self.amplitude = amplitude
        self.tail_degree = -(spec.gamma + spec.m)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        out = self.amplitude * _psi0_signed(self.spec, pts)
        ok = r > 0.0
        out[ok] = out[ok] * self.g(np.log(r[ok]))
        if self.zeta is not None:
            out[ok] = out[ok] * self.zeta(pts[ok] / r[ok, None])
        return out

    def x_norm(self) -> float:
        if self.zeta is not None:
            raise NotImplementedError("X-norm with a custom angular factor")
        sup_g = getattr(self.g, "sup", None)
        if sup_g is None:
            s = np.linspace(-40.0, 40.0, 200001)
            sup_g = float(np.max(np.abs(self.g(s))))
        return abs(self.amplitude) * sup_g

    def scaled(self, lam: float) -> "ModulatedProfile":
        return ModulatedProfile(self.spec, self.g, self.amplitude * lam,
                                self.zeta)

    def log_shifted(self, shift: float) -> "ModulatedProfile":
        """Profile with g replaced by s -> g(s + shift); this is the exact
        form of lam^(gamma+m) D_lam applied to the profile, shift = log lam."""
        g = self.g
        shifted = lambda s, _g=g, _d=shift: _g(np.asarray(s) + _d)
        shifted.sup = getattr(g, "sup", None)
        if shifted.sup is None:
            del shifted.sup
        return ModulatedProfile(self.spec, shifted, self.amplitude, self.zeta)


class GaussianDerivativeProfile:
    kind = "gaussian_derivative"

    def __init__(self, spec: SectorSpec, t0: float, amplitude: float = 1.0):
        if t0 <= 0.0:
            raise ValueError("t0 must be positive")
        self.spec = spec
        self.t0 = t0
        self.amplitude = amplitude
        self.tail_degree = None  # Gaussian tail, faster than any power

    def __call__(self, pts):
        return self.amplitude * eval_gaussian_derivative(self.spec, self.t0, pts)

    def x_norm(self) -> float:
        # ratio against psi0 vanishes at 0 and infinity; scan the radial max
        spec = self.spec
        r = np.geomspace(1e-3, 30.0 * np.sqrt(self.t0), 4000)
        # along the diagonal of the sector the ratio depends only on |x|
        x = np.zeros((r.size, spec.N))
        for i in range(spec.N):
            x[:, i] = r / np.sqrt(spec.N)
        ratio = np.abs(self(x)) / eval_psi0(spec, x)
        return float(np.max(ratio))

    def scaled(self, lam: float) -> "GaussianDerivativeProfile":
        return GaussianDerivativeProfile(self.spec, self.t0,
                                         self.amplitude * lam)


class ConstantProfile:
    kind = "constant"

    def __init__(self, spec: SectorSpec, value: float = 1.0):
        self.spec = spec
        self.value = value
        self.tail_degree = None

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.full(pts.shape[:-1], self.value)

    def scaled(self, lam: float) -> "ConstantProfile":
        return ConstantProfile(self.spec, self.value * lam)


class CustomProfile:
    kind = "custom"

    def __init__(self, spec: SectorSpec, fn, tail_degree: float | None = None,
                 amplitude: float = 1.0):
        self.spec = spec
        self.fn = fn
        self.amplitude = amplitude
        self.tail_degree = tail_degree

    def __call__(self, pts):
        return self.amplitude * self.fn(np.asarray(pts, dtype=float))

    def scaled(self, lam: float) -> "CustomProfile":
        return CustomProfile(self.spec, self.fn, self.tail_degree,
                             self.amplitude * lam)


def scale_profile(profile, lam: float):
    if hasattr(profile, "scaled"):
        return profile.scaled(lam)
    return CustomProfile(getattr(profile, "spec"), profile, amplitude=lam,
                         tail_degree=getattr(profile, "tail_degree", None))
