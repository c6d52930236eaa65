"""Transforms linking a population spectrum model to its limiting sample spectrum.

The central objects are the companion Stieltjes transform of a sample
spectrum and the model-side map that sends a candidate transform value s
to the spectrum point

    u(s) = -1/s + c * integral t / (1 + t s) dH(t),

where H is the population model and c the dimension-to-sample aspect
ratio.  Restricted to the set where du/ds > 0 (and -1/s avoids the model
support), this map is a monotone bijection onto the complement of the
limiting sample spectrum support, which is what the whole estimation
strategy rests on.  This module evaluates the map and its derivative,
solves the defining equation in the upper half plane and on the real
line, recovers the limiting spectral density, and locates the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, optimize, special

from .errors import IterationError, NearPoleError, PoleError, ScanResolutionError
from .models import Discrete, InverseCubic, Laguerre, PointMass, PSDModel

__all__ = [
    "AspectRatio",
    "SampleSpectrum",
    "DensityCurve",
    "SupportReport",
    "companion_stieltjes",
    "mp_u_map",
    "mp_u_derivative",
    "laguerre_moment_integrals",
    "solve_companion_fixed_point",
    "solve_companion_real",
    "lsd_density_curve",
    "support_bounds",
]

# minimum |1 + t*s| (equivalently distance of -1/s from the model support)
# accepted when evaluating the map at real s
POLE_GUARD = 1e-6

_EIG_TOL = 1e-12      # how close a transform argument may sit to an eigenvalue
_CLAMP_TOL = 1e-10    # sample eigenvalues below -this are rejected, above clamped


@dataclass(frozen=True)
class AspectRatio:
    """Dimension-to-sample ratio p/n of a covariance estimation problem."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError("aspect ratio must be positive and finite")
        object.__setattr__(self, "value", v)

    @classmethod
    def from_dims(cls, p: int, n: int) -> "AspectRatio":
        return cls(p / n)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class SampleSpectrum:
    """Eigenvalues of a sample covariance matrix, stored descending.

    When the dimension p exceeds the sample count n the spectrum must
    carry its p - n structural zeros explicitly; several transform
    identities rely on them.
    """

    eigenvalues: NDArray
    p: int
    n: int

    def __post_init__(self):
        p, n = int(self.p), int(self.n)
        if p <= 0 or n <= 0:
            raise ValueError("p and n must be positive")
        eig = np.asarray(self.eigenvalues, dtype=float).ravel()
        if eig.size != p:
            raise ValueError(f"expected {p} eigenvalues, got {eig.size}")
        if not np.all(np.isfinite(eig)):
            raise ValueError("eigenvalues must be finite")
        if eig.min(initial=0.0) < -_CLAMP_TOL:
            raise ValueError(f"eigenvalue {eig.min():.3e} is negative beyond tolerance")
        eig = np.where(eig < 0.0, 0.0, eig)
        eig = np.sort(eig)[::-1].copy()
        if p > n and np.count_nonzero(eig == 0.0) < p - n:
            raise ValueError(f"spectrum with p > n needs at least {p - n} exact zeros")
        eig.flags.writeable = False
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n", n)

    @property
    def aspect_ratio(self) -> AspectRatio:
        return AspectRatio(self.p / self.n)

    def largest(self) -> float:
        return float(self.eigenvalues[0])

    def smallest_positive(self) -> float:
        pos = self.eigenvalues[self.eigenvalues > 0.0]
        if pos.size == 0:
            raise ValueError("spectrum has no positive eigenvalues")
        return float(pos[-1])


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """A density sampled on a strictly increasing grid."""

    x: NDArray
    f: NDArray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        f = np.asarray(self.f, dtype=float).ravel()
        if x.size != f.size or x.size == 0:
            raise ValueError("x and f must be matching nonempty arrays")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(f))):
            raise ValueError("curve values must be finite")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("x must be strictly increasing")
        if f.min(initial=0.0) < -1e-9:
            raise ValueError(f"density value {f.min():.3e} is negative beyond tolerance")
        f = np.where(f < 0.0, 0.0, f)
        x = x.copy()
        x.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", f)

    def mass(self) -> float:
        """Trapezoid integral of the curve."""
        return float(integrate.trapezoid(self.f, self.x))


def companion_stieltjes(spectrum: SampleSpectrum, u):
    """Companion Stieltjes transform of a sample spectrum at real u.

    Evaluates -(1 - p/n)/u + (1/n) * sum_l 1/(lambda_l - u).  Arguments
    within 1e-12 of an eigenvalue (or of zero) raise PoleError.
    """
    u_arr = np.asarray(u, dtype=float)
    eig = spectrum.eigenvalues
    diffs = eig[..., None] - u_arr[None, ...] if u_arr.ndim else eig - u_arr
    gap = np.min(np.abs(diffs), axis=0)
    if np.any(gap < _EIG_TOL) or np.any(np.abs(u_arr) < _EIG_TOL):
        bad = np.abs(u_arr) < _EIG_TOL
        where = 0.0 if np.any(bad) else float(eig[np.argmin(np.abs(diffs))])
        raise PoleError(f"u={u!r} sits on a pole of the transform", where=where)
    ratio = spectrum.p / spectrum.n
    out = -(1.0 - ratio) / u_arr + np.sum(1.0 / diffs, axis=0) / spectrum.n
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# model-side kernel integrals K1(s) = int t/(1+ts) dH, K2(s) = int t^2/(1+ts)^2 dH

_GL_LAGUERRE = special.roots_laguerre(128)

_leg_x, _leg_w = np.polynomial.legendre.leggauss(200)
_UNIT_NODES = 0.5 * (_leg_x + 1.0)        # Gauss-Legendre on (0, 1)
_UNIT_WEIGHTS = 0.5 * _leg_w


def _scaled_exp1(b: float) -> float:
    """exp(b) * E1(b) for b > 0, stable for large b via a continued fraction."""
    if b < 2.0:
        return float(np.exp(b) * special.exp1(b))
    # Lentz evaluation of E1(b) e^b = 1/(b + 1/(1 + 1/(b + 2/(1 + 2/(b + ...)))))
    tiny = 1e-300
    f, cc, dd = tiny, tiny, 0.0
    a_k, b_k = 1.0, b
    k = 0
    for i in range(400):
        dd = b_k + a_k * dd
        if dd == 0.0:
            dd = tiny
        cc = b_k + a_k / cc
        if cc == 0.0:
            cc = tiny
        dd = 1.0 / dd
        delta = cc * dd
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
        if i % 2 == 0:
            k += 1
            a_k, b_k = float(k), 1.0
        else:
            a_k, b_k = float(k), b
    return f


def _laguerre_I_recursion(s: float, degree: int, derivative: bool = False):
    """I_j(s) and optionally I_j'(s) for j = 0..degree at real s >= 1.

    Uses J_0 = b e^b E1(b) with b = 1/s and the upward recursion
    J_{r+1} = (r! - J_r)/s for the moments J_r = int t^r e^-t/(1+ts) dt;
    I_j = J_{j+1}.  Upward differences stay order one for s >= 1, so no
    cancellation builds up.
    """
    b = 1.0 / s
    e_scaled = _scaled_exp1(b)
    J = b * e_scaled
    dJ = -b * b * ((1.0 + b) * e_scaled - 1.0)
    vals = np.empty(degree + 1)
    ders = np.empty(degree + 1)
    fact = 1.0
    for r in range(degree + 1):
        J_next = (fact - J) / s
        dJ_next = -(J_next + dJ) / s
        vals[r], ders[r] = J_next, dJ_next
        J, dJ = J_next, dJ_next
        fact *= r + 1
    return (vals, ders) if derivative else vals


def laguerre_moment_integrals(s, degree: int, derivative: bool = False):
    """Moment integrals I_j(s) = int t^{j+1} e^-t / (1 + t s) dt, j = 0..degree.

    Real arguments must be positive (for s <= 0 the integrand has a pole
    inside the integration range); complex arguments with nonzero
    imaginary part are evaluated by Gauss-Laguerre quadrature.  Returns
    an array of shape (degree + 1,) + shape(s); with ``derivative`` a
    pair (I, dI/ds) is returned.
    """
    s_arr = np.asarray(s)
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)
    x, w = _GL_LAGUERRE
    if np.iscomplexobj(s_arr):
        vals = np.empty((degree + 1, s_arr.size), dtype=complex)
        ders = np.empty_like(vals)
        denom = 1.0 + np.outer(x, s_arr)
        for j in range(degree + 1):
            wj = w * x ** (j + 1)
            vals[j] = wj @ (1.0 / denom)
            ders[j] = -(wj * x) @ (1.0 / denom**2)
    else:
        s_arr = s_arr.astype(float)
        if np.any(s_arr <= 0.0):
            raise ValueError("real arguments must be positive")
        vals = np.empty((degree + 1, s_arr.size))
        ders = np.empty_like(vals)
        small = s_arr <= 1.0
        if small.any():
            denom = 1.0 + np.outer(x, s_arr[small])
            for j in range(degree + 1):
                wj = w * x ** (j + 1)
                vals[j, small] = wj @ (1.0 / denom)
                ders[j, small] = -(wj * x) @ (1.0 / denom**2)
        for i in np.flatnonzero(~small):
            vals[:, i], ders[:, i] = _laguerre_I_recursion(float(s_arr[i]), degree,
                                                           derivative=True)
    if scalar:
        vals, ders = vals[:, 0], ders[:, 0]
    return (vals, ders) if derivative else vals


def _guard_atoms(atoms, s_arr, guard):
    denom = 1.0 + np.outer(atoms, s_arr)
    if guard is not None and not np.iscomplexobj(s_arr):
        closeness = np.abs(denom)
        if closeness.min() < guard:
            i, j = np.unravel_index(np.argmin(closeness), closeness.shape)
            raise NearPoleError(
                f"companion value {s_arr[j]!r} puts -1/s within the guard of "
                f"atom {atoms[i]!r}",
                where=float(atoms[i]),
                margin=float(closeness.min()),
            )
    return denom


def _ic_nodes(model: InverseCubic):
    # quantile substitution w = (1-alpha)/(t - shift): dH becomes 2 w dw on (0, 1)
    t = model.shift + (1.0 - model.alpha) / _UNIT_NODES
    w = 2.0 * _UNIT_NODES * _UNIT_WEIGHTS
    return t, w


def _kernel(model: PSDModel, s_arr, guard, squared: bool):
    """K2 when ``squared`` else K1, vectorized over the trailing axis of s."""
    if isinstance(model, (Discrete, PointMass)):
        atoms, weights = ((model.atoms, model.weights)
                          if isinstance(model, Discrete)
                          else (np.array([model.at]), np.array([1.0])))
        denom = _guard_atoms(atoms, s_arr, guard)
        if squared:
            return (weights * atoms**2) @ (1.0 / denom**2)
        return (weights * atoms) @ (1.0 / denom)
    if isinstance(model, Laguerre):
        if not np.iscomplexobj(s_arr) and np.any(s_arr < 0.0):
            bad = float(s_arr[s_arr < 0.0][0])
            if guard is not None:
                raise NearPoleError(
                    f"companion value {bad!r} puts -1/s inside the model support",
                    where=-1.0 / bad, margin=0.0)
        vals, ders = laguerre_moment_integrals(s_arr, model.degree, derivative=True)
        coeffs = model.full_coeffs
        if squared:
            return -(coeffs @ ders)
        return coeffs @ vals
    if isinstance(model, InverseCubic):
        if not np.iscomplexobj(s_arr) and guard is not None:
            neg = s_arr < 0.0
            if np.any(neg):
                pole = -1.0 / s_arr[neg]
                margin = model.alpha - pole.max()
                if margin < guard:
                    raise NearPoleError(
                        f"companion value puts -1/s within the guard of the "
                        f"support edge {model.alpha!r}",
                        where=model.alpha, margin=float(margin))
        t, w = _ic_nodes(model)
        denom = 1.0 + np.outer(t, s_arr)
        if squared:
            return (w * t**2) @ (1.0 / denom**2)
        return (w * t) @ (1.0 / denom)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _eval_kernels(model, s, guard, squared):
    s_arr = np.asarray(s)
    scalar = s_arr.ndim == 0
    out = _kernel(model, np.atleast_1d(s_arr), guard, squared)
    if scalar:
        return complex(out[0]) if np.iscomplexobj(out) else float(out[0])
    return out


def mp_u_map(s, model: PSDModel, c, *, guard=POLE_GUARD):
    """Spectrum point u(s) = -1/s + c * K1(s) for real companion values s.

    ``guard`` rejects arguments whose implied pole -1/s comes within that
    distance of the model support (NearPoleError); pass None to disable.
    The degenerate c = 0 reduces the map to -1/s.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr == 0.0):
        raise ValueError("companion value must be nonzero")
    c = float(c)
    k1 = _eval_kernels(model, s_arr, guard, squared=False) if c != 0.0 else 0.0
    out = -1.0 / s_arr + c * k1
    return out if out.ndim else float(out)


def mp_u_derivative(s, model: PSDModel, c, *, guard=POLE_GUARD):
    """Derivative du/ds = 1/s^2 - c * K2(s) of the spectrum-point map."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr == 0.0):
        raise ValueError("companion value must be nonzero")
    c = float(c)
    k2 = _eval_kernels(model, s_arr, guard, squared=True) if c != 0.0 else 0.0
    out = 1.0 / s_arr**2 - c * k2
    return out if out.ndim else float(out)


def _u_complex(s: complex, model: PSDModel, c: float) -> complex:
    return -1.0 / s + c * _eval_kernels(model, complex(s), None, squared=False)


def solve_companion_fixed_point(z: complex, model: PSDModel, c, *,
                                damping: float = 0.5, tol: float = 1e-10,
                                max_iter: int = 2000) -> complex:
    """Solve z = -1/s + c*K1(s) for the companion transform value at z.

    ``z`` must lie in the open upper half plane.  A damped fixed-point
    iteration (which cannot leave the upper half plane) brings the
    residual down to 1e-6; close to the support edges its linear rate
    degrades, so a Newton stage finishes the remaining digits.  The
    returned value satisfies |u(s) - z| < tol, else IterationError.
    """
    z = complex(z)
    if not (z.imag > 0.0):
        raise ValueError("z must have positive imaginary part")
    c = float(c)
    s = -1.0 / z
    residual = math.inf
    coarse = max(tol, 1e-6)
    for k in range(min(600, max_iter)):
        k1 = _eval_kernels(model, complex(s), None, squared=False)
        residual = abs(-1.0 / s + c * k1 - z)
        if residual < tol:
            return s
        if residual < coarse and k >= 5:
            break
        step_to = z - c * k1
        if step_to == 0.0 or not np.isfinite(step_to):
            raise IterationError("fixed-point update degenerated", residual=residual)
        s = (1.0 - damping) * s + damping * (-1.0 / step_to)
    for _ in range(60):
        k1 = _eval_kernels(model, complex(s), None, squared=False)
        r = -1.0 / s + c * k1 - z
        residual = abs(r)
        if residual < tol:
            return s
        k2 = _eval_kernels(model, complex(s), None, squared=True)
        slope = 1.0 / s**2 - c * k2
        if slope == 0.0 or not np.isfinite(slope):
            break
        s = s - r / slope
        if not np.isfinite(s) or s == 0.0:
            break
    raise IterationError(
        f"no convergence to residual {tol:g} at z={z!r}", residual=residual)


def lsd_density_curve(model: PSDModel, c, grid, *, eps: float = 1e-6,
                      damping: float = 0.5, tol: float = 1e-10,
                      max_iter: int = 2000) -> DensityCurve:
    """Limiting sample spectral density on a positive grid.

    Solves the companion equation at x + i*eps for every grid point,
    converts the companion transform back to the spectrum's Stieltjes
    transform and takes its imaginary part over pi.  The curve integrates
    to min(1, 1/c); for c > 1 the remaining 1 - 1/c sits in a point mass
    at zero that a density grid cannot show.
    """
    x = np.asarray(grid, dtype=float).ravel()
    if x.size == 0 or np.any(x <= 0.0):
        raise ValueError("grid must be nonempty with positive entries")
    if np.any(np.diff(x) <= 0.0):
        raise ValueError("grid must be strictly increasing")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    c = float(c)
    dens = np.empty_like(x)
    for i, xi in enumerate(x):
        z = complex(xi, eps)
        s = solve_companion_fixed_point(z, model, c, damping=damping,
                                        tol=tol, max_iter=max_iter)
        stieltjes = (s + (1.0 - c) / z) / c
        dens[i] = max(stieltjes.imag, 0.0) / math.pi
    return DensityCurve(x, dens)


# ---------------------------------------------------------------------------
# support location


def _encode_endpoint(v):
    return None if math.isinf(v) else float(v)


def _decode_endpoint(v, sign):
    return sign * math.inf if v is None else float(v)


@dataclass(frozen=True)
class SupportReport:
    """Where the limiting sample spectrum lives.

    ``branches`` are the maximal open s-intervals on which the spectrum
    point map increases (with -1/s off the model support); ``complement``
    holds their u-images, which tile the outside of the support; and
    ``support`` is what remains on the positive half line.  ``branches``
    and ``complement`` are aligned index by index.  For c > 1 an extra
    point mass of 1 - 1/c sits at zero.
    """

    support: tuple
    branches: tuple
    complement: tuple
    mass_at_zero: float

    def to_dict(self) -> dict:
        pack = lambda ivs: [[_encode_endpoint(a), _encode_endpoint(b)] for a, b in ivs]
        return {
            "support": pack(self.support),
            "branches": pack(self.branches),
            "complement": pack(self.complement),
            "mass_at_zero": self.mass_at_zero,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SupportReport":
        unpack = lambda ivs: tuple(
            (_decode_endpoint(a, -1), _decode_endpoint(b, +1)) for a, b in ivs)
        return cls(
            support=unpack(data["support"]),
            branches=unpack(data["branches"]),
            complement=unpack(data["complement"]),
            mass_at_zero=float(data["mass_at_zero"]),
        )


def _support_gaps(model: PSDModel):
    """Components of the complement of the model support in (0, inf)."""
    gaps = []
    prev = 0.0
    for lo, hi in sorted(model.support()):
        if lo > prev:
            gaps.append((prev, lo))
        prev = max(prev, hi)
    if prev < math.inf:
        gaps.append((prev, math.inf))
    return gaps


def _cluster_grid(a: float, b: float, n: int) -> NDArray:
    # log-clustered toward both endpoints; the derivative diverges at poles
    span = b - a
    half = np.geomspace(span * 1e-9, span * 0.5, n // 2)
    return np.unique(np.concatenate([a + half, b - half]))


def _positive_runs(values: NDArray):
    """Index ranges [i0, i1] of maximal runs with values > 0."""
    pos = values > 0.0
    if not pos.any():
        return []
    edges = np.flatnonzero(np.diff(pos.astype(int)))
    starts = [0] if pos[0] else []
    starts += [int(e) + 1 for e in edges if pos[e + 1]]
    ends = [int(e) for e in edges if pos[e]]
    ends += [pos.size - 1] if pos[-1] else []
    return list(zip(starts, ends))


def _scan_region(deriv, xs: NDArray):
    """Runs of deriv > 0 over the grid, with boundaries refined by brentq."""
    vals = deriv(xs)
    runs = []
    for i0, i1 in _positive_runs(vals):
        left = xs[i0] if i0 == 0 else optimize.brentq(
            lambda t: deriv(np.array([t]))[0], xs[i0 - 1], xs[i0], xtol=1e-13)
        right = xs[i1] if i1 == vals.size - 1 else optimize.brentq(
            lambda t: deriv(np.array([t]))[0], xs[i1], xs[i1 + 1], xtol=1e-13)
        runs.append((left, right, i0 == 0, i1 == vals.size - 1))
    return runs


def _scan_with_refinement(deriv, a, b, n_grid, max_refine):
    count = None
    for level in range(max_refine + 1):
        n = n_grid * 2**level
        runs = _scan_region(deriv, _cluster_grid(a, b, n))
        check = _scan_region(deriv, _cluster_grid(a, b, 2 * n + 1))
        if len(runs) == len(check):
            return check
        count = (len(runs), len(check))
    raise ScanResolutionError(
        f"sign-change count did not stabilize ({count[0]} vs {count[1]} runs); "
        f"the scan grid is too coarse for this model")


def support_bounds(model: PSDModel, c, *, n_grid: int = 4000,
                   max_refine: int = 3) -> SupportReport:
    """Locate the limiting sample spectrum support for a model at ratio c.

    Scans the increasing branches of the spectrum point map: the positive
    branch analytically (its derivative has a single monotone sign change)
    and one scan per gap of the model support for the negative branches.
    Branch images are complement intervals of the support; the support is
    what they leave uncovered on (0, inf).
    """
    c = float(c)
    if c <= 0.0:
        raise ValueError("aspect ratio must be positive")
    u_at = lambda s: float(mp_u_map(s, model, c, guard=None))
    k2 = lambda s_arr: np.atleast_1d(_eval_kernels(model, s_arr, None, squared=True))

    branches, images = [], []

    # positive branch: du/ds > 0 on (0, s*) where c*s^2*K2(s) crosses 1;
    # for c <= 1 the crossing never happens and the image is all of (-inf, 0)
    if c <= 1.0:
        branches.append((0.0, math.inf))
        images.append((-math.inf, 0.0))
    else:
        crossing = lambda s: c * s * s * float(k2(np.array([s]))[0]) - 1.0
        hi = 1.0
        while crossing(hi) < 0.0:
            hi *= 2.0
            if hi > 1e12:
                raise ScanResolutionError("positive-branch crossing not bracketed")
        lo = hi / 2.0
        while crossing(lo) > 0.0:
            lo /= 2.0
            if lo < 1e-12:
                raise ScanResolutionError("positive-branch crossing not bracketed")
        s_star = optimize.brentq(crossing, lo, hi, xtol=1e-13)
        branches.append((0.0, s_star))
        images.append((-math.inf, u_at(s_star)))

    # negative branches, one per gap of the model support; coordinates are
    # chosen so the scan interval is bounded (v = -1/s for gaps touching 0)
    for g_lo, g_hi in _support_gaps(model):
        if math.isinf(g_hi):
            deriv = lambda s_arr: 1.0 / s_arr**2 - c * k2(s_arr)
            runs = _scan_with_refinement(deriv, -1.0 / g_lo, 0.0, n_grid, max_refine)
            for left, right, at_lo, at_hi in runs:
                if at_lo:
                    raise ScanResolutionError("increasing run reached a pole")
                s_lo, s_hi = left, (0.0 if at_hi else right)
                branches.append((s_lo, s_hi))
                images.append((u_at(s_lo), math.inf if at_hi else u_at(s_hi)))
        else:
            def deriv(v_arr):
                s_arr = -1.0 / v_arr
                return 1.0 / s_arr**2 - c * k2(s_arr)
            runs = _scan_with_refinement(deriv, g_lo, g_hi, n_grid, max_refine)
            for left, right, at_lo, at_hi in runs:
                if at_hi:
                    raise ScanResolutionError("increasing run reached a pole")
                if at_lo and g_lo > 0.0:
                    raise ScanResolutionError("increasing run reached a pole")
                s_lo = -math.inf if at_lo else -1.0 / left
                s_hi = -1.0 / right
                branches.append((s_lo, s_hi))
                # s -> -inf sends u to zero
                images.append((0.0 if at_lo else u_at(s_lo), u_at(s_hi)))

    # support = (0, inf) minus the union of the branch images
    clipped = sorted((max(lo, 0.0), hi) for lo, hi in images if hi > 0.0)
    merged = []
    for lo, hi in clipped:
        if merged and lo <= merged[-1][1] + 1e-12:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    support = []
    cursor = 0.0
    for lo, hi in merged:
        if lo > cursor + 1e-12:
            support.append((cursor, lo))
        cursor = max(cursor, hi)
    if not math.isinf(cursor):
        support.append((cursor, math.inf))

    order = np.argsort([b[0] for b in branches], kind="stable")
    return SupportReport(
        support=tuple(support),
        branches=tuple(branches[i] for i in order),
        complement=tuple(images[i] for i in order),
        mass_at_zero=max(0.0, 1.0 - 1.0 / c) if c > 1.0 else 0.0,
    )


def solve_companion_real(u: float, model: PSDModel, c, *,
                         report: SupportReport | None = None) -> float:
    """Real companion-transform value at a point u outside the support.

    Finds the increasing branch whose image contains u and bisects the
    monotone spectrum point map there.  Points inside the support (or at
    zero) have no real solution and raise ValueError.
    """
    u = float(u)
    c = float(c)
    rep = report if report is not None else support_bounds(model, c)
    for (s_lo, s_hi), (u_lo, u_hi) in zip(rep.branches, rep.complement):
        if not (u_lo < u < u_hi):
            continue
        f = lambda s: mp_u_map(float(s), model, c, guard=None) - u
        # close off unbounded or map-singular endpoints with sign probes
        if s_lo == 0.0:                       # positive branch, u -> -inf
            a = min(1.0, s_hi / 2.0 if math.isfinite(s_hi) else 1.0)
            while f(a) >= 0.0:
                a /= 4.0
                if a < 1e-300:
                    raise IterationError("bracketing failed approaching s=0+")
        elif math.isinf(s_lo):                # u -> 0 as s -> -inf
            a = 2.0 * s_hi if s_hi < 0.0 else -1.0
            while f(a) >= 0.0:
                a *= 4.0
                if a < -1e300:
                    raise IterationError("bracketing failed approaching s=-inf")
        else:
            a = s_lo
        if s_hi == 0.0:                       # u -> +inf as s -> 0-
            b = -1e-8
            while f(b) <= 0.0:
                b /= 4.0
                if b > -1e-300:
                    raise IterationError("bracketing failed approaching s=0-")
        elif math.isinf(s_hi):                # u -> 0- as s -> +inf
            b = max(1.0, 2.0 * a)
            while f(b) <= 0.0:
                b *= 4.0
                if b > 1e300:
                    raise IterationError("bracketing failed approaching s=+inf")
        else:
            b = s_hi
        return float(optimize.brentq(f, a, b, xtol=1e-14, rtol=8.9e-16,
                                     maxiter=200))
    raise ValueError(f"u={u!r} lies inside the limiting spectrum support")
