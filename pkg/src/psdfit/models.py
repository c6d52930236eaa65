"""Population spectrum models.

A model describes the limiting distribution of population covariance
eigenvalues on the positive half line.  Four families are supported: a
finite mixture of point masses, a single point mass, polynomial-times-
exponential densities, and a shifted inverse-cubic tail law.  Each model
exposes the distribution calculus the estimation pipeline needs (CDF,
quantile function, density where one exists) plus JSON serialization,
and the module provides a first-order transport distance between models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import special

__all__ = [
    "PSDModel",
    "Discrete",
    "PointMass",
    "Laguerre",
    "InverseCubic",
    "evaluate_cdf",
    "quantile",
    "wasserstein",
    "model_to_dict",
    "model_from_dict",
]

_WEIGHT_TOL = 1e-12
# Fitted polynomial densities carry sampling noise, and shapes whose true
# density touches zero get estimated with small undershoots; rejecting
# those would pin every such fit to the boundary.  Construction therefore
# tolerates shallow dips and only refuses clearly broken shapes.
_DENSITY_TOL = -0.2
_POSITIVITY_GRID = np.arange(0.0, 50.0 + 1e-9, 0.01)


def _as_prob_array(prob):
    p = np.asarray(prob, dtype=float)
    if p.size and (np.any(p <= 0.0) or np.any(p >= 1.0)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    return p


class PSDModel:
    """Base class for population spectrum models."""

    kind: str = ""

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, prob):
        raise NotImplementedError

    def support(self):
        """Closed intervals (lo, hi) carrying the distribution's mass."""
        raise NotImplementedError

    @property
    def theta(self) -> NDArray:
        """Free parameter vector of the family."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return type(other) is type(self) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.kind, tuple(np.asarray(self.theta).tolist())))


@dataclass(frozen=True, eq=False)
class Discrete(PSDModel):
    """Finite mixture of point masses at positive locations.

    Parameters
    ----------
    atoms : array_like
        Distinct positive mass locations.  Stored sorted ascending.
    weights : array_like
        Positive masses summing to one (tolerance 1e-12).
    """

    atoms: NDArray
    weights: NDArray
    kind = "discrete"

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 1 or atoms.shape != weights.shape or atoms.size == 0:
            raise ValueError("atoms and weights must be matching 1-d sequences")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms and weights must be finite")
        if np.any(atoms <= 0.0):
            raise ValueError("atoms must be positive")
        if np.any(weights <= 0.0):
            raise ValueError("weights must be positive")
        total = weights.sum()
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        order = np.argsort(atoms, kind="stable")
        atoms = atoms[order]
        weights = weights[order] / total
        if np.any(np.diff(atoms) == 0.0):
            raise ValueError("atoms must be distinct")
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        out = cum[np.searchsorted(self.atoms, x, side="right")]
        return out if out.ndim else float(out)

    def quantile(self, prob):
        p = _as_prob_array(prob)
        cum = np.cumsum(self.weights)
        idx = np.minimum(np.searchsorted(cum, p, side="left"), self.atoms.size - 1)
        out = self.atoms[idx]
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return float(self.atoms @ self.weights)

    def support(self):
        return tuple((a, a) for a in self.atoms)

    @property
    def theta(self) -> NDArray:
        return np.concatenate([self.atoms, self.weights[:-1]])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True, eq=False)
class PointMass(PSDModel):
    """All mass at one positive location."""

    at: float
    kind = "point_mass"

    def __post_init__(self):
        at = float(self.at)
        if not math.isfinite(at) or at <= 0.0:
            raise ValueError("location must be positive and finite")
        object.__setattr__(self, "at", at)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= self.at, 1.0, 0.0)
        return out if out.ndim else float(out)

    def quantile(self, prob):
        p = _as_prob_array(prob)
        out = np.full_like(p, self.at)
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return self.at

    def support(self):
        return ((self.at, self.at),)

    @property
    def theta(self) -> NDArray:
        return np.array([self.at])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "at": self.at}


@dataclass(frozen=True, eq=False)
class Laguerre(PSDModel):
    """Density (a0 + a1 t + ... + aq t^q) exp(-t) on the positive half line.

    Only the coefficients of t^1 .. t^q are free; the constant term is
    pinned by total mass one, a0 = 1 - sum_j j! * a_j.  The density is
    checked on a fixed validation grid over [0, 50]: shallow dips below
    zero are tolerated (fitted coefficients carry estimation noise), but
    shapes that go clearly negative are rejected.

    Parameters
    ----------
    coeffs : array_like
        Free coefficients (a_1, ..., a_q), q >= 1.
    """

    coeffs: NDArray
    kind = "laguerre"

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coeffs must be finite")
        coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        low = self.density(_POSITIVITY_GRID).min()
        if low < _DENSITY_TOL:
            raise ValueError(f"density dips to {low:.3e} on the validation grid")

    @property
    def degree(self) -> int:
        return self.coeffs.size

    @property
    def full_coeffs(self) -> NDArray:
        """Polynomial coefficients (a0, a1, ..., aq) including the pinned a0."""
        facts = np.array([math.factorial(j) for j in range(1, self.degree + 1)])
        a0 = 1.0 - float(facts @ self.coeffs)
        return np.concatenate([[a0], self.coeffs])

    def density(self, t):
        t = np.asarray(t, dtype=float)
        poly = np.polynomial.polynomial.polyval(t, self.full_coeffs)
        out = np.where(t >= 0.0, poly * np.exp(-np.clip(t, 0.0, None)), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.clip(x, 0.0, None)
        out = np.zeros_like(xp)
        for j, a in enumerate(self.full_coeffs):
            # integral of t^j e^-t from 0 to x is j! times the regularized
            # lower incomplete gamma function of order j+1
            out += a * math.factorial(j) * special.gammainc(j + 1, xp)
        out = np.clip(np.where(x < 0.0, 0.0, out), 0.0, 1.0)
        return out if out.ndim else float(out)

    def quantile(self, prob, tol=1e-10):
        p = _as_prob_array(prob)
        scalar = p.ndim == 0
        p = np.atleast_1d(p)
        lo = np.zeros_like(p)
        hi = np.full_like(p, 64.0)
        while np.any(self.cdf(hi) < p.max()):
            hi *= 2.0
            if hi[0] > 1e9:
                raise ValueError("quantile bracket failed to close")
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < p
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < tol:
                break
        out = 0.5 * (lo + hi)
        return float(out[0]) if scalar else out

    def mean(self) -> float:
        return float(sum(a * math.factorial(j + 1)
                         for j, a in enumerate(self.full_coeffs)))

    def support(self):
        return ((0.0, math.inf),)

    @property
    def theta(self) -> NDArray:
        return self.coeffs

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alphas": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class InverseCubic(PSDModel):
    """Shifted inverse-cubic tail law with unit mean.

    Density 2(1-alpha)^2 / (t - a)^3 for t >= alpha with a = 2*alpha - 1,
    so the left support endpoint is ``alpha`` and the mean is exactly one.
    """

    alpha: float
    kind = "inverse_cubic"

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or not 0.0 <= alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")
        object.__setattr__(self, "alpha", alpha)

    @property
    def shift(self) -> float:
        return 2.0 * self.alpha - 1.0

    def density(self, t):
        t = np.asarray(t, dtype=float)
        scale = 2.0 * (1.0 - self.alpha) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t >= self.alpha, scale / (t - self.shift) ** 3, 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            x >= self.alpha,
            1.0 - (1.0 - self.alpha) ** 2 / np.where(x >= self.alpha,
                                                     x - self.shift, 1.0) ** 2,
            0.0,
        )
        return out if out.ndim else float(out)

    def quantile(self, prob):
        p = _as_prob_array(prob)
        out = self.shift + (1.0 - self.alpha) / np.sqrt(1.0 - p)
        return out if out.ndim else float(out)

    def mean(self) -> float:
        return 1.0

    def support(self):
        return ((self.alpha, math.inf),)

    @property
    def theta(self) -> NDArray:
        return np.array([self.alpha])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


def evaluate_cdf(model: PSDModel, x):
    """CDF of ``model`` at ``x`` (scalar or array)."""
    return model.cdf(x)


def quantile(model: PSDModel, prob):
    """Left-continuous quantile of ``model`` at probabilities in (0, 1)."""
    return model.quantile(prob)


def _atomic(model):
    if isinstance(model, Discrete):
        return model.atoms, model.weights
    if isinstance(model, PointMass):
        return np.array([model.at]), np.array([1.0])
    return None


def wasserstein(a: PSDModel, b: PSDModel, grid_points: int = 10_000) -> float:
    """First-order transport distance between two models.

    Equals the integral over (0, 1) of the absolute difference of the two
    quantile functions.  Pairs of purely atomic models are integrated
    exactly over the merged probability breakpoints; any other pair uses a
    midpoint rule on ``grid_points`` probabilities.
    """
    da, db = _atomic(a), _atomic(b)
    if da is not None and db is not None:
        atoms_a, w_a = da
        atoms_b, w_b = db
        edges = np.unique(np.concatenate([
            [0.0, 1.0], np.cumsum(w_a)[:-1], np.cumsum(w_b)[:-1]]))
        mids = 0.5 * (edges[:-1] + edges[1:])
        cum_a, cum_b = np.cumsum(w_a), np.cumsum(w_b)
        qa = atoms_a[np.minimum(np.searchsorted(cum_a, mids), atoms_a.size - 1)]
        qb = atoms_b[np.minimum(np.searchsorted(cum_b, mids), atoms_b.size - 1)]
        return float(np.abs(qa - qb) @ np.diff(edges))
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    probs = (np.arange(grid_points) + 0.5) / grid_points
    return float(np.mean(np.abs(a.quantile(probs) - b.quantile(probs))))


_KINDS = {
    "discrete": lambda d: Discrete(np.asarray(d["atoms"]), np.asarray(d["weights"])),
    "point_mass": lambda d: PointMass(float(d["at"])),
    "laguerre": lambda d: Laguerre(np.asarray(d["alphas"])),
    "inverse_cubic": lambda d: InverseCubic(float(d["alpha"])),
}


def model_to_dict(model: PSDModel) -> dict:
    """JSON-ready dict for ``model``; inverse of :func:`model_from_dict`."""
    return model.to_dict()


def model_from_dict(data: dict) -> PSDModel:
    """Rebuild a model from its dict form."""
    try:
        kind = data["kind"]
    except (TypeError, KeyError):
        raise ValueError("model dict needs a 'kind' entry") from None
    try:
        builder = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    try:
        return builder(data)
    except KeyError as missing:
        raise ValueError(f"model dict for {kind!r} is missing {missing}") from None
