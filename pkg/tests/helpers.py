"""Shared closed forms and fixtures for the test suite.

The identity-covariance limit has explicit formulas; tests use them as
an independent check on the numerical transforms.  The exact-net helper
builds evaluation nets whose (u, s) pairs sit on a model's own curve, so
the least-squares objective at the true parameters vanishes to rounding.
"""

import numpy as np

from psdfit import (Discrete, SampleSpectrum, mp_u_map, solve_companion_real,
                    support_bounds)
from psdfit.estimator import UNet

# Case models from the simulation study
CASE1 = {"kind": "discrete", "atoms": [1.0, 2.0], "weights": [0.5, 0.5]}
CASE2 = {"kind": "discrete", "atoms": [1.0, 3.0, 5.0], "weights": [0.3, 0.4, 0.3]}
CASE3 = {"kind": "discrete", "atoms": [1.0, 5.0, 15.0], "weights": [0.3, 0.4, 0.3]}
CASE4 = {"kind": "laguerre", "alphas": [1.0]}
CASE5 = {"kind": "laguerre", "alphas": [1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0]}
FIGURE1 = {"kind": "discrete", "atoms": [2.0, 7.0, 10.0], "weights": [0.3, 0.4, 0.3]}


def identity_support(c):
    """Support interval ((1 - sqrt(c))^2, (1 + sqrt(c))^2) of the bulk."""
    r = np.sqrt(c)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def identity_density(x, c):
    """Closed-form limiting density for an identity population covariance."""
    x = np.asarray(x, dtype=float)
    lo, hi = identity_support(c)
    inside = (x > lo) & (x < hi)
    f = np.zeros_like(x)
    xi = x[inside]
    f[inside] = np.sqrt((hi - xi) * (xi - lo)) / (2.0 * np.pi * c * xi)
    return f


def identity_companion_root(u, c):
    """Real companion-transform root for the identity population model.

    From u*s^2 + (u + 1 - c)*s + 1 = 0, taking the branch that matches
    -1/u as c -> 0 (the one on the monotone piece below the support).
    """
    b = u + 1.0 - c
    disc = np.sqrt(b * b - 4.0 * u)
    r1 = (-b + disc) / (2.0 * u)
    r2 = (-b - disc) / (2.0 * u)
    return r2 if u < 0 else r1


def dummy_spectrum(p, n):
    """A syntactically valid spectrum carrying only its (p, n) ratio."""
    eigs = np.linspace(1.0, 2.0, min(p, n))
    if p > n:
        eigs = np.concatenate([eigs, np.zeros(p - n)])
    return SampleSpectrum(eigs, p, n)


def exact_net(model, c, u_targets, p=100):
    """Evaluation net lying exactly on a model's spectrum-point curve.

    Each target u is replaced by the model's own image of the solved
    root, so the pair satisfies the defining equation bitwise.
    """
    n = max(1, round(p / c))
    roots = np.array([solve_companion_real(u, model, c) for u in u_targets])
    points = np.array([mp_u_map(s, model, c) for s in roots])
    return UNet(points, roots, ("exact",) * len(roots), len(roots),
                dummy_spectrum(p, n))
