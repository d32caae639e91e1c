"""Analytic benchmark solutions of the (p, E, H) Maxwell system on the unit square.

All callables take points ``x`` of shape (..., 2) and a scalar time ``t``.
Vector fields return shape (..., 2). Spatial derivatives are coded by hand so
that the residual check does not depend on the finite element machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi
SQ2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Problem:
    name: str
    p: Callable
    E: Callable
    H: Callable
    grad_p: Callable
    div_E: Callable
    curl_E: Callable
    grad_H: Callable
    eps: float = 1.0
    mu: float = 1.0
    T: float = 1.0
    homogeneous_bc: bool = True

    def initial(self):
        return (lambda x: self.p(x, 0.0), lambda x: self.E(x, 0.0), lambda x: self.H(x, 0.0))

    def residuals(self, x, t, delta: float = 1e-4):
        """Pointwise residuals of the three equations, time derivatives by central differences."""
        x = np.asarray(x, dtype=float)
        dt = lambda f: (f(x, t + delta) - f(x, t - delta)) / (2 * delta)  # noqa: E731
        gH = self.grad_H(x, t)
        vcurl_H = np.stack([gH[..., 1], -gH[..., 0]], axis=-1)
        r_p = dt(self.p) + self.eps * self.div_E(x, t)
        r_E = self.grad_p(x, t) + self.eps * dt(self.E) - vcurl_H
        r_H = self.mu * dt(self.H) + self.curl_E(x, t)
        return r_p, r_E, r_H

    def compatibility_defect(self, npts: int = 400, seed: int = 0) -> float:
        """max |div(eps E0) - p0| over random points; zero for compatible initial data."""
        rng = np.random.default_rng(seed)
        x = rng.random((npts, 2))
        return float(np.abs(self.eps * self.div_E(x, 0.0) - self.p(x, 0.0)).max())


def _xy(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def example1() -> Problem:
    """Standing wave with p = 0 and vanishing tangential E on the boundary."""

    def p(x, t):
        return np.zeros(np.shape(x)[:-1])

    def E(x, t):
        X, Y = _xy(x)
        c = np.cos(PI * t)
        return np.stack([np.sin(PI * Y) * c, np.sin(PI * X) * c], axis=-1)

    def H(x, t):
        X, Y = _xy(x)
        return (np.cos(PI * Y) - np.cos(PI * X)) * np.sin(PI * t)

    def grad_p(x, t):
        return np.zeros(np.shape(x))

    def div_E(x, t):
        return np.zeros(np.shape(x)[:-1])

    def curl_E(x, t):
        X, Y = _xy(x)
        return PI * (np.cos(PI * X) - np.cos(PI * Y)) * np.cos(PI * t)

    def grad_H(x, t):
        X, Y = _xy(x)
        s = np.sin(PI * t)
        return np.stack([PI * np.sin(PI * X) * s, -PI * np.sin(PI * Y) * s], axis=-1)

    return Problem("example1", p, E, H, grad_p, div_E, curl_E, grad_H, homogeneous_bc=True)


def example2() -> Problem:
    """Standing pressure mode plus a diagonal travelling wave; nonzero boundary traces."""

    def phase(x, t):
        X, Y = _xy(x)
        return PI * (SQ2 * t - X - Y)

    def p(x, t):
        X, Y = _xy(x)
        return (np.cos(PI * X) + np.cos(PI * Y)) * np.sin(PI * t)

    def E(x, t):
        X, Y = _xy(x)
        w = np.sin(phase(x, t))
        c = np.cos(PI * t)
        return np.stack([w - np.sin(PI * X) * c, -w - np.sin(PI * Y) * c], axis=-1)

    def H(x, t):
        return -SQ2 * np.sin(phase(x, t))

    def grad_p(x, t):
        X, Y = _xy(x)
        s = np.sin(PI * t)
        return np.stack([-PI * np.sin(PI * X) * s, -PI * np.sin(PI * Y) * s], axis=-1)

    def div_E(x, t):
        X, Y = _xy(x)
        # travelling parts cancel: d/dx sin(phase) - d/dy sin(phase) = 0
        return -PI * (np.cos(PI * X) + np.cos(PI * Y)) * np.cos(PI * t)

    def curl_E(x, t):
        # d/dx(-sin phase) - d/dy(sin phase) = 2 pi cos(phase); standing parts are gradients
        return 2 * PI * np.cos(phase(x, t))

    def grad_H(x, t):
        g = SQ2 * PI * np.cos(phase(x, t))
        return np.stack([g, g], axis=-1)

    return Problem("example2", p, E, H, grad_p, div_E, curl_E, grad_H, homogeneous_bc=False)


PROBLEMS = {"example1": example1, "example2": example2, "1": example1, "2": example2}


def get_problem(name) -> Problem:
    try:
        return PROBLEMS[str(name)]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose example1 or example2") from None
