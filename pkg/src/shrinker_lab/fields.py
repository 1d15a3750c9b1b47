"""Potential fields with value / gradient / Hessian evaluation.

Three families of backends:

* analytic        -- closed-form derivatives (quadratics, callables with
                     supplied gradient/Hessian, affine-scaled views)
* trajectory      -- one-dimensional profiles backed by an ODE trajectory plus
                     quadrature tables, with the second derivative given by an
                     exact backing relation
* grid-fd         -- sampled values with local polynomial differentiation,
                     one-sided near the boundary

Views compose lazily (chain rule on exact derivatives), so transform pipelines
do not accumulate interpolation error.
"""

from __future__ import annotations

import numpy as np

from .numerics import (
    InputError,
    default_fd_step,
    fd_gradient,
    fd_hessian,
    hermite_value,
    hermite_quintic_value,
)

__all__ = [
    "ScalarField",
    "QuadraticField",
    "CallableField",
    "AffineScaledField",
    "GridField1D",
    "Table1DField",
    "SeparableExtensionField",
    "RadialProfileField",
]


class ScalarField:
    """Base interface: a potential u with u(x), Du(x), D^2u(x)."""

    dim: int
    backend: str

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def _point(self, x):
        p = np.atleast_1d(np.asarray(x, dtype=float))
        if p.shape != (self.dim,):
            raise InputError(f"expected point of dimension {self.dim}, got shape {p.shape}")
        return p


class QuadraticField(ScalarField):
    """u(x) = 0.5 <x, A x> + c with exact derivatives."""

    backend = "analytic"

    def __init__(self, A, c=0.0):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise InputError("A must be square")
        if not np.array_equal(self.A, self.A.T):
            raise InputError("A must be symmetric")
        self.c = float(c)
        self.dim = self.A.shape[0]

    def value(self, x):
        x = self._point(x)
        return 0.5 * float(x @ self.A @ x) + self.c

    def gradient(self, x):
        return self.A @ self._point(x)

    def hessian(self, x):
        self._point(x)
        return self.A.copy()


class CallableField(ScalarField):
    """Wraps plain callables; derivatives fall back to central differences."""

    def __init__(self, dim, fn, grad=None, hess=None, fd_step=None):
        self.dim = int(dim)
        self._fn = fn
        self._grad = grad
        self._hess = hess
        self._fd_step = fd_step
        self.backend = "analytic" if (grad is not None and hess is not None) else "fd"

    def value(self, x):
        return float(self._fn(self._point(x)))

    def gradient(self, x):
        x = self._point(x)
        if self._grad is not None:
            return np.atleast_1d(np.asarray(self._grad(x), dtype=float))
        h = self._fd_step if self._fd_step is not None else default_fd_step(x)
        return fd_gradient(self._fn, x, h)

    def hessian(self, x):
        x = self._point(x)
        if self._hess is not None:
            return np.asarray(self._hess(x), dtype=float)
        h = self._fd_step if self._fd_step is not None else default_fd_step(x)
        return fd_hessian(self._fn, x, h)


class AffineScaledField(ScalarField):
    """View  w(x) = outer * u(inner * x) + (quad/2)|x|^2 + offset.

    Derivatives are exact chain-rule expressions of the backing field's, so a
    pipeline of these views stays analytic whenever the base is.  Nested views
    flatten into a single layer; in particular an exact involution composed
    with itself collapses to the identity coefficients (1, 1, 0, 0) and
    evaluates bit-for-bit as the base.
    """

    def __init__(self, base, outer=1.0, inner=1.0, quad=0.0, offset=0.0):
        outer, inner, quad, offset = float(outer), float(inner), float(quad), float(offset)
        if isinstance(base, AffineScaledField):
            offset = outer * base.offset + offset
            quad = outer * base.quad * inner * inner + quad
            inner = base.inner * inner
            outer = outer * base.outer
            base = base.base
        self.base = base
        self.outer = outer
        self.inner = inner
        self.quad = quad
        self.offset = offset
        self.dim = base.dim
        self.backend = base.backend

    def value(self, x):
        x = self._point(x)
        return (
            self.outer * self.base.value(self.inner * x)
            + 0.5 * self.quad * float(x @ x)
            + self.offset
        )

    def gradient(self, x):
        x = self._point(x)
        return self.outer * self.inner * self.base.gradient(self.inner * x) + self.quad * x

    def hessian(self, x):
        x = self._point(x)
        return (
            self.outer * self.inner ** 2 * self.base.hessian(self.inner * x)
            + self.quad * np.eye(self.dim)
        )


def _bracket_index(ts, t):
    k = int(np.searchsorted(ts, t, side="right") - 1)
    return min(max(k, 0), len(ts) - 2)


def _local_cubic(ts, vals, t, deriv):
    """Differentiate the interpolating cubic through the 4 nearest samples.

    Interior windows are symmetric around t; within one cell of the boundary
    the window is clamped, which reproduces one-sided second-order stencils.
    """
    n = len(ts)
    k = _bracket_index(ts, t)
    i0 = min(max(k - 1, 0), n - 4)
    idx = slice(i0, i0 + 4)
    tw = ts[idx]
    vw = vals[idx]
    # Newton divided differences, then derivatives of the cubic at t
    c = vw.astype(float).copy()
    for j in range(1, 4):
        c[j:] = (c[j:] - c[j - 1 : -1]) / (tw[j:] - tw[: 4 - j])
    d0, d1, d2, d3 = c
    t0, t1, t2 = tw[0], tw[1], tw[2]
    if deriv == 0:
        return d0 + (t - t0) * (d1 + (t - t1) * (d2 + (t - t2) * d3))
    if deriv == 1:
        return (
            d1
            + d2 * ((t - t0) + (t - t1))
            + d3 * ((t - t0) * (t - t1) + (t - t0) * (t - t2) + (t - t1) * (t - t2))
        )
    if deriv == 2:
        return 2.0 * d2 + 2.0 * d3 * ((t - t0) + (t - t1) + (t - t2))
    raise InputError(f"deriv order {deriv} not supported")


class GridField1D(ScalarField):
    """1-D field from uniform samples; derivatives by local polynomial fit.

    Derivative error is O(h^2) on smooth inputs, including within one cell of
    the boundary (clamped one-sided windows).
    """

    backend = "grid-fd"
    dim = 1

    def __init__(self, grid, values):
        self.ts = np.asarray(grid.samples if hasattr(grid, "samples") else grid, dtype=float)
        self.vals = np.asarray(values, dtype=float)
        if self.ts.ndim != 1 or self.ts.shape != self.vals.shape or len(self.ts) < 4:
            raise InputError("need matching 1-D sample arrays with at least 4 points")

    def _t(self, x):
        return float(self._point(x)[0])

    def value(self, x):
        return float(_local_cubic(self.ts, self.vals, self._t(x), 0))

    def gradient(self, x):
        return np.array([_local_cubic(self.ts, self.vals, self._t(x), 1)])

    def hessian(self, x):
        return np.array([[_local_cubic(self.ts, self.vals, self._t(x), 2)]])


class Table1DField(ScalarField):
    """1-D field from tabulated (value, slope, curvature) on a uniform grid.

    Value uses the two-point quintic Hermite; the slope uses the cubic Hermite
    of (slope, curvature); the curvature is interpolated by a local cubic, or
    supplied exactly by ``curvature_fn`` when the backing relation is known.
    """

    backend = "trajectory"
    dim = 1

    def __init__(self, ts, vals, slopes, curvatures, curvature_fn=None):
        self.ts = np.asarray(ts, dtype=float)
        self.vals = np.asarray(vals, dtype=float)
        self.slopes = np.asarray(slopes, dtype=float)
        self.curvs = np.asarray(curvatures, dtype=float)
        if not (len(self.ts) >= 4 and len(self.ts) == len(self.vals) == len(self.slopes) == len(self.curvs)):
            raise InputError("need >= 4 aligned samples")
        self._curv_fn = curvature_fn

    def _t(self, x):
        t = float(self._point(x)[0])
        lo, hi = self.ts[0], self.ts[-1]
        if t < lo - 1e-9 * (1 + abs(lo)) or t > hi + 1e-9 * (1 + abs(hi)):
            raise InputError(f"evaluation point {t} outside table span [{lo}, {hi}]")
        return min(max(t, lo), hi)

    def value(self, x):
        t = self._t(x)
        k = _bracket_index(self.ts, t)
        return float(
            hermite_quintic_value(
                t,
                self.ts[k],
                self.ts[k + 1],
                self.vals[k],
                self.vals[k + 1],
                self.slopes[k],
                self.slopes[k + 1],
                self.curvs[k],
                self.curvs[k + 1],
            )
        )

    def slope(self, t):
        k = _bracket_index(self.ts, t)
        return float(
            hermite_value(
                t,
                self.ts[k],
                self.ts[k + 1],
                self.slopes[k],
                self.slopes[k + 1],
                self.curvs[k],
                self.curvs[k + 1],
            )
        )

    def curvature(self, t):
        if self._curv_fn is not None:
            return float(self._curv_fn(t))
        return float(_local_cubic(self.ts, self.curvs, t, 0))

    def gradient(self, x):
        return np.array([self.slope(self._t(x))])

    def hessian(self, x):
        return np.array([[self.curvature(self._t(x))]])


class SeparableExtensionField(ScalarField):
    """n-D extension  w(x) = w1(x_1) + (|x|^2 - x_1^2)/4  of a 1-D profile."""

    backend = "trajectory"

    def __init__(self, profile_1d, n):
        if n < 1:
            raise InputError("dimension must be >= 1")
        if profile_1d.dim != 1:
            raise InputError("base profile must be one-dimensional")
        self.base = profile_1d
        self.dim = int(n)

    def value(self, x):
        x = self._point(x)
        rest = float(x @ x) - x[0] * x[0]
        return self.base.value(x[:1]) + 0.25 * rest

    def gradient(self, x):
        x = self._point(x)
        g = 0.5 * x
        g[0] = self.base.gradient(x[:1])[0]
        return g

    def hessian(self, x):
        x = self._point(x)
        H = 0.5 * np.eye(self.dim)
        H[0, 0] = self.base.hessian(x[:1])[0, 0]
        return H


class RadialProfileField(ScalarField):
    """n-D radial potential u(|x|) from 1-D profile evaluators.

    The Hessian is u'' along the ray and u'/r on the orthogonal complement;
    the removable singularity at the origin is filled with u''(0) I.
    """

    backend = "trajectory"

    def __init__(self, n, u_fn, du_fn, d2u_fn, r_origin=1e-7):
        self.dim = int(n)
        self._u = u_fn
        self._du = du_fn
        self._d2u = d2u_fn
        self._r0 = float(r_origin)

    def value(self, x):
        x = self._point(x)
        return float(self._u(float(np.linalg.norm(x))))

    def gradient(self, x):
        x = self._point(x)
        r = float(np.linalg.norm(x))
        if r < self._r0:
            return float(self._d2u(0.0)) * x
        return float(self._du(r)) / r * x

    def hessian(self, x):
        x = self._point(x)
        r = float(np.linalg.norm(x))
        if r < self._r0:
            return float(self._d2u(0.0)) * np.eye(self.dim)
        xh = x / r
        radial = float(self._d2u(r))
        tangent = float(self._du(r)) / r
        return tangent * np.eye(self.dim) + (radial - tangent) * np.outer(xh, xh)
