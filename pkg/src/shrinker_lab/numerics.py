"""Self-contained numerical kernels: symmetric eigensolver, finite differences,
monotone inversion, adaptive Runge-Kutta integration with dense output, grids.

Everything here is a pure function of its inputs; matrices are small and dense
(n <= 10 throughout the package), so simplicity and determinism win over
asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InputError",
    "DivergenceEvent",
    "RhsEvaluationError",
    "Grid1D",
    "as_sym_matrix",
    "eig_sym",
    "eig_sym_full",
    "default_fd_step",
    "fd_gradient",
    "fd_hessian",
    "invert_monotone",
    "Trajectory",
    "integrate_ode",
    "hermite_value",
    "hermite_quintic_value",
]


class InputError(ValueError):
    """Non-finite or otherwise malformed numerical input."""


class RhsEvaluationError(Exception):
    """Raised by an ODE right-hand side that cannot be evaluated at (t, y).

    The integrator treats this as a soft failure: it shrinks the step and,
    if the step underflows, records an event labelled with ``self.label``.
    """

    def __init__(self, label, detail=""):
        super().__init__(label if not detail else f"{label}: {detail}")
        self.label = label
        self.detail = detail


@dataclass(frozen=True)
class DivergenceEvent:
    """Where and why an integration stopped before reaching the end of the span."""

    label: str
    t: float
    y: np.ndarray
    detail: str = ""


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D grid. ``samples[k] = t_min + k*step``, endpoint included."""

    t_min: float
    t_max: float
    step: float
    samples: np.ndarray

    @classmethod
    def from_step(cls, t_min, t_max, step):
        if not (step > 0):
            raise InputError(f"grid step must be positive, got {step}")
        if not (t_max > t_min):
            raise InputError(f"need t_max > t_min, got [{t_min}, {t_max}]")
        m = int(round((t_max - t_min) / step))
        samples = t_min + step * np.arange(m + 1)
        return cls(float(t_min), float(t_max), float(step), samples)

    def __len__(self):
        return len(self.samples)


def as_sym_matrix(M):
    """Validate and return a symmetric float matrix (no copy if already valid)."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    if not np.array_equal(A, A.T):
        # tolerate FD-era asymmetry only if it is exactly representable noise
        if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise InputError("matrix is not symmetric")
        A = 0.5 * (A + A.T)
    return A


_EIG_SWEEP_LIMIT = 64
_EIG_REL_TOL = 1e-13


def _jacobi(A, want_vectors):
    n = A.shape[0]
    A = A.copy()
    Q = np.eye(n) if want_vectors else None
    norm = float(np.linalg.norm(A))
    if n == 1 or norm == 0.0:
        w = np.sort(np.diag(A))
        return (w, Q) if want_vectors else w
    thresh = _EIG_REL_TOL * norm
    for _ in range(_EIG_SWEEP_LIMIT):
        off = float(np.sqrt(np.sum(np.tril(A, -1) ** 2) * 2.0))
        if off < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < thresh / (n * n):
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = 0.0
                A[q, p] = 0.0
                if want_vectors:
                    vp = Q[:, p].copy()
                    vq = Q[:, q].copy()
                    Q[:, p] = c * vp - s * vq
                    Q[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    if want_vectors:
        return w[order], Q[:, order]
    return w[order]


_EIG_MEMO: dict = {}
_EIG_MEMO_CAP = 512


def eig_sym(M):
    """All eigenvalues of a symmetric matrix, ascending.

    Cyclic Jacobi sweeps until the off-diagonal Frobenius norm drops below
    1e-13 * ||M||_F.  Deterministic for identical inputs; results for recent
    inputs are memoized (verification sweeps evaluate the same constant
    Hessian at many sample points).
    """
    A = as_sym_matrix(M)
    key = (A.shape[0], A.tobytes())
    hit = _EIG_MEMO.get(key)
    if hit is not None:
        return hit.copy()
    w = _jacobi(A, want_vectors=False)
    if len(_EIG_MEMO) >= _EIG_MEMO_CAP:
        _EIG_MEMO.clear()
    _EIG_MEMO[key] = w.copy()
    return w


def eig_sym_full(M):
    """Eigenvalues (ascending) and the corresponding orthonormal eigenvectors."""
    return _jacobi(as_sym_matrix(M), want_vectors=True)


def default_fd_step(x):
    """Step balancing truncation vs rounding for second-order differences."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    return 1e-4 * max(1.0, r)


def _as_eval(f):
    return f.value if hasattr(f, "value") else f


def fd_gradient(f, x, h=None):
    """Central-difference gradient, second order in h."""
    fn = _as_eval(f)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_fd_step(x) if h is None else float(h)
    if not h > 0:
        raise InputError(f"fd step must be positive, got {h}")
    g = np.empty(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def fd_hessian(f, x, h=None):
    """Central-difference Hessian, second order; exactly symmetric output.

    The mixed-derivative stencil is evaluated once per (i, j) pair with i < j
    and mirrored, so H[i, j] == H[j, i] bit for bit.
    """
    fn = _as_eval(f)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_fd_step(x) if h is None else float(h)
    if not h > 0:
        raise InputError(f"fd step must be positive, got {h}")
    n = len(x)
    H = np.empty((n, n))
    f0 = fn(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (fn(x + ei) - 2.0 * f0 + fn(x - ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            mixed = (
                fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4.0 * h * h)
            H[i, j] = mixed
            H[j, i] = mixed
    return H


def invert_monotone(fn, y, lo, hi, dfn=None, seed=None, resid_tol=None, max_iter=120):
    """Solve fn(x) = y for a strictly increasing fn on (lo, hi).

    Bisection with Newton acceleration when a derivative (or secant estimate)
    is making progress inside the bracket.  Infinite bracket ends are expanded
    geometrically from ``seed`` until the root is enclosed.

    Stops when |fn(x) - y| <= resid_tol (default 1e-12 * (1 + |y|)).
    """
    y = float(y)
    if resid_tol is None:
        resid_tol = 1e-12 * (1.0 + abs(y))

    a, b = float(lo), float(hi)
    x0 = seed if seed is not None else None

    # expand unbounded bracket ends
    if not math.isfinite(a) or not math.isfinite(b):
        c = 0.0 if x0 is None else float(x0)
        if not math.isfinite(a):
            step = 1.0
            a = min(c, b - 1.0 if math.isfinite(b) else c) - step
            while fn(a) > y:
                step *= 4.0
                a -= step
                if step > 1e30:
                    raise InputError("could not bracket root from below")
        if not math.isfinite(b):
            step = 1.0
            b = max(c, a + 1.0) + step
            while fn(b) < y:
                step *= 4.0
                b += step
                if step > 1e30:
                    raise InputError("could not bracket root from above")

    fa = fn(a) - y
    fb = fn(b) - y
    if fa > 0 or fb < 0:
        raise InputError(f"target {y} not bracketed by [{a}, {b}]")
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b

    x = float(x0) if (x0 is not None and a < x0 < b) else 0.5 * (a + b)
    fx = fn(x) - y
    for _ in range(max_iter):
        if abs(fx) <= resid_tol:
            return x
        if fx > 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        step_ok = False
        if dfn is not None:
            d = dfn(x)
            if d > 0 and math.isfinite(d):
                xn = x - fx / d
                if a < xn < b:
                    x = xn
                    step_ok = True
        if not step_ok:
            # secant fallback inside the bracket, else bisection
            denom = fb - fa
            xn = a - fa * (b - a) / denom if denom != 0 else 0.5 * (a + b)
            x = xn if a < xn < b else 0.5 * (a + b)
        fx = fn(x) - y
        if b - a <= 4.0 * np.spacing(max(abs(a), abs(b))):
            return x
    if abs(fx) <= 100.0 * resid_tol:
        return x
    raise InputError(f"monotone inversion stalled: |f(x)-y| = {abs(fx):.3e}")


def hermite_value(t, t0, t1, y0, y1, d0, d1):
    """Cubic Hermite interpolant on [t0, t1] from endpoint values and slopes."""
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * y0
        + (s3 - 2 * s2 + s) * h * d0
        + (-2 * s3 + 3 * s2) * y1
        + (s3 - s2) * h * d1
    )


def hermite_quintic_value(t, t0, t1, y0, y1, d0, d1, s0, s1):
    """Two-point quintic Hermite from values, slopes, and curvatures."""
    h = t1 - t0
    u = (t - t0) / h
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    u5 = u4 * u
    b0 = 1 - 10 * u3 + 15 * u4 - 6 * u5
    b1 = u - 6 * u3 + 8 * u4 - 3 * u5
    b2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5)
    c0 = 10 * u3 - 15 * u4 + 6 * u5
    c1 = -4 * u3 + 7 * u4 - 3 * u5
    c2 = 0.5 * (u3 - 2 * u4 + u5)
    return (
        b0 * y0
        + b1 * h * d0
        + b2 * h * h * s0
        + c0 * y1
        + c1 * h * d1
        + c2 * h * h * s1
    )


@dataclass
class Trajectory:
    """Dense solution of an ODE system on the span actually covered.

    Values between accepted steps come from cubic Hermite interpolation of the
    endpoint states and derivatives, which keeps downstream quadrature
    consistent with a single trajectory.
    """

    ts: np.ndarray
    ys: np.ndarray
    fs: np.ndarray
    t_start: float
    t_end: float
    event: DivergenceEvent | None = None
    n_steps: int = 0
    n_rejected: int = 0

    @property
    def completed(self):
        return self.event is None

    def __call__(self, t):
        """State vector at time t (t inside the covered span)."""
        ts = self.ts
        lo, hi = (ts[0], ts[-1]) if ts[0] <= ts[-1] else (ts[-1], ts[0])
        tq = float(t)
        if tq < lo - 1e-12 * (1 + abs(lo)) or tq > hi + 1e-12 * (1 + abs(hi)):
            raise InputError(f"t={t} outside covered span [{lo}, {hi}]")
        tq = min(max(tq, lo), hi)
        if ts[0] <= ts[-1]:
            k = int(np.searchsorted(ts, tq, side="right") - 1)
        else:
            k = int(np.searchsorted(-ts, -tq, side="right") - 1)
        k = min(max(k, 0), len(ts) - 2)
        return hermite_value(
            tq, ts[k], ts[k + 1], self.ys[k], self.ys[k + 1], self.fs[k], self.fs[k + 1]
        )

    def sample(self, ts):
        return np.array([self(t) for t in np.asarray(ts, dtype=float)])


# Dormand-Prince 5(4) pair, FSAL
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def integrate_ode(
    rhs,
    y0,
    t_span,
    rel_tol=1e-10,
    abs_tol=1e-12,
    max_step=math.inf,
    first_step=None,
    stop_condition=None,
):
    """Adaptive Dormand-Prince 5(4) with dense output.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt``.  May raise :class:`RhsEvaluationError` to signal
        that (t, y) left the domain; the step is then shrunk and, on underflow,
        the failure becomes a :class:`DivergenceEvent` on the trajectory.
    y0 : array_like
        Initial state.
    t_span : (t0, t1)
        Integration span; t1 < t0 integrates backwards.
    rel_tol, abs_tol : float
        Per-step local error control (RMS-weighted).
    stop_condition : callable, optional
        ``stop_condition(t, y) -> str | None`` checked after each accepted
        step; a non-None label halts integration with that event.

    Returns
    -------
    Trajectory
        Dense trajectory over the covered span; ``trajectory.event`` is None
        iff t1 was reached.
    """
    if not (rel_tol > 0 and abs_tol > 0):
        raise InputError("tolerances must be positive")
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    if not np.all(np.isfinite(y)):
        raise InputError("non-finite initial state")
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)

    ts = [t0]
    ys = [y.copy()]
    f = np.asarray(rhs(t0, y), dtype=float)
    fs = [f.copy()]
    event = None
    n_steps = 0
    n_rejected = 0

    if span == 0.0:
        return Trajectory(np.array(ts), np.array(ys), np.array(fs), t0, t1)

    h = first_step if first_step is not None else min(span / 100.0, 1.0, max_step)
    h = max(h, 1e-12 * span)
    t = t0
    min_h_floor = 1e-14

    while (t1 - t) * direction > 0:
        h = min(h, abs(t1 - t), max_step)
        if h < min_h_floor * max(1.0, abs(t)):
            event = DivergenceEvent("step_underflow", t, y.copy(), "step size underflow")
            break
        hd = h * direction
        try:
            k = np.empty((7, len(y)))
            k[0] = f
            failed = False
            for i in range(1, 7):
                yi = y + hd * (_DP_A[i] @ k[:i])
                if not np.all(np.isfinite(yi)):
                    failed = True
                    break
                k[i] = rhs(t + _DP_C[i] * hd, yi)
            if failed:
                n_rejected += 1
                h *= 0.25
                continue
        except RhsEvaluationError as exc:
            # domain failure inside the step: shrink; underflow localizes it
            if h < 4.0 * min_h_floor * max(1.0, abs(t)):
                event = DivergenceEvent(exc.label, t, y.copy(), exc.detail)
                break
            n_rejected += 1
            h *= 0.25
            continue

        y_new = y + hd * (_DP_B5 @ k)
        err_vec = hd * (_DP_E @ k)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0 or h <= 2.0 * min_h_floor * max(1.0, abs(t)):
            if not np.all(np.isfinite(y_new)):
                event = DivergenceEvent("non_finite_state", t, y.copy())
                break
            t = t + hd
            y = y_new
            f = k[6].copy()  # FSAL
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            n_steps += 1
            if stop_condition is not None:
                label = stop_condition(t, y)
                if label:
                    event = DivergenceEvent(label, t, y.copy())
                    break
            fac = 0.9 * err ** -0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            n_rejected += 1
            h *= min(1.0, max(0.1, 0.9 * err ** -0.2))

    return Trajectory(
        np.array(ts),
        np.array(ys),
        np.array(fs),
        t0,
        t,
        event=event,
        n_steps=n_steps,
        n_rejected=n_rejected,
    )
