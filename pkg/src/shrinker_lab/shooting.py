"""Radial shooting for the self-shrinker potential equation.

A radial potential has Hessian eigenvalues (u'', u'/r x (n-1)), so the
equation reduces to

    u'' = f^{-1}( (-u + r u'/2) - (n-1) f(u'/r) ),

integrated outward from the series start u'(0) = 0, u''(0) = f^{-1}(-u0/n).

Termination events are data, not errors: the construction's scientific output
for perturbed initial values IS the cone exit / inversion failure / blow-up,
which the rigidity statements predict.  Exact quadratic initial data lies on
an exponentially unstable trajectory (deviations grow like exp(r^2/(4 f'(c))),
which is the numerical face of rigidity), so reproducing the closed form to
large radius requires the high-precision Taylor path (``dps=...``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .fields import RadialProfileField
from .numerics import InputError, RhsEvaluationError, integrate_ode
from .tau import (
    ConeViolation,
    cone_spec,
    f_inverse,
    f_inverse_mp,
    f_range,
    f_value,
    f_value_mp,
)

__all__ = ["ShotEvent", "RadialProfile", "shoot_radial", "radial_quadratic_reference"]

_R_START = 1e-8
_R_SERIES = 1e-6
_BLOW_UP_MAG = 1e10


@dataclass(frozen=True)
class ShotEvent:
    kind: str            # completed | cone_exit | blow_up | inversion_failure
    r: float
    detail: str = ""

    @property
    def completed(self):
        return self.kind == "completed"


@dataclass
class RadialProfile:
    """Sampled radial profile (r, u, u', u'') with its termination event."""

    tp: object
    n: int
    u0: float
    rs: np.ndarray
    us: np.ndarray
    ups: np.ndarray
    upps: np.ndarray
    event: ShotEvent
    _state_fn: object = None  # r -> (u, u')

    def u(self, r):
        return self._state(r)[0]

    def du(self, r):
        return self._state(r)[1]

    def d2u(self, r):
        u, up = self._state(r)
        s = self.upps[0] if r < _R_SERIES else up / r
        arg = (-u + 0.5 * r * up) - (self.n - 1) * f_value(self.tp, s)
        return f_inverse(self.tp, arg)

    def _state(self, r):
        r = float(r)
        if self._state_fn is not None:
            return self._state_fn(r)
        # fall back to sampled arrays (reference profiles override u/du anyway)
        u = float(np.interp(r, self.rs, self.us))
        up = float(np.interp(r, self.rs, self.ups))
        return u, up

    @property
    def field(self):
        return RadialProfileField(self.n, self.u, self.du, self.d2u, r_origin=_R_SERIES)

    def rows(self):
        return np.column_stack([self.rs, self.us, self.ups, self.upps])


def _series_state(u0, upp0, r):
    return u0 + 0.5 * upp0 * r * r, upp0 * r


def radial_quadratic_reference(tp, n, c, r_max=10.0, n_samples=401):
    """Exact profile u(r) = c r^2/2 - n f(c); the shooting oracle."""
    c = float(c)
    if not cone_spec(tp).contains(c):
        raise ConeViolation(f"curvature {c} outside the selected cone component", eigenvalue=c)
    const = -n * f_value(tp, c)
    rs = np.linspace(0.0, float(r_max), n_samples)
    us = 0.5 * c * rs**2 + const
    ups = c * rs
    upps = np.full_like(rs, c)
    prof = RadialProfile(
        tp, int(n), float(const), rs, us, ups, upps, ShotEvent("completed", float(r_max))
    )
    prof._state_fn = lambda r: (0.5 * c * r * r + const, c * r)
    prof.d2u = lambda r: c  # exact, no inversion round-trip
    return prof


def _shoot_float(tp, n, u0, upp0, r_max, rel_tol, abs_tol):
    spec = cone_spec(tp)
    lo_y, hi_y = f_range(tp)

    def rhs(r, y):
        u, up = y
        s = upp0 if r < _R_SERIES else up / r
        if not spec.contains(s):
            raise RhsEvaluationError("cone_exit", f"transverse eigenvalue {s} left the cone")
        arg = (-u + 0.5 * r * up) - (n - 1) * f_value(tp, s)
        if not (lo_y < arg < hi_y):
            raise RhsEvaluationError("inversion_failure", f"operator target {arg} out of range")
        return np.array([up, f_inverse(tp, arg)])

    def stop(r, y):
        if abs(y[0]) > _BLOW_UP_MAG or abs(y[1]) > _BLOW_UP_MAG:
            return "blow_up"
        return None

    y0 = np.array(_series_state(u0, upp0, _R_START))
    traj = integrate_ode(rhs, y0, (_R_START, float(r_max)), rel_tol, abs_tol, stop_condition=stop)

    if traj.event is None:
        event = ShotEvent("completed", float(r_max))
    else:
        kind = traj.event.label
        if kind not in ("cone_exit", "inversion_failure", "blow_up"):
            kind = "blow_up"
        event = ShotEvent(kind, float(traj.event.t), traj.event.detail)

    def state(r):
        if r < _R_START:
            return _series_state(u0, upp0, r)
        return tuple(traj(min(r, traj.t_end)))

    return state, float(traj.t_end), event


class _TaylorBudgetExceeded(Exception):
    def __init__(self, r_reached):
        self.r_reached = r_reached


def _shoot_mp(tp, n, u0, r_max, dps, rhs_budget=300_000):
    """Arbitrary-precision Taylor path.

    ``u0`` may be an mpf or decimal string: shooting from the float64 rounding
    of quadratic data is shooting from genuinely perturbed data, which the
    rigidity mechanism blows up near finite radius no matter the working
    precision.  A call-budget guard converts such stalls into blow_up events.
    """
    with mp.workdps(int(dps)):
        if isinstance(u0, str) or isinstance(u0, mp.mpf):
            u0_mp = mp.mpf(u0)
        else:
            u0_mp = mp.mpf(float(u0))  # exact binary conversion
        upp0_mp = f_inverse_mp(tp, -u0_mp / n)
        r0 = mp.mpf(_R_START)
        progress = {"calls": 0, "r_max_seen": float(r0)}

        def rhs(r, y):
            progress["calls"] += 1
            progress["r_max_seen"] = max(progress["r_max_seen"], float(r))
            if progress["calls"] > rhs_budget:
                raise _TaylorBudgetExceeded(progress["r_max_seen"])
            u, up = y[0], y[1]
            s = upp0_mp if r < _R_SERIES else up / r
            arg = (-u + r * up / 2) - (n - 1) * f_value_mp(tp, s)
            return [up, f_inverse_mp(tp, arg)]

        y0 = [u0_mp + upp0_mp * r0 * r0 / 2, upp0_mp * r0]
        sol = mp.odefun(rhs, r0, y0, tol=mp.mpf(10) ** (-(int(dps) - 10)), degree=20)
        try:
            sol(float(r_max))  # build the Taylor table once
            r_end = float(r_max)
            event = ShotEvent("completed", r_end)
        except _TaylorBudgetExceeded as exc:
            r_end = 0.98 * exc.r_reached
            event = ShotEvent(
                "blow_up", exc.r_reached, "Taylor step budget exhausted (trajectory leaving the solution cone)"
            )

        def state(r):
            if r < _R_START:
                return _series_state(float(u0_mp), float(upp0_mp), r)
            with mp.workdps(int(dps)):
                y = sol(min(float(r), r_end))
            return float(y[0]), float(y[1])

    return state, r_end, event


def shoot_radial(tp, n, u0, r_max=10.0, rel_tol=1e-10, abs_tol=1e-12, dps=None, n_samples=401):
    """Integrate the radial equation outward from u(0) = u0.

    Parameters
    ----------
    dps : int, optional
        When given, use an arbitrary-precision Taylor integrator at that many
        digits.  Required to hold the (exponentially unstable) quadratic
        trajectories to large radius; the float path is the event-recording
        experimental tool.

    Raises
    ------
    InverseRangeError
        If -u0/n is not attainable on the selected cone component (no valid
        initial curvature exists).
    """
    n = int(n)
    if n < 1:
        raise InputError(f"dimension must be >= 1, got {n}")
    u0_raw = u0
    u0 = float(u0)
    upp0 = f_inverse(tp, -u0 / n)

    if dps is not None:
        state, r_end, event = _shoot_mp(tp, n, u0_raw, float(r_max), int(dps))
    else:
        state, r_end, event = _shoot_float(tp, n, u0, upp0, float(r_max), rel_tol, abs_tol)

    rs = np.linspace(0.0, r_end, n_samples)
    us = np.empty_like(rs)
    ups = np.empty_like(rs)
    upps = np.empty_like(rs)
    spec = cone_spec(tp)
    lo_y, hi_y = f_range(tp)
    truncate = None
    for i, r in enumerate(rs):
        u, up = state(r) if r > 0 else (u0, 0.0)
        us[i], ups[i] = u, up
        s = upp0 if r < _R_SERIES else up / r
        arg = (-u + 0.5 * r * up) - (n - 1) * (f_value(tp, s) if spec.contains(s) else math.nan)
        if not (lo_y < arg < hi_y) or not spec.contains(s):
            upps[i] = math.nan
            if truncate is None:
                truncate = i
        else:
            upps[i] = f_inverse(tp, arg)
    if truncate is not None and event.completed:
        event = ShotEvent("cone_exit", float(rs[truncate]))
    if truncate is not None:
        rs, us, ups, upps = rs[:truncate], us[:truncate], ups[:truncate], upps[:truncate]

    prof = RadialProfile(tp, n, u0, rs, us, ups, upps, event)
    prof._state_fn = lambda r: (state(r) if r > 0 else (u0, 0.0))
    return prof
