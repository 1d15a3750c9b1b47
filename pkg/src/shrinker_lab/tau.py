"""The one-parameter operator family on Hessian eigenvalues, its admissibility
cones, and the pointwise residual operators built from it.

The family is indexed by an angle ``tau`` in (-pi/4, pi/2].  Each member acts
on a symmetric spectrum as a sum of one identical scalar function per
eigenvalue; the scalar function, its derivative, and its inverse have closed
forms on every branch.  Branch tags are stored explicitly: seam angles are
never inferred from floating-point comparisons of cot^2(tau) with 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import mpmath as mp
import numpy as np

from .numerics import eig_sym, eig_sym_full, fd_gradient, fd_hessian, default_fd_step

__all__ = [
    "Branch",
    "TauParams",
    "ConeSpec",
    "ConeViolation",
    "InverseRangeError",
    "SingularWeightError",
    "SpacelikeViolation",
    "cone_spec",
    "f_value",
    "f_derivative",
    "f_inverse",
    "f_range",
    "f_value_mp",
    "f_inverse_mp",
    "operator_value",
    "operator_gradient_matrix",
    "admissible",
    "phase",
    "shrinker_residual",
    "drift_residual",
    "growth_ratio",
    "weighted_p_laplace_residual",
    "minkowski_residual",
]

SQRT2 = math.sqrt(2.0)


class Branch(str, Enum):
    MA = "MA"        # tau = 0, log-determinant operator
    LOG = "LOG"      # 0 < tau < pi/4
    HARM = "HARM"    # tau = pi/4, harmonic-mean type operator
    ATAN = "ATAN"    # pi/4 < tau < pi/2
    SLAG = "SLAG"    # tau = pi/2, arctangent operator
    NEG = "NEG"      # -pi/4 < tau < 0, bounded-interval cone


class ConeViolation(ValueError):
    """A Hessian eigenvalue left the admissibility cone."""

    def __init__(self, message, eigenvalue=None, location=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.location = location


class InverseRangeError(ValueError):
    """Target value outside the attainable range of the scalar branch function."""

    def __init__(self, y, lo, hi):
        super().__init__(f"target {y} outside attainable range ({lo}, {hi})")
        self.attainable = (lo, hi)


class SingularWeightError(ValueError):
    """p-Laplace weight singular at a critical point (|Dh| = 0, p < 2)."""


class SpacelikeViolation(ValueError):
    """|Df| >= 1: the graph is not spacelike at this point."""


@dataclass(frozen=True)
class ConeSpec:
    """Open set of admissible eigenvalues for one component."""

    kind: str          # halfline_above | halfline_below | interval | all_reals
    lo: float
    hi: float
    description: str

    def contains(self, lam):
        return self.lo < lam < self.hi


@dataclass(frozen=True)
class TauParams:
    """Angle tau with derived constants and an explicit branch tag.

    ``a = cot(tau)`` and ``b = sqrt(|cot^2(tau) - 1|)``; both are stored as
    +inf on the MA branch, whose formulas never reference them.  ``cone_side``
    selects the component for branches with two admissible components.
    """

    tau: float
    a: float
    b: float
    branch: Branch
    cone_side: str = "upper"

    def __post_init__(self):
        if self.cone_side not in ("upper", "lower"):
            raise ValueError(f"cone_side must be 'upper' or 'lower', got {self.cone_side!r}")
        if self.branch not in Branch:
            raise ValueError(f"unknown branch {self.branch!r}")
        if self.branch is not Branch.MA:
            if abs(self.a - 1.0 / math.tan(self.tau)) > 1e-9 * (1.0 + abs(self.a)):
                raise ValueError("a is inconsistent with cot(tau)")
            if abs(self.b * self.b - abs(self.a * self.a - 1.0)) > 1e-9 * (1.0 + self.a * self.a):
                raise ValueError("b is inconsistent with sqrt(|cot^2 tau - 1|)")

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_tau(cls, tau, cone_side="upper"):
        """Classify a float angle; the seams 0, pi/4, pi/2 match exactly."""
        tau = float(tau)
        if tau == 0.0:
            return cls.monge_ampere(cone_side)
        if tau == math.pi / 4:
            return cls.harmonic(cone_side)
        if tau == math.pi / 2:
            return cls.special_lagrangian()
        if -math.pi / 4 < tau < 0.0:
            a = 1.0 / math.tan(tau)
            return cls(tau, a, math.sqrt(a * a - 1.0), Branch.NEG, cone_side)
        if 0.0 < tau < math.pi / 4:
            a = 1.0 / math.tan(tau)
            return cls(tau, a, math.sqrt(a * a - 1.0), Branch.LOG, cone_side)
        if math.pi / 4 < tau < math.pi / 2:
            a = 1.0 / math.tan(tau)
            return cls(tau, a, math.sqrt(1.0 - a * a), Branch.ATAN, cone_side)
        raise ValueError(f"tau = {tau} outside (-pi/4, pi/2]")

    @classmethod
    def from_cot(cls, a, cone_side="upper"):
        """Construct from a = cot(tau); rejects a in [-1, 0] and (0, ...]=... seams by value."""
        a = float(a)
        if math.isinf(a):
            return cls.monge_ampere(cone_side)
        if a == 0.0:
            return cls.special_lagrangian()
        if a == 1.0:
            return cls.harmonic(cone_side)
        if -1.0 <= a < 0.0:
            raise ValueError(f"a = {a} corresponds to tau <= -pi/4")
        tau = math.atan(1.0 / a)
        if a > 1.0:
            return cls(tau, a, math.sqrt(a * a - 1.0), Branch.LOG, cone_side)
        if 0.0 < a < 1.0:
            return cls(tau, a, math.sqrt(1.0 - a * a), Branch.ATAN, cone_side)
        return cls(tau, a, math.sqrt(a * a - 1.0), Branch.NEG, cone_side)

    @classmethod
    def monge_ampere(cls, cone_side="upper"):
        return cls(0.0, math.inf, math.inf, Branch.MA, cone_side)

    @classmethod
    def harmonic(cls, cone_side="upper"):
        return cls(math.pi / 4, 1.0, 0.0, Branch.HARM, cone_side)

    @classmethod
    def special_lagrangian(cls):
        return cls(math.pi / 2, 0.0, 1.0, Branch.SLAG)

    @classmethod
    def log_branch(cls, tau, cone_side="upper"):
        tp = cls.from_tau(tau, cone_side)
        if tp.branch is not Branch.LOG:
            raise ValueError(f"tau = {tau} is not in (0, pi/4)")
        return tp

    @classmethod
    def atan_branch(cls, tau):
        tp = cls.from_tau(tau)
        if tp.branch is not Branch.ATAN:
            raise ValueError(f"tau = {tau} is not in (pi/4, pi/2)")
        return tp

    @classmethod
    def neg_branch(cls, a=None, tau=None, cone_side="upper"):
        tp = cls.from_cot(a, cone_side) if a is not None else cls.from_tau(tau, cone_side)
        if tp.branch is not Branch.NEG:
            raise ValueError("parameters are not in the NEG range (a < -1)")
        return tp

    # -- derived constants -------------------------------------------------
    @property
    def sqrt_a2p1(self):
        return math.sqrt(self.a * self.a + 1.0) if not math.isinf(self.a) else math.inf

    @property
    def sin_cos(self):
        """(sin tau, cos tau) with exact values at the seams."""
        br = self.branch
        if br is Branch.MA:
            return 0.0, 1.0
        if br is Branch.HARM:
            return SQRT2 / 2.0, SQRT2 / 2.0
        if br is Branch.SLAG:
            return 1.0, 0.0
        s = 1.0 / self.sqrt_a2p1
        if br is Branch.NEG:
            return -s, -self.a * s
        return s, self.a * s

    def with_cone_side(self, side):
        return TauParams(self.tau, self.a, self.b, self.branch, side)


def cone_spec(tp):
    """Admissibility component selected by ``tp.cone_side``."""
    br, a, b = tp.branch, tp.a, tp.b
    if br is Branch.MA:
        return ConeSpec("halfline_above", 0.0, math.inf, "all eigenvalues positive")
    if br is Branch.LOG:
        if tp.cone_side == "upper":
            return ConeSpec("halfline_above", -(a - b), math.inf, "eigenvalues above b - a")
        return ConeSpec("halfline_below", -math.inf, -(a + b), "eigenvalues below -(a + b)")
    if br is Branch.HARM:
        if tp.cone_side == "upper":
            return ConeSpec("halfline_above", -1.0, math.inf, "eigenvalues above -1")
        return ConeSpec("halfline_below", -math.inf, -1.0, "eigenvalues below -1")
    if br is Branch.NEG:
        return ConeSpec("interval", -(b + a), b - a, "eigenvalues in the bounded interval")
    return ConeSpec("all_reals", -math.inf, math.inf, "no constraint")


def _in_domain(tp, lam):
    """Union of admissible components for the scalar function itself."""
    br, a, b = tp.branch, tp.a, tp.b
    if br is Branch.MA:
        return lam > 0.0
    if br is Branch.LOG:
        return lam > -(a - b) or lam < -(a + b)
    if br is Branch.HARM:
        return lam != -1.0
    if br is Branch.NEG:
        return -(b + a) < lam < (b - a)
    return True


def f_value(tp, lam):
    """The single-eigenvalue summand of the operator."""
    lam = float(lam)
    if not _in_domain(tp, lam):
        raise ConeViolation(
            f"eigenvalue {lam} outside the {tp.branch.value} admissibility set", eigenvalue=lam
        )
    br, a, b = tp.branch, tp.a, tp.b
    if br is Branch.MA:
        return 0.5 * math.log(lam)
    if br is Branch.LOG:
        # group as lam + (a -+ b): exact near the cone edge, where the naive
        # left-to-right sum rounds the small factor to zero
        return tp.sqrt_a2p1 / (2.0 * b) * math.log((lam + (a - b)) / (lam + (a + b)))
    if br is Branch.HARM:
        return -SQRT2 / (1.0 + lam)
    if br is Branch.ATAN:
        # smooth form of the quotient arctangent; the raw quotient form jumps
        # by pi across lam = -(a + b)
        return tp.sqrt_a2p1 / b * (math.atan((lam + a) / b) - math.pi / 4.0)
    if br is Branch.SLAG:
        return math.atan(lam)
    # NEG
    return tp.sqrt_a2p1 / (2.0 * b) * math.log((lam + (b + a)) / ((b - a) - lam))


def f_derivative(tp, lam):
    """Closed-form derivative of the scalar summand; strictly positive."""
    lam = float(lam)
    if not _in_domain(tp, lam):
        raise ConeViolation(
            f"eigenvalue {lam} outside the {tp.branch.value} admissibility set", eigenvalue=lam
        )
    br, a, b = tp.branch, tp.a, tp.b
    if br is Branch.MA:
        return 0.5 / lam
    if br is Branch.LOG:
        return tp.sqrt_a2p1 / ((lam + (a - b)) * (lam + (a + b)))
    if br is Branch.HARM:
        return SQRT2 / (1.0 + lam) ** 2
    if br is Branch.ATAN:
        return tp.sqrt_a2p1 / ((lam + a) ** 2 + b * b)
    if br is Branch.SLAG:
        return 1.0 / (1.0 + lam * lam)
    return tp.sqrt_a2p1 / ((lam + (b + a)) * ((b - a) - lam))


def f_range(tp):
    """Open range of the scalar summand on the component picked by cone_side."""
    br = tp.branch
    if br is Branch.MA or br is Branch.NEG:
        return (-math.inf, math.inf)
    if br in (Branch.LOG, Branch.HARM):
        return (-math.inf, 0.0) if tp.cone_side == "upper" else (0.0, math.inf)
    if br is Branch.ATAN:
        c = tp.sqrt_a2p1 / tp.b
        return (-0.75 * math.pi * c, 0.25 * math.pi * c)
    return (-math.pi / 2.0, math.pi / 2.0)


def _sigmoid(s):
    if s >= 0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def f_inverse(tp, y):
    """Unique admissible lam with f(lam) = y on the selected cone component.

    A closed-form seed exists on every branch; a short guarded Newton polish
    enforces |f(lam) - y| <= 1e-12 * (1 + |y|).
    """
    y = float(y)
    lo, hi = f_range(tp)
    if not (lo < y < hi):
        raise InverseRangeError(y, lo, hi)
    br, a, b = tp.branch, tp.a, tp.b
    if br is Branch.MA:
        try:
            lam = math.exp(2.0 * y)
        except OverflowError:
            return math.inf  # preimage beyond double range; MA cone is unbounded
    elif br is Branch.LOG:
        # (1+E)/(1-E) with E = exp(2by/sqrt(a^2+1)) equals -coth(by/sqrt(a^2+1))
        lam = -a - b / math.tanh(b * y / tp.sqrt_a2p1)
    elif br is Branch.HARM:
        lam = -SQRT2 / y - 1.0
    elif br is Branch.ATAN:
        lam = -a + b * math.tan(y * b / tp.sqrt_a2p1 + math.pi / 4.0)
    elif br is Branch.SLAG:
        lam = math.tan(y)
    else:  # NEG
        lam = -(a + b) + 2.0 * b * _sigmoid(2.0 * b * y / tp.sqrt_a2p1)
    # clamp into the open component: for extreme targets the closed form can
    # round onto (or past) a cone endpoint, where the nearest interior double
    # is the correctly rounded preimage
    spec = cone_spec(tp)
    if math.isfinite(spec.lo):
        lam = max(lam, float(np.nextafter(spec.lo, math.inf)))
    if math.isfinite(spec.hi):
        lam = min(lam, float(np.nextafter(spec.hi, -math.inf)))
    if not math.isfinite(lam):
        return lam
    # short guarded Newton polish
    tol = 1e-12 * (1.0 + abs(y))
    for _ in range(4):
        r = f_value(tp, lam) - y
        if not math.isfinite(r) or abs(r) <= tol:
            break
        step = r / f_derivative(tp, lam)
        if not math.isfinite(step):
            break
        cand = lam - step
        while not spec.contains(cand):
            step *= 0.5
            cand = lam - step
            if abs(step) < 1e-300:
                break
        lam = cand
    return lam


def _mp_consts(tp):
    a = mp.mpf(repr(tp.a))
    b = mp.mpf(repr(tp.b))
    return a, b, mp.sqrt(a * a + 1)


def f_value_mp(tp, lam):
    """mpmath twin of :func:`f_value` for high-precision shooting."""
    br = tp.branch
    if br is Branch.MA:
        return mp.log(lam) / 2
    if br is Branch.SLAG:
        return mp.atan(lam)
    if br is Branch.HARM:
        return -mp.sqrt(2) / (1 + lam)
    a, b, root = _mp_consts(tp)
    if br is Branch.LOG:
        return root / (2 * b) * mp.log((lam + a - b) / (lam + a + b))
    if br is Branch.ATAN:
        return root / b * (mp.atan((lam + a) / b) - mp.pi / 4)
    return root / (2 * b) * mp.log((b + a + lam) / (b - a - lam))


def f_inverse_mp(tp, y):
    """mpmath twin of :func:`f_inverse` (closed forms only)."""
    br = tp.branch
    if br is Branch.MA:
        return mp.exp(2 * y)
    if br is Branch.SLAG:
        return mp.tan(y)
    if br is Branch.HARM:
        return -mp.sqrt(2) / y - 1
    a, b, root = _mp_consts(tp)
    if br is Branch.LOG:
        return -a - b / mp.tanh(b * y / root)
    if br is Branch.ATAN:
        return -a + b * mp.tan(y * b / root + mp.pi / 4)
    return -(a + b) + 2 * b / (1 + mp.exp(-2 * b * y / root))


def admissible(tp, eigenvalues):
    """Cone-component tag for a spectrum, or None when no component holds it.

    Tags: 'upper' | 'lower' | 'all' | 'inside-interval'.  Components are
    treated separately; a spectrum mixing them is inadmissible.
    """
    lams = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    br, a, b = tp.branch, tp.a, tp.b
    if br in (Branch.ATAN, Branch.SLAG):
        return "all"
    if br is Branch.MA:
        return "upper" if np.all(lams > 0.0) else None
    if br is Branch.NEG:
        return "inside-interval" if np.all((lams > -(b + a)) & (lams < b - a)) else None
    edge_upper = -(a - b) if br is Branch.LOG else -1.0
    edge_lower = -(a + b) if br is Branch.LOG else -1.0
    if np.all(lams > edge_upper):
        return "upper"
    if np.all(lams < edge_lower):
        return "lower"
    return None


def operator_value(tp, eigenvalues):
    """Sum of the scalar summand over the spectrum (the operator itself)."""
    lams = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    if admissible(tp, lams) is None:
        raise ConeViolation(
            f"spectrum {lams} not inside a single {tp.branch.value} cone component",
            eigenvalue=float(lams[0]),
        )
    return float(sum(f_value(tp, lam) for lam in lams))


def operator_gradient_matrix(tp, H):
    """dF/dH as a symmetric matrix, assembled eigenvalue-wise.

    Diagonalize H, apply the scalar derivative to each eigenvalue, rotate back.
    """
    w, Q = eig_sym_full(H)
    if admissible(tp, w) is None:
        raise ConeViolation(f"Hessian spectrum {w} inadmissible for {tp.branch.value}")
    d = np.array([f_derivative(tp, lam) for lam in w])
    return (Q * d) @ Q.T


def phase(field, x):
    """-u(x) + <x, Du(x)>/2; constant along exact quadratic solutions."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(-field.value(x) + 0.5 * float(x @ field.gradient(x)))


def shrinker_residual(tp, field, x):
    """Pointwise defect of the self-shrinker potential equation at x.

    Zero iff  F(lambda(D^2 u)) = -u + <x, Du>/2  holds at x.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eigs = eig_sym(field.hessian(x))
    if admissible(tp, eigs) is None:
        raise ConeViolation(
            f"inadmissible Hessian spectrum {eigs} at x = {x}", eigenvalue=float(eigs[0]), location=x
        )
    return float(operator_value(tp, eigs) - phase(field, x))


def drift_residual(tp, field, x, h=None):
    """Residual of the zeroth-order-free drift equation satisfied by the phase.

    a^{ij} phi_ij - <x, D phi>/2, with a^{ij} the operator linearization at
    D^2 u(x) and the phase derivatives taken by central differences of the
    scalar map  x -> -u + <x, Du>/2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_fd_step(x) if h is None else float(h)
    coeff = operator_gradient_matrix(tp, field.hessian(x))

    def phi(p):
        return phase(field, p)

    dphi = fd_gradient(phi, x, h)
    d2phi = fd_hessian(phi, x, h)
    return float(np.sum(coeff * d2phi) - 0.5 * float(x @ dphi))


@dataclass(frozen=True)
class GrowthRatio:
    q: float
    dq_dr: float
    defect: float


def growth_ratio(tp, field, theta, r, h=None):
    """Radial growth diagnostic q(r) = u(r theta)/r^2 and its derivative defect.

    Along any solution, dq/dr equals 2 F(lambda(D^2 u(r theta))) / r^3; the
    returned defect measures the failure of that identity.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    nrm = float(np.linalg.norm(theta))
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"theta must be a unit vector, |theta| = {nrm}")
    r = float(r)
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    if h is None:
        h = min(1e-4 * max(1.0, r), 0.45 * r)
    q = field.value(r * theta) / r**2
    qp = field.value((r + h) * theta) / (r + h) ** 2
    qm = field.value((r - h) * theta) / (r - h) ** 2
    dq_dr = (qp - qm) / (2.0 * h)
    F = operator_value(tp, eig_sym(field.hessian(r * theta)))
    return GrowthRatio(q, dq_dr, dq_dr - 2.0 * F / r**3)


def weighted_p_laplace_residual(field, p, K, x, h=None):
    """div(|Dh|^{p-2} Dh) - K <x, Dh> |Dh|^{p-2}, divergence expanded via FD.

    The weight is singular at critical points for p < 2; that is reported as
    an error rather than evaluated.
    """
    if not p > 1:
        raise ValueError(f"need p > 1, got {p}")
    if not K > 0:
        raise ValueError(f"need K > 0, got {K}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_fd_step(x) if h is None else float(h)
    g = fd_gradient(field, x, h) if not hasattr(field, "gradient") else field.gradient(x)
    H = fd_hessian(field, x, h) if not hasattr(field, "hessian") else field.hessian(x)
    gn2 = float(g @ g)
    if gn2 == 0.0:
        if p < 2.0:
            raise SingularWeightError(f"|Dh| = 0 at x = {x} with p = {p} < 2")
        if p == 2.0:
            return float(np.trace(H))
        return 0.0
    gn = math.sqrt(gn2)
    lap = float(np.trace(H))
    ghg = float(g @ H @ g)
    div = gn ** (p - 2.0) * lap + (p - 2.0) * gn ** (p - 4.0) * ghg
    return float(div - K * float(x @ g) * gn ** (p - 2.0))


def minkowski_residual(field, x):
    """Residual of the spacelike self-shrinker graph equation in flat signature.

    (delta_ij + f_i f_j / (1 - |Df|^2)) f_ij + f/2 - <x, Df>/2.  When the field
    exposes ``gradient_complement`` (a stable evaluation of 1 - |Df|^2), that
    is used for the weight; the direct expression loses precision once |Df| is
    within a few ulp of 1.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = field.gradient(x)
    gn2 = float(g @ g)
    comp_fn = getattr(field, "gradient_complement", None)
    comp = float(comp_fn(x)) if comp_fn is not None else 1.0 - gn2
    if gn2 >= 1.0 or comp <= 0.0:
        raise SpacelikeViolation(f"|Df| = {math.sqrt(gn2)} >= 1 at x = {x}")
    H = field.hessian(x)
    lhs = float(np.trace(H)) + float(g @ H @ g) / comp
    rhs = -0.5 * field.value(x) + 0.5 * float(x @ g)
    return float(lhs - rhs)
