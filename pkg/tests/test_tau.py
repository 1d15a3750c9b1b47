import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import shrinker_lab as sl
from shrinker_lab import (
    Branch,
    ConeViolation,
    InverseRangeError,
    TauParams,
    admissible,
    cone_spec,
    f_derivative,
    f_inverse,
    f_value,
    operator_value,
    phase,
)
from shrinker_lab.fields import CallableField, QuadraticField
from shrinker_lab.tau import SpacelikeViolation, minkowski_residual, weighted_p_laplace_residual
from conftest import branch_params

SQRT2 = math.sqrt(2.0)

# frozen oracle values (40-digit evaluation of the closed forms)
ATAN_PI3_F0 = -0.24030098317248836  # sqrt(2)*(atan(1/sqrt(2)) - pi/4)
LOG_PI6_F0 = -1.6209939789535075    # == -sqrt(2)*ln(sqrt(3)+sqrt(2))


class TestTauParams:
    def test_branch_classification(self):
        assert TauParams.from_tau(0.0).branch is Branch.MA
        assert TauParams.from_tau(math.pi / 4).branch is Branch.HARM
        assert TauParams.from_tau(math.pi / 2).branch is Branch.SLAG
        assert TauParams.from_tau(math.pi / 6).branch is Branch.LOG
        assert TauParams.from_tau(math.pi / 3).branch is Branch.ATAN
        assert TauParams.from_tau(-0.4).branch is Branch.NEG

    def test_out_of_range(self):
        for tau in (2.0, -math.pi / 4, -1.0, 3.2):
            with pytest.raises(ValueError):
                TauParams.from_tau(tau)

    def test_from_cot(self):
        assert TauParams.from_cot(-2.0).branch is Branch.NEG
        assert TauParams.from_cot(2.0).branch is Branch.LOG
        assert TauParams.from_cot(0.5).branch is Branch.ATAN
        assert TauParams.from_cot(0.0).branch is Branch.SLAG
        assert TauParams.from_cot(1.0).branch is Branch.HARM
        with pytest.raises(ValueError):
            TauParams.from_cot(-0.5)

    def test_constants_consistency(self):
        for name, tp in branch_params().items():
            if tp.branch is Branch.MA:
                continue
            assert abs(tp.a - 1.0 / math.tan(tp.tau)) < 1e-12 * (1 + abs(tp.a))
            assert abs(tp.a**2 + 1.0 - 1.0 / math.sin(tp.tau) ** 2) < 1e-12 * (1 + tp.a**2)
            s, c = tp.sin_cos
            assert abs(s - math.sin(tp.tau)) < 1e-12
            assert abs(c - math.cos(tp.tau)) < 1e-12

    def test_neg_interval(self):
        spec = cone_spec(TauParams.neg_branch(a=-2.0))
        assert spec.kind == "interval"
        assert abs(spec.lo - (2.0 - math.sqrt(3.0))) < 1e-14
        assert abs(spec.hi - (2.0 + math.sqrt(3.0))) < 1e-14

    def test_cone_side_validated(self):
        with pytest.raises(ValueError, match="cone_side"):
            TauParams(math.pi / 6, math.sqrt(3.0), math.sqrt(2.0), Branch.LOG, "middle")

    def test_inconsistent_constants_rejected(self):
        with pytest.raises(ValueError):
            TauParams(math.pi / 6, 2.0, math.sqrt(2.0), Branch.LOG)


class TestScalarFunction:
    def test_frozen_values(self, all_branches):
        assert f_value(all_branches["HARM"], 0.0) == -SQRT2
        assert f_value(all_branches["SLAG"], 1.0) == math.atan(1.0)
        assert abs(f_value(all_branches["ATAN"], 0.0) - ATAN_PI3_F0) < 1e-14
        assert abs(f_value(all_branches["LOG"], 0.0) - LOG_PI6_F0) < 1e-14

    def test_atan_smooth_vs_quotient_form(self, all_branches):
        # the two arctangent forms agree wherever lam + a + b > 0
        tp = all_branches["ATAN"]
        a, b, c = tp.a, tp.b, tp.sqrt_a2p1 / tp.b
        for lam in np.linspace(-(a + b) + 1e-6, 30.0, 500):
            raw = c * math.atan((lam + a - b) / (lam + a + b))
            assert abs(raw - f_value(tp, lam)) < 1e-12

    def test_derivative_frozen(self, all_branches):
        assert f_derivative(all_branches["HARM"], 0.0) == SQRT2
        assert f_derivative(all_branches["SLAG"], 0.0) == 1.0
        # (lam + a)^2 - b^2 at lam = 0 is a^2 - b^2 = 1 for a = sqrt3, b = sqrt2
        assert abs(f_derivative(all_branches["LOG"], 0.0) - 2.0) < 1e-14

    def test_derivative_positive_everywhere(self, all_branches, rng):
        for name, tp in all_branches.items():
            spec = cone_spec(tp)
            lo = spec.lo if math.isfinite(spec.lo) else -8.0
            hi = spec.hi if math.isfinite(spec.hi) else 8.0
            w = hi - lo
            for lam in lo + w * rng.uniform(0.001, 0.999, size=107):
                assert f_derivative(tp, lam) > 0.0

    def test_derivative_matches_fd(self, all_branches, rng):
        for name, tp in all_branches.items():
            spec = cone_spec(tp)
            lo = spec.lo if math.isfinite(spec.lo) else -4.0
            hi = spec.hi if math.isfinite(spec.hi) else 4.0
            w = hi - lo
            for lam in lo + w * rng.uniform(0.05, 0.95, size=25):
                h = 1e-6 * max(1.0, abs(lam))
                fd = (f_value(tp, lam + h) - f_value(tp, lam - h)) / (2 * h)
                assert abs(fd - f_derivative(tp, lam)) < 1e-6 * max(1.0, abs(fd))

    def test_domain_violations(self, all_branches):
        with pytest.raises(ConeViolation):
            f_value(all_branches["MA"], -0.5)
        with pytest.raises(ConeViolation):
            f_value(all_branches["HARM"], -1.0)
        with pytest.raises(ConeViolation):
            f_value(all_branches["NEG"], 4.0)
        with pytest.raises(ConeViolation) as exc:
            f_value(all_branches["NEG"], 0.1)
        assert exc.value.eigenvalue == 0.1


class TestInverse:
    def test_trivial_inverses(self, all_branches):
        assert abs(f_inverse(all_branches["HARM"], -SQRT2) - 0.0) < 1e-12
        assert abs(f_inverse(all_branches["MA"], 0.0) - 1.0) < 1e-12
        assert abs(f_inverse(all_branches["SLAG"], math.pi / 4) - 1.0) < 1e-12

    def test_roundtrip_all_branches(self, all_branches, rng):
        for name, tp in all_branches.items():
            spec = cone_spec(tp)
            lo = spec.lo if math.isfinite(spec.lo) else -6.0
            hi = spec.hi if math.isfinite(spec.hi) else 6.0
            w = hi - lo
            for lam in lo + w * rng.uniform(0.01, 0.99, size=200):
                back = f_inverse(tp, f_value(tp, lam))
                assert abs(back - lam) < 1e-10 * (1.0 + abs(lam))

    def test_roundtrip_lower_cones(self, rng):
        for tp in (TauParams.harmonic("lower"), TauParams.log_branch(math.pi / 6, "lower")):
            spec = cone_spec(tp)
            for lam in spec.hi - rng.uniform(0.05, 6.0, size=100):
                y = f_value(tp, lam)
                assert y > 0.0  # lower-component range
                assert abs(f_inverse(tp, y) - lam) < 1e-10 * (1 + abs(lam))

    def test_residual_contract(self, all_branches, rng):
        # sampled where the scalar function itself is double-evaluable at the
        # contract accuracy: close to a cone edge, f' * ulp(lam) exceeds any
        # representable-lambda residual and no double can satisfy the bound
        windows = {
            "MA": (-30.0, 30.0),
            "LOG": (-6.0, -1e-2),
            "HARM": (-6.0, -1e-2),
            "ATAN": None,
            "SLAG": (-math.pi / 2 + 0.05, math.pi / 2 - 0.05),
            "NEG": (-6.0, 6.0),
        }
        for name, tp in all_branches.items():
            w = windows[name]
            if w is None:
                lo, hi = sl.tau.f_range(tp)
                w = (lo + 0.05, hi - 0.05)
            for y in rng.uniform(w[0], w[1], size=50):
                lam = f_inverse(tp, y)
                assert abs(f_value(tp, lam) - y) <= 1e-12 * (1.0 + abs(y))

    def test_range_error_reports_interval(self, all_branches):
        with pytest.raises(InverseRangeError) as exc:
            f_inverse(all_branches["SLAG"], 2.0)
        lo, hi = exc.value.attainable
        assert (lo, hi) == (-math.pi / 2, math.pi / 2)
        with pytest.raises(InverseRangeError):
            f_inverse(all_branches["HARM"], 0.5)  # upper component range is (-inf, 0)


class TestOperator:
    def test_sums(self, all_branches):
        assert abs(operator_value(all_branches["HARM"], [0.0, 0.0]) + 2 * SQRT2) < 1e-15
        assert operator_value(all_branches["MA"], [1.0, 1.0, 1.0]) == 0.0
        assert abs(operator_value(all_branches["SLAG"], [1.0, -1.0])) < 1e-15

    @given(perm=st.permutations(list(range(4))))
    @settings(max_examples=24, deadline=None)
    def test_permutation_symmetry(self, perm):
        tp = TauParams.special_lagrangian()
        lams = np.array([0.3, -1.2, 2.7, 0.01])
        assert operator_value(tp, lams) == pytest.approx(
            operator_value(tp, lams[list(perm)]), abs=1e-12
        )

    def test_mixed_components_rejected(self, all_branches):
        with pytest.raises(ConeViolation):
            operator_value(all_branches["HARM"], [-3.0, 0.0])


class TestAdmissible:
    def test_tagged_components(self, all_branches):
        assert admissible(all_branches["HARM"], [0.5, 2.0]) == "upper"
        assert admissible(all_branches["HARM"], [-3.0, -2.0]) == "lower"
        assert admissible(all_branches["HARM"], [-3.0, 0.0]) is None
        assert admissible(all_branches["NEG"], [1.0]) == "inside-interval"
        assert admissible(all_branches["ATAN"], [-100.0, 100.0]) == "all"
        assert admissible(all_branches["MA"], [0.1, 5.0]) == "upper"
        assert admissible(all_branches["MA"], [0.0, 1.0]) is None

    def test_neg_endpoints_excluded(self, all_branches):
        tp = all_branches["NEG"]
        spec = cone_spec(tp)
        assert admissible(tp, [spec.lo]) is None
        assert admissible(tp, [spec.hi]) is None


class TestResiduals:
    def test_ma_identity_hessian(self, rng):
        tp = TauParams.monge_ampere()
        field = QuadraticField(np.eye(3), 0.0)
        for _ in range(10):
            assert abs(sl.shrinker_residual(tp, field, rng.uniform(-3, 3, 3))) < 1e-13

    def test_harm_constant_solution(self, rng):
        tp = TauParams.harmonic()
        n = 3
        field = QuadraticField(np.zeros((n, n)), SQRT2 * n)
        for _ in range(10):
            assert abs(sl.shrinker_residual(tp, field, rng.uniform(-3, 3, n))) < 1e-13

    def test_slag_shifted_paraboloid(self, rng):
        tp = TauParams.special_lagrangian()
        n = 2
        field = QuadraticField(np.eye(n), -n * math.pi / 4)
        for _ in range(10):
            assert abs(sl.shrinker_residual(tp, field, rng.uniform(-3, 3, n))) < 1e-13

    def test_phase_euler_identity(self, rng):
        A = rng.standard_normal((3, 3))
        A = 0.5 * (A + A.T)
        c = 1.7
        field = QuadraticField(A, c)
        for _ in range(20):
            x = rng.uniform(-5, 5, 3)
            assert phase(field, x) == pytest.approx(-c, abs=1e-12 * (1 + abs(c)))

    def test_phase_constant_field(self):
        field = QuadraticField(np.zeros((2, 2)), 3.25)
        assert phase(field, np.array([1.0, -2.0])) == -3.25


class TestDrift:
    def test_quadratic_solution_vanishes(self, all_branches, rng):
        for name, tp in all_branches.items():
            A = sl.random_admissible_matrix(tp, 2, rng)
            sol = sl.build_quadratic(tp, A)
            for _ in range(3):
                x = rng.uniform(-2, 2, 2)
                assert abs(sl.drift_residual(tp, sol.field, x, h=1e-3)) < 1e-8

    def test_counterexample_profile(self):
        # 1-D construction, sampled over the trajectory parameter range [-5, 5]
        tp = TauParams.neg_branch(a=-2.0)
        u, prof, cert = sl.build_counterexample(tp, 0.0, 1.0, 1, T=12.0, radius=3.0, samples=50)
        c2 = tp.sqrt_a2p1**0.5 / (2.0 * tp.b)
        worst = 0.0
        for t in np.linspace(-5.0, 5.0, 41):
            worst = max(worst, abs(sl.drift_residual(tp, u, np.array([c2 * t]), h=1e-3)))
        assert worst <= 5e-5

    def test_non_solution_control(self):
        # deliberately perturbed non-solution has drift bounded away from zero
        tp = TauParams.monge_ampere()
        ctl = CallableField(
            2,
            lambda p: 0.5 * float(p @ p) + 0.1 * p[0] ** 3,
            grad=lambda p: p + np.array([0.3 * p[0] ** 2, 0.0]),
            hess=lambda p: np.eye(2) + np.array([[0.6 * p[0], 0.0], [0.0, 0.0]]),
        )
        val = sl.drift_residual(tp, ctl, np.array([1.0, 0.0]), h=1e-3)
        assert abs(val - 0.01875) < 1e-5  # hand-computed linearization value
        assert abs(val) > 1e-2


class TestGrowthRatio:
    def test_quadratic_identity(self, rng):
        tp = TauParams.special_lagrangian()
        A = sl.random_admissible_matrix(tp, 3, rng, spread=2.0)
        sol = sl.build_quadratic(tp, A)
        theta = rng.standard_normal(3)
        theta /= np.linalg.norm(theta)
        g = sl.growth_ratio(tp, sol.field, theta, 2.0)
        assert abs(g.defect) <= 1e-8
        assert g.q == pytest.approx((sol.field.value(2.0 * theta)) / 4.0)

    def test_slag_derivative_bound(self, rng):
        # spectra within [-1, 1]: |sum atan| <= n pi/4, so |dq/dr| <= (n pi/2)/r^3
        tp = TauParams.special_lagrangian()
        n = 3
        for _ in range(20):
            lams = rng.uniform(-0.95, 0.95, n)
            Q = sl.quadratics.random_orthogonal(n, rng)
            A = (Q * lams) @ Q.T
            sol = sl.build_quadratic(tp, 0.5 * (A + A.T))
            theta = rng.standard_normal(n)
            theta /= np.linalg.norm(theta)
            r = float(rng.uniform(0.5, 5.0))
            g = sl.growth_ratio(tp, sol.field, theta, r)
            assert abs(g.dq_dr) <= (n * math.pi / 2.0) / r**3 + 1e-9

    def test_non_solution_control(self):
        tp = TauParams.monge_ampere()
        ctl = CallableField(
            2,
            lambda p: 0.5 * float(p @ p) + 0.1 * p[0] ** 3,
            grad=lambda p: p + np.array([0.3 * p[0] ** 2, 0.0]),
            hess=lambda p: np.eye(2) + np.array([[0.6 * p[0], 0.0], [0.0, 0.0]]),
        )
        g = sl.growth_ratio(tp, ctl, np.array([1.0, 0.0]), 1.0)
        assert abs(g.defect) > 0.1

    def test_radius_validation(self):
        tp = TauParams.special_lagrangian()
        field = QuadraticField(np.eye(2), 0.0)
        with pytest.raises(ValueError):
            sl.growth_ratio(tp, field, np.array([1.0, 0.0]), 0.0)
        with pytest.raises(ValueError):
            sl.growth_ratio(tp, field, np.array([2.0, 0.0]), 1.0)


class TestWeightedPLaplace:
    def test_constant_is_zero(self):
        field = QuadraticField(np.zeros((3, 3)), 4.0)
        assert weighted_p_laplace_residual(field, 2.0, 1.0, np.array([1.0, 0.5, -0.2])) == 0.0

    def test_radial_closed_form(self, rng):
        # h = |x|^2/2: residual (n + p - 2)|x|^{p-2} - K |x|^p
        n = 3
        field = QuadraticField(np.eye(n), 0.0)
        for _ in range(20):
            p = float(rng.uniform(1.2, 4.0))
            K = float(rng.uniform(0.1, 3.0))
            x = rng.uniform(-2, 2, n)
            r = float(np.linalg.norm(x))
            got = weighted_p_laplace_residual(field, p, K, x)
            want = (n + p - 2.0) * r ** (p - 2.0) - K * r**p
            assert got == pytest.approx(want, abs=1e-9 * max(1.0, abs(want)))

    def test_singular_weight(self):
        field = QuadraticField(np.eye(2), 0.0)
        with pytest.raises(sl.tau.SingularWeightError):
            weighted_p_laplace_residual(field, 1.5, 1.0, np.zeros(2))

    def test_parameter_validation(self):
        field = QuadraticField(np.eye(2), 0.0)
        with pytest.raises(ValueError):
            weighted_p_laplace_residual(field, 1.0, 1.0, np.ones(2))
        with pytest.raises(ValueError):
            weighted_p_laplace_residual(field, 2.0, 0.0, np.ones(2))


class TestMinkowskiResidual:
    def test_zero_field(self):
        field = QuadraticField(np.zeros((2, 2)), 0.0)
        assert minkowski_residual(field, np.array([1.0, 2.0])) == 0.0

    def test_linear_solutions(self, rng):
        for _ in range(10):
            c = float(rng.uniform(-0.9, 0.9))
            field = CallableField(
                1,
                lambda p, c=c: c * p[0],
                grad=lambda p, c=c: np.array([c]),
                hess=lambda p: np.zeros((1, 1)),
            )
            assert abs(minkowski_residual(field, np.array([2.0]))) < 1e-14

    def test_linear_solutions_multidimensional(self, rng):
        for _ in range(10):
            c = rng.uniform(-0.5, 0.5, 3)
            if float(c @ c) >= 1.0:
                continue
            field = CallableField(
                3,
                lambda p, c=c: float(c @ p),
                grad=lambda p, c=c: c.copy(),
                hess=lambda p: np.zeros((3, 3)),
            )
            assert abs(minkowski_residual(field, rng.uniform(-3, 3, 3))) < 1e-13

    def test_spacelike_violation(self):
        field = CallableField(
            1, lambda p: 1.5 * p[0], grad=lambda p: np.array([1.5]), hess=lambda p: np.zeros((1, 1))
        )
        with pytest.raises(SpacelikeViolation):
            minkowski_residual(field, np.array([0.0]))


class TestSeamConsistency:
    def test_residuals_vanish_on_both_sides_of_harm(self, rng):
        # same quadratic coefficient matrix, tau slightly below / above pi/4
        A = np.diag([0.3, 1.4])
        for tau in (math.pi / 4 - 1e-3, math.pi / 4, math.pi / 4 + 1e-3):
            tp = TauParams.from_tau(tau)
            sol = sl.build_quadratic(tp, A)
            x = rng.uniform(-2, 2, 2)
            assert abs(sl.shrinker_residual(tp, sol.field, x)) < 1e-10
