"""Geometry of gradient graphs {(x, Du(x))} in the doubled space with the
interpolating ambient metric: induced metric, normal projection, mean
curvature, and the self-shrinker defect as a vector equation.
"""

from __future__ import annotations

import math

import numpy as np

from .numerics import as_sym_matrix, eig_sym, fd_gradient, default_fd_step
from .tau import Branch, ConeViolation, admissible, operator_gradient_matrix, operator_value

__all__ = [
    "DegenerateMetricError",
    "ambient_metric",
    "tangent_frame",
    "induced_metric",
    "metric_duality_defect",
    "normal_project",
    "mean_curvature",
    "shrinker_defect",
]


class DegenerateMetricError(np.linalg.LinAlgError):
    """Induced metric not invertible at this Hessian."""


def ambient_metric(tp, n):
    """2n x 2n block quadratic form  [[sin I, cos I], [cos I, sin I]]."""
    s, c = tp.sin_cos
    eye = np.eye(n)
    return np.block([[s * eye, c * eye], [c * eye, s * eye]])


def tangent_frame(H):
    """Columns span the tangent space of the gradient graph: E_i = (e_i, H e_i)."""
    H = as_sym_matrix(H)
    n = H.shape[0]
    return np.vstack([np.eye(n), H])


def induced_metric(tp, H):
    """Pullback metric on the graph:  sin (I + H^2) + 2 cos H."""
    H = as_sym_matrix(H)
    s, c = tp.sin_cos
    n = H.shape[0]
    return s * (np.eye(n) + H @ H) + 2.0 * c * H


def metric_duality_defect(tp, H):
    """Sup-norm gap between the inverse induced metric and dF/dH.

    Both are diagonal in the Hessian eigenbasis with entries
    1/(sin (1+lam^2) + 2 cos lam) and f'(lam); the identity is exact, so the
    defect measures eigensolver and inversion error only.
    """
    H = as_sym_matrix(H)
    if admissible(tp, eig_sym(H)) is None:
        raise ConeViolation(f"Hessian spectrum inadmissible for {tp.branch.value}")
    g = induced_metric(tp, H)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(str(exc)) from exc
    return float(np.max(np.abs(ginv - operator_gradient_matrix(tp, H))))


def normal_project(tp, H, V):
    """Component of an ambient vector orthogonal (w.r.t. the ambient form) to
    the graph tangent space at Hessian H.

    Characterized by <result, E_i> = 0 for every tangent frame vector.
    """
    H = as_sym_matrix(H)
    V = np.asarray(V, dtype=float)
    n = H.shape[0]
    if V.shape != (2 * n,):
        raise ValueError(f"expected an ambient vector of length {2 * n}, got {V.shape}")
    E = tangent_frame(H)
    G = ambient_metric(tp, n)
    g = E.T @ G @ E
    rhs = E.T @ (G @ V)
    try:
        beta = np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(str(exc)) from exc
    return V - E @ beta


def mean_curvature(tp, field, x, h=None):
    """Mean curvature vector of the gradient graph at (x, Du(x)).

    The ambient divergence reduces to the normal projection of
    (0, D_x[F(lambda(D^2 u))]); the derivative of the composite scalar is taken
    by central differences, which avoids ill-conditioned eigenvector
    derivatives at eigenvalue crossings.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_fd_step(x) if h is None else float(h)

    def F_of_x(p):
        return operator_value(tp, eig_sym(field.hessian(p)))

    dF = fd_gradient(F_of_x, x, h)
    V = np.concatenate([np.zeros(len(x)), dF])
    return normal_project(tp, field.hessian(x), V)


def shrinker_defect(tp, field, x, h=None):
    """Norm of  H + (1/2) X^perp  at the graph point over x.

    Vanishes along self-shrinkers.  For branches whose ambient form is
    positive definite the ambient norm is used; on the indefinite branches the
    Euclidean norm of the defect vector is reported (a residual must vanish
    iff the vector does).  The value never reads u itself, so it is exactly
    invariant under constant shifts of the potential.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    H_vec = mean_curvature(tp, field, x, h)
    Hmat = field.hessian(x)
    X = np.concatenate([x, field.gradient(x)])
    W = H_vec + 0.5 * normal_project(tp, Hmat, X)
    if tp.branch in (Branch.ATAN, Branch.SLAG):
        G = ambient_metric(tp, len(x))
        return float(math.sqrt(max(0.0, float(W @ G @ W))))
    return float(np.linalg.norm(W))
