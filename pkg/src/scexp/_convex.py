"""Conic programs (exponential cone, solved with Clarabel) used as direct solvers.

Every program below is posed in nats, because ``rel_entr`` uses natural
logarithms. Callers convert to bits. Variables are only created on the support
of the reference measure so that zero-mass cells never reach the solver.
"""

from __future__ import annotations

import warnings

import cvxpy as cp
import numpy as np

from .probability import LN2

_SOLVER_OPTS = dict(tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10, max_iter=400)


def _solve(problem: cp.Problem) -> str:
    with warnings.catch_warnings():
        # inaccurate solutions are still re-evaluated exactly by the callers
        warnings.simplefilter("ignore", UserWarning)
        try:
            problem.solve(solver=cp.CLARABEL, **_SOLVER_OPTS)
        except cp.SolverError:
            problem.solve(solver=cp.CLARABEL)
    return problem.status


def _sanitize_rows(w: np.ndarray) -> np.ndarray:
    w = np.clip(np.nan_to_num(w, nan=0.0), 0.0, None)
    tot = w.sum(axis=-1, keepdims=True)
    safe = np.where(tot > 0, tot, 1.0)
    return np.where(tot > 0, w / safe, 1.0 / w.shape[-1])


def remote_rd_kernel(p_y: np.ndarray, d_tilde: np.ndarray, delta: float):
    """Minimize I(Y; Xhat) over Q(xhat|y) with sum P(y) Q d~ <= delta.

    Returns (kernel, status). ``p_y`` must be strictly positive.
    """
    ny, nh = d_tilde.shape
    w = cp.Variable((ny, nh), nonneg=True)
    j = cp.multiply(p_y[:, None], w)
    s = cp.sum(j, axis=0)
    rate = cp.sum(cp.rel_entr(j, p_y[:, None] @ cp.reshape(s, (1, nh), order="C")))
    cons = [cp.sum(w, axis=1) == 1, cp.sum(cp.multiply(j, d_tilde)) <= delta]
    status = _solve(cp.Problem(cp.Minimize(rate), cons))
    if w.value is None:
        return None, status
    return _sanitize_rows(w.value), status


def inner_kernel(q_xy: np.ndarray, d: np.ndarray, rate: float, delta: float):
    """Minimize I(X;Xhat|Y) + |I(Y;Xhat) - R|^+ over W(xhat|x,y) with E d <= delta.

    Returns (kernel of shape (X, Y, Xhat), status). Off-support rows of the
    kernel are filled with the letterwise distortion minimizer.
    """
    nx, ny = q_xy.shape
    nh = d.shape[1]
    q_y = q_xy.sum(axis=0)
    cells = [(x, y) for x in range(nx) for y in range(ny) if q_xy[x, y] > 0]
    w = cp.Variable((len(cells), nh), nonneg=True)
    qv = np.array([q_xy[c] for c in cells])
    j = cp.multiply(qv[:, None], w)  # rows are (x, y) cells
    # aggregation matrices: (x, y) cell -> y
    to_y = np.zeros((ny, len(cells)))
    for i, (_, y) in enumerate(cells):
        to_y[y, i] = 1.0
    j_yh = to_y @ j
    j_h = cp.sum(j_yh, axis=0)
    q_x_given_y = np.array([q_xy[x, y] / q_y[y] for (x, y) in cells])
    i_c = cp.sum(cp.rel_entr(j, cp.multiply(q_x_given_y[:, None], to_y.T @ j_yh)))
    ymask = q_y > 0
    i_y = cp.sum(cp.rel_entr(j_yh[ymask], q_y[ymask][:, None] @ cp.reshape(j_h, (1, nh), order="C")))
    dv = np.array([d[x] for (x, _) in cells])
    cons = [cp.sum(w, axis=1) == 1, cp.sum(cp.multiply(j, dv)) <= delta]
    obj = i_c + cp.pos(i_y - rate * LN2)
    status = _solve(cp.Problem(cp.Minimize(obj), cons))
    kernel = np.zeros((nx, ny, nh))
    kernel[np.arange(nx), :, np.argmin(d, axis=1)] = 1.0
    if w.value is None:
        return None, status
    wv = _sanitize_rows(w.value)
    for i, c in enumerate(cells):
        kernel[c] = wv[i]
    return kernel, status


def joint_exponent(p_xy: np.ndarray, d: np.ndarray, rate: float, delta: float):
    """Jointly minimize over J(x, y, xhat) the convex objective

        max( D(J_XY || P) + I(X;Xhat|Y),  D(J_XY || P) + I(X;Xhat|Y) + I(Y;Xhat) - R )

    subject to E_J d <= delta. The first branch equals
    ``sum J log J / (P(x|y) J(y,xhat)) + D(J_Y || P_Y)`` and the second
    ``sum J log J / (P(x,y) J(xhat))``; both are jointly convex in J.

    Returns (J, rho, lam, status) where rho and lam are the multipliers of the
    rate branch and the distortion constraint, in bit units.
    """
    nx, ny = p_xy.shape
    nh = d.shape[1]
    p_y = p_xy.sum(axis=0)
    cells = [(x, y) for x in range(nx) for y in range(ny) if p_xy[x, y] > 0]
    jv = cp.Variable((len(cells), nh), nonneg=True)
    pv = np.array([p_xy[c] for c in cells])
    p_x_given_y = np.array([p_xy[x, y] / p_y[y] for (x, y) in cells])
    ys = sorted({y for _, y in cells})
    to_y = np.zeros((len(ys), len(cells)))
    for i, (_, y) in enumerate(cells):
        to_y[ys.index(y), i] = 1.0
    j_yh = to_y @ jv
    j_y = cp.sum(j_yh, axis=1)
    j_h = cp.sum(j_yh, axis=0)
    branch_a = (cp.sum(cp.rel_entr(jv, cp.multiply(p_x_given_y[:, None], to_y.T @ j_yh)))
                + cp.sum(cp.rel_entr(j_y, p_y[ys])))
    branch_b = cp.sum(cp.rel_entr(jv, pv[:, None] @ cp.reshape(j_h, (1, nh), order="C")))
    dv = np.array([d[x] for (x, _) in cells])
    t = cp.Variable()
    c_a = branch_a <= t
    c_b = branch_b - rate * LN2 <= t
    c_d = cp.sum(cp.multiply(jv, dv)) <= delta
    status = _solve(cp.Problem(cp.Minimize(t), [c_a, c_b, c_d, cp.sum(jv) == 1]))
    if jv.value is None:
        return None, 0.0, 0.0, status
    jj = np.zeros((nx, ny, nh))
    val = np.clip(jv.value, 0.0, None)
    for i, c in enumerate(cells):
        jj[c] = val[i]
    jj /= jj.sum()
    mu_b = float(c_b.dual_value) if c_b.dual_value is not None else 0.0
    lam = float(c_d.dual_value) / LN2 if c_d.dual_value is not None else 0.0
    return jj, min(max(mu_b, 0.0), 1.0), max(lam, 0.0), status
