"""Standard, remote and conditional rate-distortion functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _ba, _convex
from .errors import AlphabetMismatchError, InfeasibleError
from .probability import (
    ConditionalPmf,
    DistortionMatrix,
    JointPmf,
    Pmf,
    mutual_information_array,
)

# remote_rd reports both solution paths; they must agree this closely
REMOTE_AGREEMENT_TOL = 1e-6


@dataclass
class RdResult:
    rate: float
    achieving_kernel: ConditionalPmf
    achieved_distortion: float
    iterations: int
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def _as_joint(p) -> JointPmf:
    return p if isinstance(p, JointPmf) else JointPmf(p)


def _as_pmf(p) -> Pmf:
    return p if isinstance(p, Pmf) else Pmf(p)


def _as_distortion(d) -> DistortionMatrix:
    return d if isinstance(d, DistortionMatrix) else DistortionMatrix(d)


def _check_x(size_x: int, d: DistortionMatrix):
    if d.shape[0] != size_x:
        raise AlphabetMismatchError(f"source alphabet has {size_x} letters, distortion has {d.shape[0]} rows")


def delta_min(p_xy, d, return_witness: bool = False):
    """Smallest E d(X, xhat(Y)) over deterministic maps xhat(y).

    Exact (a Fraction) when both inputs are rational. With ``return_witness``
    the per-y minimizing reproduction letters are returned as well.
    """
    p_xy, d = _as_joint(p_xy), _as_distortion(d)
    _check_x(p_xy.shape[0], d)
    if p_xy.is_exact and d.is_exact:
        cost = np.array([[sum((p_xy.exact[:, y] * d.exact[:, h]).tolist(), Fraction(0))
                          for h in range(d.shape[1])] for y in range(p_xy.shape[1])], dtype=object)
        witness = np.array([min(range(d.shape[1]), key=lambda h: cost[y, h]) for y in range(cost.shape[0])])
        value = sum((cost[y, witness[y]] for y in range(cost.shape[0])), Fraction(0))
    else:
        cost = p_xy.mass.T @ d.values  # (Y, Xhat)
        witness = np.argmin(cost, axis=1)
        value = float(cost[np.arange(cost.shape[0]), witness].sum())
    return (value, witness) if return_witness else value


def distortion_floor(q_x, d) -> float:
    """Smallest E d(X, Xhat) when the reproduction may depend on X itself."""
    q = _as_pmf(q_x).mass
    return float(q @ _as_distortion(d).values.min(axis=1))


def _check_feasible(delta: float, floor: float, what: str):
    if delta < float(floor) - 1e-12:
        raise InfeasibleError(f"{what}: distortion {delta} is below the feasible floor {float(floor)}")


def standard_rd(q_x, d, delta: float, tol: float = _ba.DEFAULT_TOL, max_iter: int = _ba.DEFAULT_MAX_ITER,
                value_tol: float = 1e-11) -> RdResult:
    """R(Q_X, delta) = min I(X; Xhat) subject to E d <= delta."""
    q, d = _as_pmf(q_x), _as_distortion(d)
    _check_x(q.size, d)
    _check_feasible(delta, distortion_floor(q, d), "standard_rd")
    sol = _ba.solve_constrained(q.mass[None, :], d.values, float(delta), rho=0.0, tol=tol, max_iter=max_iter,
                                value_tol=value_tol)
    kernel = ConditionalPmf(sol.kernel[0], (q.alphabet,), d.xhat_alphabet)
    rate = mutual_information_array(q.mass[:, None] * kernel.rows)
    return RdResult(rate, kernel, sol.distortion, sol.iterations, sol.converged, {"lam": sol.lam})


def remote_distortion_measure(p_xy, d) -> DistortionMatrix:
    """d~(y, xhat) = E[d(X, xhat) | Y = y], over the y letters with positive mass."""
    p_xy, d = _as_joint(p_xy), _as_distortion(d)
    _check_x(p_xy.shape[0], d)
    if p_xy.is_exact and d.is_exact:
        p = p_xy.exact
        p_y = p.sum(axis=0)
        keep = [y for y in range(p.shape[1]) if p_y[y] != 0]
        vals = [[sum((p[:, y] * d.exact[:, h]).tolist(), Fraction(0)) / p_y[y] for h in range(d.shape[1])]
                for y in keep]
        return DistortionMatrix(vals)
    p = p_xy.mass
    p_y = p.sum(axis=0)
    keep = p_y > 0
    return DistortionMatrix((p[:, keep] / p_y[keep]).T @ d.values)


def remote_rd(p_xy, d, delta: float, tol: float = _ba.DEFAULT_TOL, cross_check: bool = True) -> RdResult:
    """R_r(P_XY, delta) = min over Q(xhat|y) of I(Y; Xhat) subject to E d(X, Xhat) <= delta.

    Solved as the standard problem for P_Y under d~. With ``cross_check`` the
    direct conic program in Q(xhat|y) is also solved and both values are
    recorded in ``diagnostics``. The reduction path is reported because its
    kernel meets the constraint by construction.
    """
    p_xy, d = _as_joint(p_xy), _as_distortion(d)
    _check_x(p_xy.shape[0], d)
    _check_feasible(delta, delta_min(p_xy, d), "remote_rd")
    p = p_xy.mass
    p_y = p.sum(axis=0)
    keep = np.flatnonzero(p_y > 0)
    dt = (p[:, keep] / p_y[keep]).T @ d.values
    sol = _ba.solve_constrained(p_y[keep][None, :], dt, float(delta), rho=0.0, tol=tol)
    w_ba = sol.kernel[0]
    rate_ba = mutual_information_array(p_y[keep][:, None] * w_ba)
    diag = {"rate_reduction": rate_ba, "lam": sol.lam}
    if cross_check:
        w_cvx, status = _convex.remote_rd_kernel(p_y[keep], dt, float(delta))
        diag["direct_status"] = status
        if w_cvx is not None:
            rate_cvx = mutual_information_array(p_y[keep][:, None] * w_cvx)
            diag["rate_direct"] = rate_cvx
            diag["distortion_direct"] = float(np.sum(p_y[keep][:, None] * w_cvx * dt))
            diag["agreement"] = abs(rate_cvx - rate_ba)
    full = np.zeros((p.shape[1], d.shape[1]))
    full[:, int(np.argmin(d.values.sum(axis=0)))] = 1.0  # rows for y of zero mass
    full[keep] = w_ba
    kernel = ConditionalPmf(full, (p_xy.alphabets[1],), d.xhat_alphabet)
    return RdResult(rate_ba, kernel, sol.distortion, sol.iterations, sol.converged, diag)


def conditional_rd(q_xy, d, delta: float, tol: float = _ba.DEFAULT_TOL) -> RdResult:
    """R_c(Q_XY, delta) = min over Q(xhat|x,y) of I(X; Xhat | Y) subject to E d <= delta.

    One multiplier is shared by the per-y subproblems and bisected until the
    total distortion meets delta. The kernel has shape (X, Y, Xhat).
    """
    q_xy, d = _as_joint(q_xy), _as_distortion(d)
    _check_x(q_xy.shape[0], d)
    q = q_xy.mass
    _check_feasible(delta, distortion_floor(q.sum(axis=1), d), "conditional_rd")
    sol = _ba.solve_constrained(q.T, d.values, float(delta), rho=0.0, tol=tol)
    w = np.transpose(sol.kernel, (1, 0, 2))
    kernel = ConditionalPmf(w, q_xy.alphabets, d.xhat_alphabet)
    i_c, _ = _ba.split_objective(q.T, sol.kernel)
    return RdResult(i_c, kernel, sol.distortion, sol.iterations, sol.converged, {"lam": sol.lam})
