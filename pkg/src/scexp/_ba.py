"""Alternating-minimization engine shared by the rate-distortion solvers.

For a weight array ``q[c, x]`` (conditioning cell ``c``, source letter ``x``)
and a kernel ``W(xhat | c, x)`` the engine minimizes

    I(X; Xhat | C) + rho * I(C; Xhat) + lam * E d(X, Xhat)

with rho in [0, 1]. Writing the objective as
``sum q W log W / (r(xhat|c)^(1-rho) s(xhat)^rho) + lam E d`` makes it jointly
convex in (W, r, s) and every block update closed-form:

    W  ∝ r^(1-rho) s^rho 2^(-lam d),   r = W's cell marginal,   s = W's marginal.

A single cell with rho = 0 is the classic Blahut-Arimoto iteration for the
standard rate-distortion function. ``lam = inf`` restricts W to the per-letter
minimizers of d, the endpoint of the distortion-rate trade-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .probability import LN2, cmi_array, mutual_information_array

DEFAULT_TOL = 1e-14
DEFAULT_MAX_ITER = 100_000
# warm starts are floored here so that columns can regrow at smaller lam
_LOG_FLOOR = -700.0
_WARM_MIX = 1e-3


@njit(cache=True)
def _iterate(q, dd, dist, lam, rho, logr, logs, tol, max_iter):
    C, X = q.shape
    H = dd.shape[1]
    qc = q.sum(axis=1)
    w = np.empty((C, X, H))
    jc = np.empty((C, H))
    prev = np.inf
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        for c in range(C):
            for x in range(X):
                m = -np.inf
                for h in range(H):
                    if rho == 0.0:
                        a = logr[c, h]
                    elif rho == 1.0:
                        a = logs[h]
                    else:
                        a = (1.0 - rho) * logr[c, h] + rho * logs[h]
                    if np.isinf(lam):
                        t = 0.0 if dd[x, h] == 0.0 else -np.inf
                    else:
                        t = -lam * LN2 * dd[x, h]
                    v = a + t
                    w[c, x, h] = v
                    if v > m:
                        m = v
                if m == -np.inf:
                    # zero-mass letter whose allowed columns all died: any row will do
                    for h in range(H):
                        w[c, x, h] = 0.0 if dd[x, h] > 0.0 else 1.0
                    m = 0.0
                tot = 0.0
                for h in range(H):
                    if w[c, x, h] == -np.inf:
                        e = 0.0
                    else:
                        e = np.exp(w[c, x, h] - m)
                    w[c, x, h] = e
                    tot += e
                for h in range(H):
                    w[c, x, h] /= tot
        for h in range(H):
            sh = 0.0
            for c in range(C):
                v = 0.0
                for x in range(X):
                    v += q[c, x] * w[c, x, h]
                jc[c, h] = v
                sh += v
            logs[h] = np.log(sh) if sh > 0.0 else -np.inf
        for c in range(C):
            for h in range(H):
                if qc[c] > 0.0:
                    logr[c, h] = np.log(jc[c, h] / qc[c]) if jc[c, h] > 0.0 else -np.inf
                else:
                    logr[c, h] = logs[h]
        # Lagrangian at the updated (W, r, s)
        val = 0.0
        for c in range(C):
            for x in range(X):
                for h in range(H):
                    wv = w[c, x, h]
                    if wv > 0.0 and q[c, x] > 0.0:
                        val += q[c, x] * wv * (np.log(wv) / LN2 + (0.0 if np.isinf(lam) else lam * dist[x, h]))
        for c in range(C):
            for h in range(H):
                if jc[c, h] > 0.0:
                    if rho != 1.0:
                        val -= (1.0 - rho) * jc[c, h] * logr[c, h] / LN2
                    if rho != 0.0:
                        val -= rho * jc[c, h] * logs[h] / LN2
        if abs(prev - val) <= tol * (1.0 + abs(val)):
            converged = True
            break
        prev = val
    return w, it, converged, val


@dataclass
class KernelSolution:
    """Kernel W[c, x, xhat] minimizing the penalized objective at one multiplier."""
    kernel: np.ndarray
    lam: float
    distortion: float
    objective: float  # I(X;Xhat|C) + rho I(C;Xhat), without the distortion penalty
    iterations: int
    converged: bool
    logr: np.ndarray
    logs: np.ndarray


def split_objective(q: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """(I(X; Xhat | C), I(C; Xhat)) for weights q[c, x] and kernel w[c, x, xhat]."""
    j = q[:, :, None] * w  # (C, X, H)
    i_c = cmi_array(np.transpose(j, (1, 0, 2)))
    i_y = mutual_information_array(j.sum(axis=1))
    return i_c, i_y


def _distortion(q, w, d):
    return float(np.einsum("cx,cxh,xh->", q, w, d))


def solve_lagrangian(q, d, lam, rho=0.0, init=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> KernelSolution:
    """Minimize I(X;Xhat|C) + rho I(C;Xhat) + lam E d for one multiplier ``lam``."""
    q = np.ascontiguousarray(q, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    C, _ = q.shape
    H = d.shape[1]
    dd = d - d.min(axis=1, keepdims=True)
    if init is None:
        logr = np.full((C, H), -np.log(H))
        logs = np.full(H, -np.log(H))
    else:
        # blend with uniform: letters the warm start has emptied would otherwise
        # take thousands of steps to regrow and stall the stopping rule
        logr = np.log((1 - _WARM_MIX) * np.exp(np.maximum(init[0], _LOG_FLOOR)) + _WARM_MIX / H)
        logs = np.log((1 - _WARM_MIX) * np.exp(np.maximum(init[1], _LOG_FLOOR)) + _WARM_MIX / H)
    w, it, conv, val = _iterate(q, dd, d, float(lam), float(rho), logr.copy(), logs.copy(), tol, max_iter)
    # the engine leaves r, s one half-step behind the returned W; recompute from W
    j = np.einsum("cx,cxh->ch", q, w)
    s = j.sum(axis=0)
    qc = q.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(s)
        logr = np.where(qc[:, None] > 0, np.log(j / np.where(qc > 0, qc, 1.0)[:, None]), logs[None, :])
    dist = _distortion(q, w, d)
    # the loop's last Lagrangian is evaluated at the marginals of W, so it is exact
    obj = val if np.isinf(lam) else val - lam * dist
    return KernelSolution(w, float(lam), dist, max(obj, 0.0), it, conv, logr, logs)


def zero_objective_kernel(q, d, rho=0.0) -> np.ndarray:
    """Least-distortion kernel among those with zero objective.

    With rho = 0 and several cells the kernel may depend on the cell;
    otherwise it must be a constant reproduction letter.
    """
    q = np.asarray(q, dtype=float)
    C, X = q.shape
    H = d.shape[1]
    w = np.zeros((C, X, H))
    if rho == 0.0:
        cost = q @ d  # (C, H)
        for c in range(C):
            w[c, :, int(np.argmin(cost[c]))] = 1.0
    else:
        cost = q.sum(axis=0) @ d
        w[:, :, int(np.argmin(cost))] = 1.0
    return w


def distortion_floor(q, d) -> float:
    """Smallest achievable E d when the kernel sees the source letter."""
    return float(np.sum(np.asarray(q).sum(axis=0) * np.asarray(d).min(axis=1)))


@dataclass
class ConstrainedSolution:
    kernel: np.ndarray
    objective: float
    i_c: float
    i_y: float
    distortion: float
    lam: float
    iterations: int
    converged: bool


def _mix(q, d, rho, lo: KernelSolution, hi: KernelSolution, delta) -> ConstrainedSolution:
    # lo violates the constraint, hi meets it; mix so E d hits delta exactly.
    # the objective is convex in W, so the mixture lies below the chord.
    if lo.distortion - hi.distortion <= 0:
        theta = 0.0
    else:
        theta = min(max((delta - hi.distortion) / (lo.distortion - hi.distortion), 0.0), 1.0)
    w = theta * lo.kernel + (1.0 - theta) * hi.kernel
    i_c, i_y = split_objective(q, w)
    lam = hi.lam if theta == 0.0 else lo.lam if theta == 1.0 else 0.5 * (lo.lam + hi.lam)
    return ConstrainedSolution(w, i_c + rho * i_y, i_c, i_y, _distortion(q, w, d), lam,
                               lo.iterations + hi.iterations, lo.converged and hi.converged)


def solve_constrained(q, d, delta, rho=0.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                      max_steps=80, value_tol=1e-11) -> ConstrainedSolution:
    """Minimize I(X;Xhat|C) + rho I(C;Xhat) subject to E d <= delta.

    The multiplier is searched on t = lam / (scale + lam) in (0, 1), so the
    bracket always contains the exact endpoints lam = 0 (zero-objective
    kernel) and lam = inf (letterwise-minimal distortion). Each Lagrangian
    solution gives a supporting line of the convex trade-off curve, so the
    optimum at ``delta`` is sandwiched between the best supporting line and
    the chord through the bracket. The search (Illinois regula falsi with
    bisection safeguards) stops once that sandwich is narrower than
    ``value_tol``; the returned kernel is the chord mixture meeting ``delta``
    with equality.
    Raises ValueError when ``delta`` is below the distortion floor.
    """
    q = np.ascontiguousarray(q, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    floor = distortion_floor(q, d)
    if delta < floor - 1e-12:
        raise ValueError(f"distortion {delta} below floor {floor}")
    w0 = zero_objective_kernel(q, d, rho)
    d0 = _distortion(q, w0, d)
    if d0 <= delta:
        i_c, i_y = split_objective(q, w0)
        return ConstrainedSolution(w0, i_c + rho * i_y, i_c, i_y, d0, 0.0, 0, True)

    hi = solve_lagrangian(q, d, np.inf, rho, tol=tol, max_iter=max_iter)
    if hi.distortion >= delta - 1e-15:
        return ConstrainedSolution(hi.kernel, hi.objective, *split_objective(q, hi.kernel),
                                   hi.distortion, np.inf, hi.iterations, hi.converged)
    i_c0, i_y0 = split_objective(q, w0)
    lo = KernelSolution(w0, 0.0, d0, i_c0 + rho * i_y0, 0, True, None, None)

    gaps = np.abs(d[:, :, None] - d[:, None, :])
    scale = 1.0 / gaps[gaps > 0].min() if np.any(gaps > 0) else 1.0
    t_lo, t_hi = 0.0, 1.0
    f_lo, f_hi = d0 - delta, hi.distortion - delta  # f_lo > 0 >= f_hi
    side = 0
    total_iter = hi.iterations
    converged = hi.converged
    lower = 0.0
    for step in range(max_steps):
        width = t_hi - t_lo
        if step % 3 == 2 or f_lo - f_hi <= 0:
            t = t_lo + 0.5 * width
        else:
            t = t_lo + width * f_lo / (f_lo - f_hi)
            t = min(max(t, t_lo + 1e-3 * width), t_hi - 1e-3 * width)
        lam = scale * t / (1.0 - t)
        # never warm-start from an endpoint: their output marginals have empty
        # letters, and BA creeps back from those so slowly it looks converged
        near = lo if (t - t_lo) < (t_hi - t) else hi
        far = hi if near is lo else lo
        start = next((c for c in (near, far) if c.logr is not None and np.isfinite(c.lam)), None)
        init = None if start is None else (start.logr, start.logs)
        sol = solve_lagrangian(q, d, lam, rho, init=init, tol=tol, max_iter=max_iter)
        total_iter += sol.iterations
        converged = converged and sol.converged
        lower = max(lower, sol.objective + lam * (sol.distortion - delta))
        if sol.distortion > delta:
            lo, t_lo, f_lo = sol, t, sol.distortion - delta
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, t_hi, f_hi = sol, t, sol.distortion - delta
            if side == 1:
                f_lo *= 0.5
            side = 1
        if lo.distortion - hi.distortion <= 0:
            break
        theta = (delta - hi.distortion) / (lo.distortion - hi.distortion)
        chord = theta * lo.objective + (1 - theta) * hi.objective
        if chord - lower <= value_tol or lo.distortion - hi.distortion < 1e-15:
            break
    out = _mix(q, d, rho, lo, hi, delta)
    out.iterations = total_iter
    out.converged = converged
    return out
