"""Lagrange dual of the exponent program, used to certify lower bounds.

For rho in [0, 1] and lam >= 0, weak duality gives

    E(R, delta) >= -rho R - lam delta - log2 Zmax(rho, lam),
    Zmax = max_s sum_y ( sum_xhat s(xhat) A(y, xhat)^(1/rho) )^rho,
    A(y, xhat) = sum_x P(x, y) 2^(-lam d(x, xhat)),

with s ranging over distributions on the reproduction alphabet. The inner
maximization is concave in s. It is solved by alternating closed-form updates,
and the returned value is a Frank-Wolfe upper bound on Zmax, so every bound
produced here is a valid lower bound on the exponent.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.optimize import minimize_scalar

from .probability import LN2

_RHO_EPS = 1e-9


@njit(cache=True)
def _lse(v):
    m = -np.inf
    for a in v:
        if a > m:
            m = a
    if m == -np.inf:
        return m
    t = 0.0
    for a in v:
        t += np.exp(a - m)
    return m + np.log(t)


@njit(cache=True)
def _zmax_loop(la, rho, ls, iters, tol):
    ny, nh = la.shape
    lrs = la / rho
    t = np.empty(ny)
    row = np.empty(nh)
    col = np.empty(ny)
    prev = -np.inf
    f = -np.inf
    for it in range(iters + 1):
        for y in range(ny):
            for h in range(nh):
                row[h] = ls[h] + lrs[y, h]
            t[y] = _lse(row)
        f = _lse(rho * t)
        if it == iters or f - prev <= tol * max(1.0, abs(f)):
            break
        prev = f
        # s <- (sum_y r^(1-rho) A)^(1/(1-rho)) with r(xhat|y) proportional to s A^(1/rho)
        for h in range(nh):
            for y in range(ny):
                col[y] = (1.0 - rho) * (ls[h] + lrs[y, h] - t[y]) + la[y, h]
            row[h] = _lse(col) / (1.0 - rho)
        z = _lse(row)
        for h in range(nh):
            ls[h] = row[h] - z
    # Frank-Wolfe bound: f* <= f(s) + max_h g_h - s.g, and s.g = rho f(s)
    gmax = -np.inf
    for h in range(nh):
        for y in range(ny):
            col[y] = (rho - 1.0) * t[y] + lrs[y, h]
        g = np.log(rho) + _lse(col)
        if g > gmax:
            gmax = g
    return f, gmax


@njit(cache=True)
def _log_a_nb(p_xy, d, lam):
    nx, ny = p_xy.shape
    nh = d.shape[1]
    out = np.empty((ny, nh))
    col = np.empty(nx)
    for y in range(ny):
        for h in range(nh):
            for x in range(nx):
                col[x] = np.log(p_xy[x, y]) - lam * LN2 * d[x, h] if p_xy[x, y] > 0.0 else -np.inf
            out[y, h] = _lse(col)
    return out


@njit(cache=True)
def _log_zmax_nb(la, rho, ls, iters, tol):
    ny, nh = la.shape
    rowmax = np.empty(ny)
    for y in range(ny):
        rowmax[y] = la[y].max()
    # the power mean never exceeds the max, so this bound holds for every rho
    crude = _lse(rowmax)
    if rho <= _RHO_EPS:
        return crude
    if rho >= 1.0 - _RHO_EPS:
        best = -np.inf
        for h in range(nh):
            v = _lse(la[:, h])
            if v > best:
                best = v
        return best
    f, gmax = _zmax_loop(la, rho, ls, iters, tol)
    a = np.log1p(-rho) + f
    m = max(a, gmax)
    ub = m + np.log(np.exp(a - m) + np.exp(gmax - m))
    return min(ub, crude)


def _init_ls(nh, s0):
    if s0 is None:
        return np.full(nh, -np.log(nh))
    s0 = np.clip(np.asarray(s0, dtype=float), 1e-300, None)
    return np.log(s0 / s0.sum())


def log_zmax_upper(p_xy, d, rho, lam, s0=None, iters=300, tol=1e-13):
    """Upper bound on ln Zmax(rho, lam) and the maximizing s found."""
    la = _log_a_nb(np.ascontiguousarray(p_xy, dtype=float), np.ascontiguousarray(d, dtype=float), float(lam))
    ls = _init_ls(la.shape[1], s0)
    lz = _log_zmax_nb(la, float(rho), ls, iters, tol)
    return float(lz), np.exp(ls)


@njit(cache=True)
def _bound_nb(p_xy, d, rate, delta, rho, lam, ls, iters, tol):
    la = _log_a_nb(p_xy, d, lam)
    return -rho * rate - lam * delta - _log_zmax_nb(la, rho, ls, iters, tol) / LN2


def bound(p_xy, d, rate, delta, rho, lam, s0=None, iters=300, tol=1e-13) -> float:
    """Certified lower bound on E(rate, delta) at the multipliers (rho, lam)."""
    rho = min(max(float(rho), 0.0), 1.0)
    lam = max(float(lam), 0.0)
    ls = _init_ls(d.shape[1], s0)
    return float(_bound_nb(p_xy, d, float(rate), float(delta), rho, lam, ls, iters, tol))


def _lam_scale(d):
    gaps = np.abs(np.subtract.outer(d.ravel(), d.ravel()))
    return 1.0 / gaps[gaps > 0].min() if np.any(gaps > 0) else 1.0


def maximize(p_xy, d, rate, delta, start=None, fix_rho=None, u_max=10.0):
    """Maximize the dual over (rho, lam); returns (bound, rho, lam).

    The dual is jointly concave, so a nested pair of bounded scalar searches
    (lam inside, rho outside) finds its maximum. ``start`` is an optional
    guess whose value is kept if the searches do worse. ``fix_rho`` pins rho
    (rho = 0 gives the dual of the uncompressed problem).
    """
    p_xy = np.ascontiguousarray(p_xy, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    scale = _lam_scale(d)

    def best_lam(rho):
        f = lambda u: -bound(p_xy, d, rate, delta, rho, scale * u * u)
        grid = np.linspace(0.0, u_max, 21)
        vals = [f(u) for u in grid]
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if res.fun < vals[i]:
            return -res.fun, scale * res.x ** 2
        return -vals[i], scale * grid[i] ** 2

    if fix_rho is not None:
        val, lam = best_lam(float(fix_rho))
        return val, float(fix_rho), lam

    cache = {}

    def psi(rho):
        rho = float(rho)
        if rho not in cache:
            cache[rho] = best_lam(rho)
        return cache[rho][0]

    grid = np.linspace(0.0, 1.0, 9)
    vals = [psi(r) for r in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda r: -psi(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    rho = float(res.x) if -res.fun > vals[i] else float(grid[i])
    best, lam = cache[rho]
    if start is not None:
        v0 = bound(p_xy, d, rate, delta, start[0], start[1])
        if v0 > best:
            best, rho, lam = v0, float(np.clip(start[0], 0.0, 1.0)), max(float(start[1]), 0.0)
    return best, rho, lam
