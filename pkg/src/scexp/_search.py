"""Global search over a probability simplex: type grid, pairwise moves, polish.

The outer objectives minimized here are convex in the distribution, so the
grid only has to land in the right basin; the refinement stages then drive
the value down to solver accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize


def compositions(k: int, m: int):
    """All vectors of m nonnegative integers summing to k, first entry descending."""
    if m == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in compositions(k - first, m - 1):
            yield (first,) + rest


@dataclass
class SearchResult:
    point: np.ndarray
    value: float
    grid_points: int
    evaluations: int
    refine_steps: int


def minimize_on_simplex(f, support: np.ndarray, k: int, refine_steps: int = 200,
                        min_step: float = 1e-9, polish: bool = True, seeds: int = 1,
                        extra_starts=()) -> SearchResult:
    """Minimize ``f`` over distributions supported on the True cells of ``support``.

    ``f`` takes an array with the shape of ``support`` and may return ``inf``.
    """
    shape = support.shape
    idx = np.flatnonzero(support.ravel())
    m = len(idx)
    cache: dict[bytes, float] = {}
    evals = 0

    def embed(v):
        out = np.zeros(support.size)
        out[idx] = v
        return out.reshape(shape)

    def fv(v):
        nonlocal evals
        key = np.round(v, 14).tobytes()
        if key not in cache:
            evals += 1
            cache[key] = float(f(embed(v)))
        return cache[key]

    if m == 1:
        v = np.ones(1)
        return SearchResult(embed(v), fv(v), 1, evals, 0)

    pts = [np.array(c, dtype=float) / k for c in compositions(k, m)]
    pts += [np.asarray(s, dtype=float).ravel()[idx] / np.asarray(s, dtype=float).ravel()[idx].sum()
            for s in extra_starts]
    vals = np.array([fv(p) for p in pts])
    n_grid = len(pts)
    order = np.argsort(vals, kind="stable")
    best_v, best_x = np.inf, None
    steps = 0
    for i in order[:seeds]:
        if not np.isfinite(vals[i]):
            continue
        x, fx = pts[i].copy(), vals[i]
        h = 1.0 / k
        while h >= min_step and steps < refine_steps:
            steps += 1
            improved = False
            for a, b in combinations(range(m), 2):
                for src, dst in ((a, b), (b, a)):
                    t = min(h, x[src])
                    if t <= 0:
                        continue
                    y = x.copy()
                    y[src] -= t
                    y[dst] += t
                    fy = fv(y)
                    if fy < fx:
                        x, fx, improved = y, fy, True
            if not improved:
                h /= 2
        if polish:
            x, fx = _polish(fv, x, fx, 1.0 / k)
        if fx < best_v:
            best_v, best_x = fx, x
    if best_x is None:
        best_x = pts[order[0]]
        best_v = vals[order[0]]
    return SearchResult(embed(best_x), best_v, n_grid, evals, steps)


def _polish(fv, x, fx, scale, restarts=6):
    """Nelder-Mead in barycentric offsets, restarted until it stops improving.

    Restarts matter on the kinks of |a|^+ where a single run collapses early.
    """
    m = len(x)
    step = max(min(scale, 1e-3), 1e-6)
    for _ in range(restarts):
        base = x.copy()

        def proj(z, base=base):
            y = base.copy()
            y[:-1] += z
            y[-1] -= z.sum()
            return y

        def g(z, proj=proj):
            y = proj(z)
            if np.any(y < 0):
                return np.inf
            return fv(y)

        z0 = np.zeros(m - 1)
        simplex = [z0] + [z0 + step * e for e in np.eye(m - 1)]
        # feasible simplex: move away from the boundary if a vertex is outside
        simplex = [z if np.all(proj(z) >= 0) else -z for z in simplex]
        res = minimize(g, z0, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-14, "maxiter": 400 * m,
                                "initial_simplex": simplex})
        if not (np.isfinite(res.fun) and res.fun < fx - 1e-15):
            break
        x, fx = proj(res.x), float(res.fun)
        step = max(step / 4, 1e-7)
    return x, fx
