"""Strong converse exponent of remote lossy source coding.

    E(Q, R, delta) = min_{W: E d <= delta} I(X; Xhat | Y) + |I(Y; Xhat) - R|^+
    E(R, delta)    = min_Q D(Q || P) + E(Q, R, delta)

The objective D(Q || P) + I(X;Xhat|Y) + |I(Y;Xhat) - R|^+ is jointly convex in
the joint distribution J = Q W of (X, Y, Xhat). The default solver therefore
solves one conic program over J and certifies the value with the Lagrange
dual (see ``_dual``); the reported ``gap`` is primal value minus dual bound.
The grid method searches over Q on a type grid, refines locally and calls the
inner solver at every point.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from . import _ba, _convex, _dual
from ._search import minimize_on_simplex
from .errors import AlphabetMismatchError, InfeasibleError
from .probability import (
    ConditionalPmf,
    DistortionMatrix,
    JointPmf,
    Pmf,
    cmi_array,
    kl_array,
    mutual_information_array,
)
from .rd import conditional_rd, delta_min, distortion_floor, remote_rd, standard_rd

INF = math.inf
# distortion overshoot tolerated from the conic solver
DIST_TOL = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    method: str = "convex"  # "convex" or "grid"
    grid_k: int = 24
    rho_steps: int = 65
    inner_tol: float = 1e-6
    gap_target: float = 1e-6
    refine_steps: int = 200
    workers: int = 1
    budget: int = 10**8

    def __post_init__(self):
        if self.method not in ("convex", "grid"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.grid_k < 2:
            raise ValueError("grid_k must be at least 2")
        if self.rho_steps < 2:
            raise ValueError("rho_steps must be at least 2")
        if self.inner_tol <= 0 or self.gap_target <= 0:
            raise ValueError("tolerances must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class ExponentResult:
    value: float
    witness_q_xy: JointPmf | None
    witness_kernel: ConditionalPmf | None
    rho_star: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.diagnostics.get("gap", 0.0)


# ---------------------------------------------------------------------------
# helpers

def _arrays(p_xy, d):
    p = p_xy.mass if isinstance(p_xy, JointPmf) else np.asarray(p_xy, dtype=float)
    dm = d.values if isinstance(d, DistortionMatrix) else np.asarray(d, dtype=float)
    if p.ndim != 2:
        raise ValueError("expected a joint over (X, Y)")
    if dm.shape[0] != p.shape[0]:
        raise AlphabetMismatchError(f"source alphabet has {p.shape[0]} letters, distortion has {dm.shape[0]} rows")
    return p, dm


def objective_terms(j: np.ndarray, p_xy: np.ndarray, rate: float) -> dict:
    """D(Q||P), I(X;Xhat|Y), I(Y;Xhat) and the exponent objective for J(x, y, xhat)."""
    q = j.sum(axis=2)
    div = max(float(kl_array(q, p_xy)), 0.0)
    i_c = cmi_array(j)
    i_y = mutual_information_array(j.sum(axis=0))
    inner = i_c + max(i_y - rate, 0.0)
    return {"divergence": div, "i_c": i_c, "i_y": i_y, "inner": inner, "value": div + inner}


def _kernel_from_joint(j: np.ndarray, d: np.ndarray) -> np.ndarray:
    q = j.sum(axis=2, keepdims=True)
    fallback = np.zeros_like(j)
    fallback[np.arange(j.shape[0]), :, np.argmin(d, axis=1)] = 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(q > 0, j / np.where(q > 0, q, 1.0), fallback)


def _letterwise_kernel(shape, d):
    w = np.zeros(shape)
    w[np.arange(shape[0]), :, np.argmin(d, axis=1)] = 1.0
    return w


def _distortion(j, d):
    return float(np.einsum("xyh,xh->", j, d))


def _pack(q, w, p_alph, d_alph):
    return JointPmf(q, p_alph), ConditionalPmf(w, p_alph, d_alph)


def _alphs(p_xy, d):
    pa = p_xy.alphabets if isinstance(p_xy, JointPmf) else None
    da = d.xhat_alphabet if isinstance(d, DistortionMatrix) else None
    return pa, da


# ---------------------------------------------------------------------------
# inner exponent

def _rho_form(q_xy, d, rate, delta, rho_steps):
    """max over rho of min_W [I_c + rho I_y] - rho R, on a grid plus golden refinement."""
    q_cells = np.ascontiguousarray(q_xy.T)
    cache = {}

    def g(rho):
        rho = float(rho)
        if rho not in cache:
            sol = _ba.solve_constrained(q_cells, d, delta, rho=rho)
            cache[rho] = (sol.objective - rho * rate, sol)
        return cache[rho][0]

    grid = np.linspace(0.0, 1.0, rho_steps)
    vals = np.array([g(r) for r in grid])
    i = int(np.argmax(vals))
    best_rho, best = grid[i], vals[i]
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, rho_steps - 1)]
    if hi > lo:
        res = minimize_scalar(lambda r: -g(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
        if -res.fun > best:
            best_rho, best = float(res.x), -res.fun
    return best, best_rho, cache[float(best_rho)][1]


def inner_exponent(q_xy, rate: float, delta: float, d, rho_steps: int = 65, validate: bool = True) -> ExponentResult:
    """E(Q, R, delta) for a fixed joint Q over (X, Y).

    The value comes from a direct conic solve of the positive-part objective.
    With ``validate`` the rho-form max_rho min_W [I_c + rho (I_y - R)] is also
    solved by alternating minimization; ``rho_star`` is its maximizer and the
    gap is the disagreement between the two paths.
    """
    q, dm = _arrays(q_xy, d)
    pa, da = _alphs(q_xy, d)
    floor = distortion_floor(q.sum(axis=1), dm)
    if delta < floor - 1e-12:
        return ExponentResult(INF, JointPmf(q, pa), None, float("nan"), {"infeasible": True, "floor": floor})
    shape = q.shape + (dm.shape[1],)
    w, status = _convex.inner_kernel(q, dm, rate, delta)
    diag = {"direct_status": status}
    if w is not None:
        j = q[:, :, None] * w
        dist = _distortion(j, dm)
        if dist > delta + DIST_TOL and floor < delta:
            # pull back into the constraint set along the chord to the letterwise kernel
            w0 = _letterwise_kernel(shape, dm)
            theta = (dist - delta) / max(dist - floor, 1e-300)
            w = (1 - theta) * w + theta * w0
    value_direct = INF
    if w is not None:
        t = objective_terms(q[:, :, None] * w, q, rate)
        value_direct = t["inner"]
        diag.update(i_c=t["i_c"], i_y=t["i_y"])
    rho_star = float("nan")
    if validate or w is None:
        value_rho, rho_star, sol = _rho_form(q, dm, rate, delta, rho_steps)
        diag["value_rho_form"] = value_rho
        if w is None:
            w = np.transpose(sol.kernel, (1, 0, 2))
            t = objective_terms(q[:, :, None] * w, q, rate)
            value_direct = t["inner"]
            diag.update(i_c=t["i_c"], i_y=t["i_y"])
        diag["gap"] = abs(value_direct - value_rho)
    diag["distortion"] = _distortion(q[:, :, None] * w, dm)
    qj, wk = _pack(q, w, pa, da)
    return ExponentResult(value_direct, qj, wk, rho_star, diag)


# ---------------------------------------------------------------------------
# full exponent

def _below_threshold_witness(p, dm, rate, delta):
    """Witness Q = P with the remote-RD kernel; zero objective when R >= R_r."""
    rr = remote_rd(p, dm, delta, cross_check=False)
    w = np.broadcast_to(rr.achieving_kernel.rows[None, :, :], p.shape + (dm.shape[1],)).copy()
    return rr.rate, w


def _feasible_mix(j, j0, dm, delta):
    dist = _distortion(j, dm)
    d0 = _distortion(j0, dm)
    # conic-solver residue is accepted as is; mixing toward j0 only helps when
    # j0 sits strictly inside (at delta = delta_min it does not)
    if dist <= delta + DIST_TOL or d0 >= delta:
        return j
    theta = (dist - delta) / max(dist - d0, 1e-300)
    return (1 - theta) * j + theta * j0


def exponent(p_xy, rate: float, delta: float, d, opts: SolverOptions | None = None) -> ExponentResult:
    """E(R, delta) = min over Q of D(Q || P) + E(Q, R, delta)."""
    opts = opts or SolverOptions()
    p, dm = _arrays(p_xy, d)
    pa, da = _alphs(p_xy, d)
    dmin, wit = delta_min(p, dm, return_witness=True)
    if delta < dmin - 1e-12:
        raise InfeasibleError(f"distortion {delta} is below delta_min {dmin}")
    shape = p.shape + (dm.shape[1],)

    r_r, w_r = _below_threshold_witness(p, dm, rate, delta)
    if rate >= r_r:
        q, w = _pack(p, w_r, pa, da)
        t = objective_terms(p[:, :, None] * w_r, p, rate)
        # Q = P and a kernel reading only y: D = 0, I(X;Xhat|Y) = 0 and I(Y;Xhat) = R_r <= R,
        # so the value is exactly zero; t keeps the rounding residue for inspection
        return ExponentResult(0.0, q, w, 0.0,
                              {"method": "threshold", "gap": 0.0, "lower_bound": 0.0,
                               "threshold": r_r, **t, "value": 0.0})

    # Q = P with a deterministic delta_min map is always feasible
    j0 = np.zeros(shape)
    j0[:, np.arange(p.shape[1]), wit] = p
    if opts.method == "convex":
        return _exponent_convex(p, dm, rate, delta, opts, j0, w_r, pa, da)
    return _exponent_grid(p, dm, rate, delta, opts, w_r, pa, da)


def _certify(p, dm, rate, delta, value, rho, lam, s0, opts):
    lb = _dual.bound(p, dm, rate, delta, rho, lam, s0)
    polished = False
    if value - lb > opts.gap_target:
        lb2, rho2, lam2 = _dual.maximize(p, dm, rate, delta, start=(rho, lam))
        polished = True
        if lb2 > lb:
            lb, rho, lam = lb2, rho2, lam2
    return lb, rho, lam, polished


def _exponent_convex(p, dm, rate, delta, opts, j0, w_r, pa, da):
    j, rho, lam, status = _convex.joint_exponent(p, dm, rate, delta)
    candidates = [p[:, :, None] * w_r]
    if j is not None:
        candidates.insert(0, _feasible_mix(j, j0, dm, delta))
    scored = [(objective_terms(c, p, rate), c) for c in candidates]
    t, jbest = min(scored, key=lambda s: s[0]["value"])
    value = t["value"]
    lb, rho, lam, polished = _certify(p, dm, rate, delta, value, rho, lam, jbest.sum(axis=(0, 1)), opts)
    q = jbest.sum(axis=2)
    w = _kernel_from_joint(jbest, dm)
    qj, wk = _pack(q, w, pa, da)
    diag = {"method": "convex", "status": status, "lower_bound": lb, "lam": lam,
            "gap": max(value - max(lb, 0.0), 0.0), "dual_polished": polished,
            "distortion": _distortion(jbest, dm), **t}
    return ExponentResult(value, qj, wk, rho, diag)


def _exponent_grid(p, dm, rate, delta, opts, w_r, pa, da):
    support = p > 0

    def phi(q):
        div = float(kl_array(q, p))
        if not np.isfinite(div):
            return INF
        return div + inner_exponent(q, rate, delta, dm, validate=False).value

    res = minimize_on_simplex(phi, support, opts.grid_k, refine_steps=opts.refine_steps, extra_starts=[p])
    inner = inner_exponent(res.point, rate, delta, dm, validate=False)
    w = inner.witness_kernel.rows
    j = res.point[:, :, None] * w
    t = objective_terms(j, p, rate)
    # the P-witness from the remote-RD kernel is also a candidate
    tr = objective_terms(p[:, :, None] * w_r, p, rate)
    if tr["value"] < t["value"]:
        t, j, w = tr, p[:, :, None] * w_r, w_r
    value = t["value"]
    lb, rho, lam = _dual.maximize(p, dm, rate, delta)
    qj, wk = _pack(j.sum(axis=2), w, pa, da)
    diag = {"method": "grid", "grid_k": opts.grid_k, "grid_points": res.grid_points,
            "evaluations": res.evaluations, "refine_steps": res.refine_steps, "lower_bound": lb,
            "lam": lam, "gap": max(value - max(lb, 0.0), 0.0), "distortion": _distortion(j, dm), **t}
    return ExponentResult(value, qj, wk, rho, diag)


# ---------------------------------------------------------------------------
# reductions

def exponent_no_compression(p_xy, delta: float, d, opts: SolverOptions | None = None) -> ExponentResult:
    """min over Q of D(Q || P) + R_c(Q, delta), the exponent for R >= log2 |Xhat|."""
    opts = opts or SolverOptions()
    p, dm = _arrays(p_xy, d)
    pa, da = _alphs(p_xy, d)
    dmin = delta_min(p, dm)
    if delta < dmin - 1e-12:
        raise InfeasibleError(f"distortion {delta} is below delta_min {dmin}")
    # delta >= delta_min means a kernel reading only y meets delta, so R_c(P, delta) = 0
    # and Q = P is optimal; the search below only runs if the solver disagrees
    rc0 = conditional_rd(p, dm, delta)
    if rc0.rate <= opts.inner_tol:
        qj, wk = _pack(p, rc0.achieving_kernel.rows, pa, da)
        diag = {"method": "closed-form", "lower_bound": 0.0, "gap": rc0.rate,
                "conditional_rate": rc0.rate, "distortion": rc0.achieved_distortion}
        return ExponentResult(rc0.rate, qj, wk, 0.0, diag)
    xfloor = dm.min(axis=1)

    def phi(q):
        div = float(kl_array(q, p))
        if not np.isfinite(div) or delta < float(q.sum(axis=1) @ xfloor) - 1e-12:
            return INF
        return div + conditional_rd(q, dm, delta).rate

    res = minimize_on_simplex(phi, p > 0, opts.grid_k, refine_steps=opts.refine_steps, extra_starts=[p])
    rc = conditional_rd(res.point, dm, delta)
    value = max(float(kl_array(res.point, p)), 0.0) + rc.rate
    lb, _, lam = _dual.maximize(p, dm, 0.0, delta, fix_rho=0.0)
    qj, wk = _pack(res.point, rc.achieving_kernel.rows, pa, da)
    diag = {"method": "grid", "grid_k": opts.grid_k, "grid_points": res.grid_points,
            "evaluations": res.evaluations, "refine_steps": res.refine_steps,
            "lower_bound": lb, "lam": lam, "gap": max(value - max(lb, 0.0), 0.0),
            "conditional_rate": rc.rate, "distortion": rc.achieved_distortion}
    return ExponentResult(value, qj, wk, 0.0, diag)


_RD_CACHE: dict = {}


def _cached_standard_rd(q, dm, delta):
    key = (np.round(q, 14).tobytes(), dm.tobytes(), float(delta))
    hit = _RD_CACHE.get(key)
    if hit is None:
        if len(_RD_CACHE) > 200_000:
            _RD_CACHE.clear()
        # search-grade accuracy: near the zero-rate edge BA slows to a crawl, and
        # the reported value is certified by the dual bound anyway
        hit = _RD_CACHE[key] = standard_rd(q, dm, delta, tol=1e-10, max_iter=3000, value_tol=1e-8)
    return hit


def exponent_noiseless(p_x, rate: float, delta: float, d, opts: SolverOptions | None = None) -> ExponentResult:
    """min over Q_X of D(Q_X || P_X) + |R(Q_X, delta) - R|^+, the exponent when Y = X.

    The witness is reported in the general form: a diagonal joint over
    (X, Y) and a kernel that reads X (equivalently Y).
    """
    opts = opts or SolverOptions()
    px = p_x.mass if isinstance(p_x, Pmf) else np.asarray(p_x, dtype=float)
    dm = d.values if isinstance(d, DistortionMatrix) else np.asarray(d, dtype=float)
    if dm.shape[0] != px.size:
        raise AlphabetMismatchError("distortion rows do not match the source alphabet")
    xfloor = dm.min(axis=1)
    if delta < float(px @ xfloor) - 1e-12:
        raise InfeasibleError(f"distortion {delta} is below the floor {float(px @ xfloor)}")

    def phi(q):
        div = float(kl_array(q, px))
        if not np.isfinite(div) or delta < float(q @ xfloor) - 1e-12:
            return INF
        return div + max(_cached_standard_rd(q, dm, delta).rate - rate, 0.0)

    res = minimize_on_simplex(phi, px > 0, opts.grid_k, refine_steps=opts.refine_steps, extra_starts=[px])
    q = res.point
    rd = standard_rd(q, dm, delta)
    value = max(float(kl_array(q, px)), 0.0) + max(rd.rate - rate, 0.0)
    diag_p = np.diag(px)
    lb, rho, lam = _dual.maximize(diag_p, dm, rate, delta)
    n = px.size
    w = np.zeros((n, n, dm.shape[1]))
    for x in range(n):
        w[x, :, :] = rd.achieving_kernel.rows[x]
    qj = JointPmf(np.diag(q))
    wk = ConditionalPmf(w)
    diag = {"method": "grid", "grid_k": opts.grid_k, "grid_points": res.grid_points,
            "evaluations": res.evaluations, "refine_steps": res.refine_steps,
            "lower_bound": lb, "lam": lam, "gap": max(value - max(lb, 0.0), 0.0),
            "rd_rate": rd.rate, "distortion": rd.achieved_distortion}
    return ExponentResult(value, qj, wk, rho, diag)


def positivity_threshold(p_xy, delta: float, d) -> float:
    """The rate R_r(P, delta) below which E(R, delta) > 0."""
    return remote_rd(p_xy, d, delta).rate


def _sweep_point(args):
    p, dm, r, delta, opts = args
    return exponent(p, r, delta, dm, opts)


def sweep_rate(p_xy, delta: float, d, r_grid, opts: SolverOptions | None = None) -> list[tuple[float, ExponentResult]]:
    """exponent at every rate of ``r_grid``; output order matches the input."""
    opts = opts or SolverOptions()
    r_grid = [float(r) for r in r_grid]
    if any(b < a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be sorted ascending")
    jobs = [(p_xy, d, r, delta, replace(opts, workers=1)) for r in r_grid]
    if opts.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as ex:
            results = list(ex.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(a) for a in jobs]
    return list(zip(r_grid, results))


def dual_lower_bound(p_xy, rate: float, delta: float, d, rho: float | None = None, lam: float | None = None) -> float:
    """Certified lower bound on E(R, delta); maximized over (rho, lam) unless both are given."""
    p, dm = _arrays(p_xy, d)
    if rho is not None and lam is not None:
        return _dual.bound(p, dm, rate, delta, rho, lam)
    return _dual.maximize(p, dm, rate, delta)[0]
