"""Ground truth at tiny blocklength: the optimal success probability and an exact
finite-n converse bound.

For a fixed decoder codebook the best encoder sends each y to the codeword
with the largest conditional success probability, so the optimum over
(encoder, decoder) pairs equals the optimum over codebooks of M distinct
reproduction sequences. The search runs over codebooks.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, islice, product

import numpy as np

from .errors import BudgetExceededError, NotRationalError
from .probability import Alphabet, DistortionMatrix, JointPmf, as_fraction
from .types_method import (
    Scheme,
    build_scheme,
    charged_scheme,
    all_sequences,
    compositions,
    conditional_class_size,
    conditional_types,
    enumerate_types,
    evaluate_scheme,
    message_count,
    score_matrices,
    scheme_from_codebook,
    type_class_size,
)

DEFAULT_BUDGET = 10**8
_CHUNK = 4096
# float screening keeps every codebook within this relative margin of the best
_SCREEN = 1e-9


@dataclass
class OracleReport:
    n: int
    M: int
    p_c: Fraction
    exhaustive: bool
    witness: Scheme | None
    converse_bound: Fraction
    scheme_prob: Fraction
    scheme_prob_uncharged: Fraction | None = None
    error: str | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def exponent_estimate(self) -> float:
        return _neg_log_rate(self.p_c, self.n)

    @property
    def bound_capped(self) -> Fraction:
        return min(Fraction(1), self.converse_bound)

    @property
    def bound_exponent(self) -> float:
        """-(1/n) log2 min(1, B(n)); a lower end for the exponent estimate."""
        return _neg_log_rate(self.bound_capped, self.n)

    @property
    def sandwich_holds(self) -> bool:
        return self.scheme_prob <= self.p_c <= self.converse_bound

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "M": self.M,
            "exhaustive": self.exhaustive,
            "p_c": str(self.p_c),
            "scheme_prob": str(self.scheme_prob),
            "scheme_prob_uncharged": None if self.scheme_prob_uncharged is None else str(self.scheme_prob_uncharged),
            "converse_bound": str(self.converse_bound),
            "p_c_float": float(self.p_c),
            "scheme_prob_float": float(self.scheme_prob),
            "converse_bound_float": float(self.converse_bound),
            "exponent_estimate": self.exponent_estimate,
            "error": self.error,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "diagnostics": self.diagnostics,
        }


def _neg_log_rate(p: Fraction, n: int) -> float:
    if p <= 0:
        return math.inf
    # log of a Fraction without overflowing floats
    return -(math.log2(p.numerator) - math.log2(p.denominator)) / n


def _exact_check(p_xy: JointPmf, d: DistortionMatrix):
    if not p_xy.is_exact or not d.is_exact:
        raise NotRationalError("the oracle needs rational P_XY and distortion")


def _undominated(ex: np.ndarray) -> list[int]:
    """Columns not weakly dominated by an earlier column or strictly by a later one."""
    keep = []
    m = ex.shape[1]
    fl = ex.astype(float)
    for j in range(m):
        dominated = False
        for k in range(m):
            if k == j:
                continue
            # float prefilter, then an exact check
            if np.all(fl[:, k] >= fl[:, j] - 1e-300) and all(a >= b for a, b in zip(ex[:, k], ex[:, j])):
                if k < j or any(a > b for a, b in zip(ex[:, k], ex[:, j])):
                    dominated = True
                    break
        if not dominated:
            keep.append(j)
    return keep


def _exact_value(ex: np.ndarray, cols) -> Fraction:
    return sum((max(row) for row in ex[:, list(cols)]), Fraction(0))


def optimal_pc(p_xy: JointPmf, d: DistortionMatrix, delta, n: int, rate: float,
               budget: int = DEFAULT_BUDGET, mode: str = "exhaustive", restarts: int = 8,
               seed: int = 0, start=None) -> OracleReport:
    """Maximal P{ d(X^n, Xhat^n) <= n delta } over codes with M = floor(2^(nR)) messages.

    ``mode`` is "exhaustive" (raise BudgetExceededError beyond ``budget``
    codebooks), "hill-climb" (a certified lower bound from local search) or
    "auto" (exhaustive when affordable). ``start`` is an optional list of
    codewords seeding the local search.
    """
    _exact_check(p_xy, d)
    if mode not in ("exhaustive", "hill-climb", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    M = message_count(n, rate)
    if M < 1:
        raise ValueError(f"rate {rate} gives no messages at n = {n}")
    ny, nh = p_xy.shape[1], d.shape[1]
    ys = all_sequences(n, ny)
    xs = all_sequences(n, nh)
    if len(ys) * len(xs) > 4 * 10**6:
        raise BudgetExceededError(f"score matrix of {len(ys)} x {len(xs)} is too large")
    ex, _ = score_matrices(p_xy, d, delta, n, ys, xs)
    cand = _undominated(ex)
    ex_c = ex[:, cand]
    fl = ex_c.astype(float)
    m = min(M, len(cand))
    count = math.comb(len(cand), m)
    exhaustive = mode == "exhaustive" or (mode == "auto" and count <= budget)
    if mode == "exhaustive" and count > budget:
        raise BudgetExceededError(f"{count} codebooks exceed the budget of {budget}")
    if exhaustive:
        cols = _search_all(fl, ex_c, m)
    else:
        seeds = []
        if start is not None:
            index = {tuple(int(v) for v in xs[c]): i for i, c in enumerate(cand)}
            full = {tuple(int(v) for v in x): j for j, x in enumerate(xs)}
            s0 = []
            for w in start:
                w = tuple(int(v) for v in w)
                j = index.get(w)
                if j is None:
                    # a dominated codeword is replaced by one that dominates it
                    col = ex[:, full[w]]
                    j = next(i for i in range(len(cand)) if all(a >= b for a, b in zip(ex_c[:, i], col)))
                if j not in s0:
                    s0.append(j)
            seeds.append(s0[:m])
        finals = _hill_climb(fl, m, restarts, seed, seeds)
        # the float climb may tie; settle between the local optima exactly
        cols = max((sorted(c) for c in finals), key=lambda c: _exact_value(ex_c, c))
    p_c = _exact_value(ex_c, cols)
    words = [tuple(int(v) for v in xs[cand[j]]) for j in cols]
    witness = scheme_from_codebook(n, M, ny, nh, words, ex_c[:, cols])
    diag = {"codebooks": count if exhaustive else None, "candidates": len(cand), "sequences": len(xs)}
    return OracleReport(n, M, p_c, exhaustive, witness, Fraction(0), Fraction(0), diagnostics=diag)


def _search_all(fl: np.ndarray, ex: np.ndarray, m: int) -> tuple[int, ...]:
    best = -1.0
    keep: list[tuple[float, tuple[int, ...]]] = []
    it = combinations(range(fl.shape[1]), m)
    while True:
        chunk = list(islice(it, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.int64)
        vals = fl[:, idx].max(axis=2).sum(axis=0)
        top = float(vals.max())
        if top > best:
            best = top
            keep = [k for k in keep if k[0] >= best * (1 - _SCREEN)]
        for i in np.flatnonzero(vals >= best * (1 - _SCREEN)):
            keep.append((float(vals[i]), chunk[i]))
    # exact tie-break among the float survivors, first in enumeration order on ties
    best_v, best_c = None, None
    for _, c in keep:
        v = _exact_value(ex, c)
        if best_v is None or v > best_v:
            best_v, best_c = v, c
    return best_c


def _hill_climb(fl: np.ndarray, m: int, restarts: int, seed: int, seeds) -> list[list[int]]:
    rng = np.random.default_rng(seed)
    ncol = fl.shape[1]
    starts = [list(s) for s in seeds]
    # greedy facility-location start, then random ones
    best_cov = np.zeros(fl.shape[0])
    g = []
    for _ in range(m):
        gain = np.maximum(fl, best_cov[:, None]).sum(axis=0)
        gain[g] = -np.inf
        j = int(np.argmax(gain))
        g.append(j)
        best_cov = np.maximum(best_cov, fl[:, j])
    starts.append(g)
    while len(starts) < restarts + len(seeds) + 1:
        starts.append(list(rng.choice(ncol, size=m, replace=False)))
    finals = []
    for s in starts:
        s = list(s)
        while len(s) < m:
            s.append(next(j for j in range(ncol) if j not in s))
        v = fl[:, s].max(axis=1).sum()
        improved = True
        while improved:
            improved = False
            for slot in range(m):
                others = [s[k] for k in range(m) if k != slot]
                base = fl[:, others].max(axis=1) if others else np.zeros(fl.shape[0])
                vals = np.maximum(fl, base[:, None]).sum(axis=0)
                vals[others] = -np.inf
                j = int(np.argmax(vals))
                if vals[j] > v * (1 + 1e-12) + 1e-300:
                    s[slot], v, improved = j, float(vals[j]), True
        finals.append(s)
    return finals


# ---------------------------------------------------------------------------
# converse bound

def _divergence_factor(nxyh, p_x_given_y, nyh) -> Fraction:
    """2^(-n D(V || P_{X|Y} | Q)) for V given by counts N(x, y, h) over N(y, h)."""
    out = Fraction(1)
    for (x, y, h), c in np.ndenumerate(nxyh):
        if c == 0:
            continue
        p = p_x_given_y[y, x]
        if p == 0:
            return Fraction(0)
        out *= (p * Fraction(int(nyh[y, h]), int(c))) ** int(c)
    return out


def _inner_sum(nyh: np.ndarray, p_x_given_y, d_ex, n_delta: Fraction) -> Fraction:
    nx = d_ex.shape[0]
    ny, nh = nyh.shape
    cells = [(y, h) for y in range(ny) for h in range(nh) if nyh[y, h] > 0]
    options = [list(compositions(int(nyh[y, h]), nx)) for (y, h) in cells]
    total = Fraction(0)
    for choice in product(*options):
        nxyh = np.zeros((nx, ny, nh), dtype=np.int64)
        dist = Fraction(0)
        for (y, h), xs in zip(cells, choice):
            for x, c in enumerate(xs):
                if c:
                    nxyh[x, y, h] = c
                    dist += c * d_ex[x, h]
        if dist <= n_delta:
            total += _divergence_factor(nxyh, p_x_given_y, nyh)
    return total


def finite_n_converse_bound(p_xy: JointPmf, d: DistortionMatrix, delta, n: int, rate: float) -> Fraction:
    """Exact B(n) >= p_c(n, R, delta).

    B(n) = sum over y types Q_Y and joint types Q_{Y Xhat} extending them of
    min(|T(Q_Y)|, M |T(Q_{Y|Xhat} | xhat)|) P(y in T(Q_Y), one sequence)
    times sum over conditional types V with E d <= delta of 2^(-n D(V || P_{X|Y} | Q_{Y Xhat})).
    Every factor is an exact rational, so no rounding is involved.
    """
    _exact_check(p_xy, d)
    delta = as_fraction(delta)
    M = message_count(n, rate)
    p_y = p_xy.marginal(1).exact
    p_x_given_y = p_xy.conditional(1).exact  # (Y, X)
    d_ex = d.exact
    ny, nh = p_xy.shape[1], d.shape[1]
    inner_cache: dict[bytes, Fraction] = {}
    total = Fraction(0)
    for q_y in enumerate_types(n, Alphabet(ny)):
        p_seq = math.prod((p_y[y] ** c for y, c in enumerate(q_y.counts)), start=Fraction(1))
        if p_seq == 0:
            continue
        t_size = type_class_size(q_y)
        for jt in conditional_types(q_y, Alphabet(nh)):
            nyh = jt.matrix
            key = nyh.tobytes()
            if key not in inner_cache:
                inner_cache[key] = _inner_sum(nyh, p_x_given_y, d_ex, n * delta)
            inner = inner_cache[key]
            if inner == 0:
                continue
            count = min(t_size, M * conditional_class_size(jt))
            total += count * p_seq * inner
    return total


# ---------------------------------------------------------------------------
# trajectory

def exponent_trajectory(p_xy: JointPmf, d: DistortionMatrix, delta, rate: float, n_list,
                        budget: int = DEFAULT_BUDGET, mode: str = "exhaustive",
                        restarts: int = 8, seed: int = 0) -> list[OracleReport]:
    """Reports for each n; a budget error is recorded in the report instead of raised."""
    out = []
    for n in n_list:
        scheme = build_scheme(p_xy, d, rate, delta, n)
        uncharged = evaluate_scheme(scheme, p_xy, d, delta)
        charged = charged_scheme(scheme, p_xy, d, delta)
        s_prob = evaluate_scheme(charged, p_xy, d, delta)
        bound = finite_n_converse_bound(p_xy, d, delta, n, rate)
        try:
            rep = optimal_pc(p_xy, d, delta, n, rate, budget=budget, mode=mode, restarts=restarts,
                             seed=seed, start=list(charged.decoder.values()))
        except BudgetExceededError as exc:
            rep = OracleReport(n, message_count(n, rate), Fraction(0), False, None, bound, s_prob,
                               uncharged, error=str(exc))
            out.append(rep)
            continue
        rep.converse_bound = bound
        rep.scheme_prob = s_prob
        rep.scheme_prob_uncharged = uncharged
        out.append(rep)
    return out


CSV_COLUMNS = ("n", "M", "exhaustive", "p_c", "scheme_prob", "B", "exponent_estimate", "error")


def _g(v) -> str:
    return format(float(v), ".12g")


def trajectory_csv(reports: list[OracleReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.n, r.M, int(r.exhaustive), _g(r.p_c), _g(r.scheme_prob), _g(r.converse_bound),
                    _g(r.exponent_estimate), r.error or ""])
    return buf.getvalue()
