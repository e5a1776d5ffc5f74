"""Method of types at small blocklength: types, type classes, covering codebooks,
the per-type partition scheme and its exact success probability.

Sequences are tuples of symbol indices. A set of sequences over an alphabet of
size k is always listed in lexicographic order, so the rank of a sequence is
its base-k value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product

import numpy as np
from scipy.optimize import brentq

from .errors import AlphabetMismatchError, NotRationalError
from .probability import (
    LN2,
    Alphabet,
    ConditionalPmf,
    DistortionMatrix,
    JointPmf,
    as_fraction,
    mutual_information_array,
)
from ._search import compositions


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class TypeDescriptor:
    """Type of a length-n sequence: symbol counts summing to n."""

    n: int
    alphabet: Alphabet
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if self.n < 1:
            raise ValueError("blocklength must be positive")
        if len(self.counts) != self.alphabet.size:
            raise AlphabetMismatchError("one count per symbol is required")
        if min(self.counts) < 0 or sum(self.counts) != self.n:
            raise ValueError(f"counts {self.counts} are not a type of length {self.n}")

    @property
    def distribution(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, self.n) for c in self.counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n


@dataclass(frozen=True)
class JointTypeDescriptor:
    """Joint type of a pair of sequences as an integer count matrix."""

    n: int
    row_alphabet: Alphabet
    col_alphabet: Alphabet
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(c) for c in r) for r in self.counts)
        object.__setattr__(self, "counts", rows)
        if len(rows) != self.row_alphabet.size or any(len(r) != self.col_alphabet.size for r in rows):
            raise AlphabetMismatchError("count matrix does not match the alphabets")
        flat = [c for r in rows for c in r]
        if min(flat) < 0 or sum(flat) != self.n:
            raise ValueError(f"counts do not form a joint type of length {self.n}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    def row_type(self) -> TypeDescriptor:
        return TypeDescriptor(self.n, self.row_alphabet, tuple(self.matrix.sum(axis=1)))

    def col_type(self) -> TypeDescriptor:
        return TypeDescriptor(self.n, self.col_alphabet, tuple(self.matrix.sum(axis=0)))

    def mutual_information(self) -> float:
        return mutual_information_array(self.matrix / self.n)


def enumerate_types(n: int, alphabet: Alphabet | int) -> list[TypeDescriptor]:
    """All types of length n, largest first count first: (2,0), (1,1), (0,2)."""
    alphabet = Alphabet(alphabet) if isinstance(alphabet, int) else alphabet
    if n < 1:
        raise ValueError("blocklength must be positive")
    return [TypeDescriptor(n, alphabet, c) for c in compositions(n, alphabet.size)]


def type_class_size(t: TypeDescriptor) -> int:
    """Multinomial n! / prod counts!."""
    return math.factorial(t.n) // math.prod(math.factorial(c) for c in t.counts)


def conditional_class_size(joint: JointTypeDescriptor) -> int:
    """Number of row sequences with this joint type against one fixed column sequence."""
    m = joint.matrix
    out = 1
    for col in m.T:
        out *= math.factorial(int(col.sum())) // math.prod(math.factorial(int(c)) for c in col)
    return out


def all_sequences(n: int, size: int) -> np.ndarray:
    return np.array(list(product(range(size), repeat=n)), dtype=np.int64).reshape(-1, n)


def sequence_rank(seq, size: int) -> int:
    r = 0
    for s in seq:
        r = r * size + int(s)
    return r


def type_class(t: TypeDescriptor) -> np.ndarray:
    """Members of the type class, lexicographic, as an (N, n) integer array."""
    out = []
    counts = list(t.counts)
    seq = []

    def rec(left):
        if left == 0:
            out.append(tuple(seq))
            return
        for a, c in enumerate(counts):
            if c:
                counts[a] -= 1
                seq.append(a)
                rec(left - 1)
                seq.pop()
                counts[a] += 1

    rec(t.n)
    return np.array(out, dtype=np.int64).reshape(-1, t.n)


def conditional_types(q_y: TypeDescriptor, xhat_alphabet: Alphabet | int) -> list[JointTypeDescriptor]:
    """Joint types with row marginal q_y, i.e. the conditional types realizable at this n."""
    xhat_alphabet = Alphabet(xhat_alphabet) if isinstance(xhat_alphabet, int) else xhat_alphabet
    per_row = [list(compositions(c, xhat_alphabet.size)) for c in q_y.counts]
    return [JointTypeDescriptor(q_y.n, q_y.alphabet, xhat_alphabet, rows) for rows in product(*per_row)]


def joint_counts(a: np.ndarray, b: np.ndarray, size_a: int, size_b: int) -> np.ndarray:
    """Joint type counts of every pair of rows: shape (len(a), len(b), size_a, size_b)."""
    oa = (a[..., None] == np.arange(size_a)).astype(np.int32)
    ob = (b[..., None] == np.arange(size_b)).astype(np.int32)
    return np.einsum("ina,jnb->ijab", oa, ob)


# ---------------------------------------------------------------------------
# covering

@dataclass
class Codebook:
    n: int
    codewords: list[tuple[int, ...]]
    target: JointTypeDescriptor
    coverage: int = 0

    def __post_init__(self):
        if not self.codewords:
            raise ValueError("a codebook needs at least one codeword")

    def __len__(self):
        return len(self.codewords)


def _as_joint_target(q_y: TypeDescriptor, cond, n: int) -> JointTypeDescriptor:
    if isinstance(cond, JointTypeDescriptor):
        if cond.n != n or cond.row_type() != q_y:
            raise ValueError("joint type does not extend the given y-type")
        return cond
    if isinstance(cond, ConditionalPmf):
        if not cond.is_exact:
            raise NotRationalError("conditional type must be given exactly")
        rows, out = cond.exact, cond.out_alphabet
    else:
        arr = np.asarray(cond, dtype=object)
        out = Alphabet(arr.shape[-1])
        if all(isinstance(v, (int, np.integer)) for v in arr.ravel()) and \
                [sum(int(v) for v in r) for r in arr] == list(q_y.counts):
            return JointTypeDescriptor(n, q_y.alphabet, out, arr.tolist())
        rows = arr
    counts = []
    for cy, row in zip(q_y.counts, rows):
        r = [as_fraction(v) * cy for v in row]
        if any(v.denominator != 1 for v in r):
            raise ValueError(f"conditional type is not realizable at n = {n}")
        counts.append([int(v) for v in r])
    return JointTypeDescriptor(n, q_y.alphabet, out, counts)


def greedy_type_cover(q_y: TypeDescriptor, q_xhat_given_y, n: int | None = None) -> Codebook:
    """Covering codebook for the type class of q_y under a conditional type.

    ``q_xhat_given_y`` is a JointTypeDescriptor, an integer count matrix N(y, xhat)
    with row sums equal to the counts of q_y, or rational rows Q(xhat | y).
    Candidates are the members of the xhat type class in lexicographic order;
    the greedy step keeps the lowest-index candidate among ties.
    """
    n = q_y.n if n is None else n
    if n != q_y.n:
        raise ValueError("blocklength does not match the y-type")
    target = _as_joint_target(q_y, q_xhat_given_y, n)
    ys = type_class(q_y)
    cands = type_class(target.col_type())
    cover = np.all(joint_counts(ys, cands, q_y.alphabet.size, target.col_alphabet.size)
                   == target.matrix, axis=(2, 3))
    uncovered = np.ones(len(ys), dtype=bool)
    chosen = []
    while uncovered.any():
        gains = cover[uncovered].sum(axis=0)
        j = int(np.argmax(gains))
        if gains[j] == 0:  # cannot happen for a joint type extending q_y
            raise RuntimeError("covering stalled")
        chosen.append(j)
        uncovered &= ~cover[:, j]
    return Codebook(n, [tuple(int(v) for v in cands[j]) for j in chosen], target, len(ys))


def covering_bound(target: JointTypeDescriptor) -> float:
    """(n+1)^(|Y||Xhat|) 2^(n I) for the covering size."""
    k = target.row_alphabet.size * target.col_alphabet.size
    return (target.n + 1) ** k * 2.0 ** (target.n * target.mutual_information())


# ---------------------------------------------------------------------------
# exact success probability

def _rational(v, what):
    try:
        return as_fraction(v)
    except NotRationalError as exc:
        raise NotRationalError(f"{what}: {exc}") from exc


def _exact_rows(p_x_given_y: ConditionalPmf) -> np.ndarray:
    if not p_x_given_y.is_exact:
        raise NotRationalError("P(x|y) must be rational; build it from Fractions or 'num/den' strings")
    return p_x_given_y.exact


def _exact_distortion(d: DistortionMatrix) -> np.ndarray:
    if not d.is_exact:
        raise NotRationalError("distortion values must be rational")
    return d.exact


class SuccessTable:
    """P{sum_i d(X_i, xhat_i) <= n delta | y} with X_i ~ P(.|y_i) independent.

    The probability depends on (y, xhat) only through their joint type, so
    values are cached per joint type. Distortions are scaled to integers by
    the common denominator and the partial sums are convolved exactly.
    """

    def __init__(self, p_x_given_y: ConditionalPmf, d: DistortionMatrix, delta, n: int):
        self.rows = _exact_rows(p_x_given_y)
        dex = _exact_distortion(d)
        if self.rows.shape[-1] != dex.shape[0]:
            raise AlphabetMismatchError("P(x|y) and distortion disagree on |X|")
        self.n = n
        self.ny, self.nx = self.rows.shape
        self.nh = dex.shape[1]
        delta = _rational(delta, "delta")
        scale = reduce(math.lcm, (v.denominator for v in dex.ravel()), delta.denominator)
        self.d_int = [[int(v * scale) for v in row] for row in dex]
        self.limit = math.floor(n * delta * scale)
        self._cache: dict[bytes, Fraction] = {}
        # per (y, xhat) letter law of the scaled distortion
        self._letter = {}
        for y in range(self.ny):
            for h in range(self.nh):
                law: dict[int, Fraction] = {}
                for x in range(self.nx):
                    p = self.rows[y, x]
                    if p:
                        law[self.d_int[x][h]] = law.get(self.d_int[x][h], Fraction(0)) + p
                self._letter[y, h] = law

    def from_counts(self, counts: np.ndarray) -> Fraction:
        counts = np.asarray(counts, dtype=np.int64)
        key = counts.tobytes()
        if key not in self._cache:
            self._cache[key] = self._compute(counts)
        return self._cache[key]

    def _compute(self, counts) -> Fraction:
        lim = self.limit
        if lim < 0:
            return Fraction(0)
        dist = {0: Fraction(1)}
        for (y, h), c in np.ndenumerate(counts):
            law = self._letter[y, h]
            for _ in range(int(c)):
                nxt: dict[int, Fraction] = {}
                for s, p in dist.items():
                    for v, q in law.items():
                        t = s + v
                        if t <= lim:  # distortions are nonnegative, so larger sums never return
                            nxt[t] = nxt.get(t, Fraction(0)) + p * q
                dist = nxt
                if not dist:
                    return Fraction(0)
        return sum(dist.values(), Fraction(0))

    def prob(self, y, xhat) -> Fraction:
        y = np.asarray(y, dtype=np.int64)
        xhat = np.asarray(xhat, dtype=np.int64)
        if len(y) != self.n or len(xhat) != self.n:
            raise ValueError("sequence length does not match the blocklength")
        counts = np.zeros((self.ny, self.nh), dtype=np.int64)
        np.add.at(counts, (y, xhat), 1)
        return self.from_counts(counts)

    def matrix(self, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Object array of exact probabilities for every (y, xhat) pair."""
        jc = joint_counts(ys, xs, self.ny, self.nh).astype(np.int64)
        flat = jc.reshape(-1, self.ny * self.nh)
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        vals = np.array([self.from_counts(u.reshape(self.ny, self.nh)) for u in uniq], dtype=object)
        return vals[np.ravel(inv)].reshape(len(ys), len(xs))


def success_prob_given_y(y, xhat, p_x_given_y: ConditionalPmf, d: DistortionMatrix, delta) -> Fraction:
    """Exact P{ sum_i d(X_i, xhat_i) <= n delta } for X_i ~ P(. | y_i) independent."""
    return SuccessTable(p_x_given_y, d, delta, len(y)).prob(y, xhat)


def sequence_probability(y, p_y) -> Fraction:
    return math.prod((p_y[int(s)] for s in y), start=Fraction(1))


# ---------------------------------------------------------------------------
# the per-type partition scheme

def message_count(n: int, rate: float) -> int:
    """floor(2^(nR)); values within 1e-9 of an integer are snapped to it."""
    v = 2.0 ** (n * rate)
    r = round(v)
    return int(r) if abs(v - r) <= 1e-9 * max(1.0, v) else int(math.floor(v))


@dataclass
class TypeBlock:
    """Bookkeeping for one y type class."""

    q_y: TypeDescriptor
    target: JointTypeDescriptor
    codebook: list[tuple[int, ...]]
    cell_sizes: list[int]
    kept: int
    h_size: int
    offset: int
    mutual_information: float
    objective: float

    @property
    def class_size(self) -> int:
        return type_class_size(self.q_y)


@dataclass
class Scheme:
    """Encoder and decoder tables of a block code.

    ``encoder[rank(y)]`` is the message sent for y (0 means "give up");
    ``decoder[i]`` is the reproduction for message i >= 1. In the per-type
    scheme messages are offset by type class, and ``local`` holds the
    within-class index in {0, ..., M}.
    """

    n: int
    M: int
    y_size: int
    xhat_size: int
    encoder: np.ndarray
    decoder: dict[int, tuple[int, ...]]
    local: np.ndarray | None = None
    header: np.ndarray | None = None
    blocks: list[TypeBlock] = field(default_factory=list)
    charged: bool = True

    def encode(self, y) -> int:
        return int(self.encoder[sequence_rank(y, self.y_size)])

    def decode(self, i: int) -> tuple[int, ...] | None:
        return self.decoder.get(int(i))

    @property
    def messages_used(self) -> int:
        return len(self.decoder)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "M": self.M,
            "y_size": self.y_size,
            "xhat_size": self.xhat_size,
            "charged": self.charged,
            "encoder": [int(v) for v in self.encoder],
            "decoder": {str(k): list(v) for k, v in sorted(self.decoder.items())},
        }
        if self.local is not None:
            out["local"] = [int(v) for v in self.local]
        if self.header is not None:
            out["header"] = [int(v) for v in self.header]
        if self.blocks:
            out["types"] = [
                {
                    "q_y": list(b.q_y.counts),
                    "joint_type": [list(r) for r in b.target.counts],
                    "codebook_size": len(b.codebook),
                    "cell_sizes": b.cell_sizes,
                    "kept": b.kept,
                    "h_size": b.h_size,
                    "class_size": b.class_size,
                    "offset": b.offset,
                    "mutual_information": b.mutual_information,
                    "objective": b.objective,
                }
                for b in self.blocks
            ]
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "Scheme":
        """Rebuild the tables; per-type bookkeeping is not restored."""
        return cls(
            n=int(doc["n"]),
            M=int(doc["M"]),
            y_size=int(doc["y_size"]),
            xhat_size=int(doc["xhat_size"]),
            encoder=np.array(doc["encoder"], dtype=np.int64),
            decoder={int(k): tuple(int(s) for s in v) for k, v in doc["decoder"].items()},
            local=None if "local" not in doc else np.array(doc["local"], dtype=np.int64),
            header=None if "header" not in doc else np.array(doc["header"], dtype=np.int64),
            charged=bool(doc.get("charged", True)),
        )


def tilted_divergence(q_yh: np.ndarray, p_x_given_y: np.ndarray, d: np.ndarray, delta: float) -> float:
    """min sum q(y,h) D(V(.|y,h) || P(.|y)) over V with sum q V d <= delta, in bits.

    The minimizer tilts P(x|y) by 2^(-lam d(x,h)); lam is found by root search.
    Returns inf when delta is below the distortion floor.
    """
    mask = q_yh > 0
    py = p_x_given_y  # (Y, X)
    dd = d.T[None, :, :]  # (1, H, X)
    support = py[:, None, :] > 0  # (Y, 1, X)
    big = np.where(support, dd, np.inf)
    floor = float(np.sum(q_yh[mask] * big.min(axis=2)[mask]))
    if delta < floor - 1e-12:
        return math.inf

    def tilt(lam):
        logw = np.where(support, np.log(np.where(support, py[:, None, :], 1.0)) - lam * LN2 * dd, -np.inf)
        logw = logw - logw.max(axis=2, keepdims=True)
        w = np.exp(logw)
        return w / w.sum(axis=2, keepdims=True)

    def dist(v):
        return float(np.sum(q_yh[..., None] * v * dd))

    def value(v):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(v > 0, v * np.log2(v / np.where(support, py[:, None, :], 1.0)), 0.0)
        return float(np.sum(q_yh * terms.sum(axis=2)))

    v0 = tilt(0.0)
    if dist(v0) <= delta:
        return 0.0
    if delta <= floor + 1e-12:
        # lam -> inf: mass on the distortion minimizers within the support
        at_min = support & np.isclose(big, big.min(axis=2, keepdims=True))
        v = np.where(at_min, py[:, None, :], 0.0)
        s = v.sum(axis=2, keepdims=True)
        v = np.where(s > 0, v / np.where(s > 0, s, 1.0), 0.0)
        return value(v)
    hi = 1.0
    while dist(tilt(hi)) > delta:
        hi *= 2.0
        if hi > 1e6:
            return value(tilt(hi))
    lam = brentq(lambda t: dist(tilt(t)) - delta, 0.0, hi, xtol=1e-14, rtol=1e-14)
    return value(tilt(lam))


def achievability_selector(p_xy: JointPmf, d: DistortionMatrix, rate: float, delta):
    """Default per-type choice: the realizable conditional type minimizing

        |I(Y; Xhat) - R|^+ + min_V D(V || P_{X|Y} | Q_{Y Xhat})  (E d <= delta)

    evaluated at that joint type. Returns ``select(q_y, candidates) -> (index, score)``.
    """
    p = p_xy.mass
    p_y = p.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        p_x_given_y = np.where(p_y > 0, p / np.where(p_y > 0, p_y, 1.0), 1.0 / p.shape[0]).T
    dv = d.values
    delta = float(delta)

    def select(q_y: TypeDescriptor, candidates: list[JointTypeDescriptor]):
        best, best_key = 0, None
        for i, c in enumerate(candidates):
            q = c.matrix / c.n
            mi = mutual_information_array(q)
            score = max(mi - rate, 0.0) + tilted_divergence(q, p_x_given_y, dv, delta)
            key = (score, mi)
            # strict comparison keeps the earliest candidate on ties
            if best_key is None or key < best_key:
                best, best_key = i, key
        return best, best_key[0]

    return select


def build_scheme(p_xy: JointPmf, d: DistortionMatrix, rate: float, delta, n: int,
                 kernel_selector=None) -> Scheme:
    """Per-type partition scheme with up to M = floor(2^(nR)) messages per y type class.

    For each y type a conditional type is selected, a covering codebook is
    built, every y is assigned to its lowest-index covering codeword, and the
    resulting cells are sorted by size. Cells beyond M send message 0. The
    type index and message 0 are bookkeeping on top of M.
    """
    M = message_count(n, rate)
    if M < 1:
        raise ValueError(f"rate {rate} gives no messages at n = {n}")
    ny = p_xy.shape[1]
    nh = d.shape[1]
    y_alph, h_alph = Alphabet(ny), Alphabet(nh)
    select = kernel_selector or achievability_selector(p_xy, d, rate, delta)
    size = ny ** n
    encoder = np.zeros(size, dtype=np.int64)
    local = np.zeros(size, dtype=np.int64)
    header = np.zeros(size, dtype=np.int64)
    decoder: dict[int, tuple[int, ...]] = {}
    blocks = []
    offset = 0
    for t_idx, q_y in enumerate(enumerate_types(n, y_alph)):
        cands = conditional_types(q_y, h_alph)
        if not cands:
            raise ValueError(f"no realizable conditional type for {q_y.counts}")
        pick = select(q_y, cands)
        idx, score = pick if isinstance(pick, tuple) else (pick, math.nan)
        target = cands[idx]
        book = greedy_type_cover(q_y, target)
        ys = type_class(q_y)
        cw = np.array(book.codewords, dtype=np.int64)
        cover = np.all(joint_counts(ys, cw, ny, nh) == target.matrix, axis=(2, 3))
        owner = np.argmax(cover, axis=1)  # lowest-index covering codeword
        sizes = np.bincount(owner, minlength=len(cw))
        order = np.argsort(-sizes, kind="stable")
        rank_of = np.empty(len(cw), dtype=np.int64)
        rank_of[order] = np.arange(1, len(cw) + 1)
        cell = rank_of[owner]
        kept = min(M, len(cw))
        ranks = np.array([sequence_rank(y, ny) for y in ys], dtype=np.int64)
        header[ranks] = t_idx
        local[ranks] = np.where(cell <= M, cell, 0)
        encoder[ranks] = np.where(cell <= M, offset + cell, 0)
        for i in range(1, kept + 1):
            decoder[offset + i] = book.codewords[int(order[i - 1])]
        h_size = int(np.sum(cell <= M))
        blocks.append(TypeBlock(q_y, target, book.codewords, [int(sizes[j]) for j in order], kept, h_size,
                                offset, target.mutual_information(), float(score)))
        offset += kept
    return Scheme(n, M, ny, nh, encoder, decoder, local, header, blocks, charged=False)


def _score_inputs(p_xy: JointPmf, d: DistortionMatrix, delta, n: int):
    if not p_xy.is_exact:
        raise NotRationalError("P_XY must be rational for exact evaluation")
    p_y = p_xy.marginal(1).exact
    table = SuccessTable(p_xy.conditional(1), d, delta, n)
    return p_y, table


def evaluate_scheme(s: Scheme, p_xy: JointPmf, d: DistortionMatrix, delta) -> Fraction:
    """Exact P{ d(X^n, g(f(Y^n))) <= n delta } under the scheme; message 0 counts as failure."""
    p_y, table = _score_inputs(p_xy, d, delta, s.n)
    if p_xy.shape[1] != s.y_size or d.shape[1] != s.xhat_size:
        raise AlphabetMismatchError("scheme alphabets do not match the instance")
    total = Fraction(0)
    ys = all_sequences(s.n, s.y_size)
    for r, y in enumerate(ys):
        i = int(s.encoder[r])
        if i == 0:
            continue
        xhat = s.decoder.get(i)
        if xhat is None:
            raise ValueError(f"message {i} has no reproduction")
        py = sequence_probability(y, p_y)
        if py:
            total += py * table.prob(y, xhat)
    return total


def score_matrices(p_xy: JointPmf, d: DistortionMatrix, delta, n: int, ys: np.ndarray, xs: np.ndarray):
    """Exact and float matrices of P(y) P{success | y, xhat}."""
    p_y, table = _score_inputs(p_xy, d, delta, n)
    exact = table.matrix(ys, xs)
    py = np.array([sequence_probability(y, p_y) for y in ys], dtype=object)
    exact = exact * py[:, None]
    return exact, exact.astype(float)


def charged_scheme(s: Scheme, p_xy: JointPmf, d: DistortionMatrix, delta) -> Scheme:
    """A code with at most M messages in total, built from the codewords of ``s``.

    Codewords are added greedily by their gain in success probability (ties
    to the lowest index); each y then sends its best codeword. The result is
    an admissible M-message code, so its success probability never exceeds
    the optimum.
    """
    pool = sorted(set(s.decoder.values()))
    if not pool:
        pool = [tuple([0] * s.n)]
    ys = all_sequences(s.n, s.y_size)
    xs = np.array(pool, dtype=np.int64)
    exact, fl = score_matrices(p_xy, d, delta, s.n, ys, xs)
    chosen = greedy_codebook(fl, s.M)
    return scheme_from_codebook(s.n, s.M, s.y_size, s.xhat_size, [pool[j] for j in chosen], exact[:, chosen])


def greedy_codebook(fl: np.ndarray, m: int) -> list[int]:
    best = np.zeros(fl.shape[0])
    chosen: list[int] = []
    for _ in range(min(m, fl.shape[1])):
        gain = np.maximum(fl, best[:, None]).sum(axis=0)
        gain[chosen] = -np.inf
        j = int(np.argmax(gain))
        chosen.append(j)
        best = np.maximum(best, fl[:, j])
    return chosen


def scheme_from_codebook(n: int, M: int, y_size: int, xhat_size: int, codewords, exact: np.ndarray) -> Scheme:
    """Encoder sending each y to its best codeword under the exact score matrix."""
    enc = np.empty(exact.shape[0], dtype=np.int64)
    for r in range(exact.shape[0]):
        row = exact[r]
        j = max(range(len(row)), key=lambda k: (row[k], -k))
        enc[r] = j + 1
    dec = {i + 1: tuple(int(v) for v in c) for i, c in enumerate(codewords)}
    return Scheme(n, M, y_size, xhat_size, enc, dec, charged=True)
