"""Distributions on finite alphabets and the information functionals built on them.

Every quantity is measured in bits. Distributions carry two numeric tracks:
a float64 array used by the optimizers and, when every input entry is an
exact rational (``int``, ``Fraction`` or a ``"num/den"`` string), an object
array of ``Fraction`` used by the exact oracles. Conversion between the two
is always explicit.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import rel_entr

from .errors import AlphabetMismatchError, NotRationalError

LN2 = np.log(2.0)

# inputs whose total deviates from one by more than this are rejected
NORMALIZE_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"alphabet size must be a positive integer, got {self.size!r}")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
            if len(self.labels) != self.size:
                raise ValueError("labels must have one entry per symbol")

    def __len__(self):
        return self.size

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)


def as_fraction(value, max_denominator: int | None = None) -> Fraction:
    """Convert ``value`` to an exact ``Fraction``.

    Floats have no declared denominator, so they are only accepted when
    ``max_denominator`` is given (the float is then rounded to the closest
    rational with at most that denominator).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise NotRationalError("booleans are not probabilities")
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise NotRationalError(f"cannot parse {value!r} as a rational") from exc
    if isinstance(value, numbers.Real):
        if max_denominator is None:
            raise NotRationalError(
                f"float {value!r} has no declared denominator; pass max_denominator or use a Fraction"
            )
        return Fraction(float(value)).limit_denominator(max_denominator)
    raise NotRationalError(f"unsupported value {value!r}")


def _exact_array(values) -> np.ndarray | None:
    """Object array of Fractions, or None when any entry is a float."""
    arr = np.asarray(values, dtype=object)
    if arr.dtype != object:  # pragma: no cover - asarray(dtype=object) always gives object
        arr = arr.astype(object)
    flat = arr.ravel()
    out = np.empty(flat.shape, dtype=object)
    for i, v in enumerate(flat):
        if isinstance(v, (float, np.floating)):
            return None
        try:
            out[i] = as_fraction(v)
        except NotRationalError:
            return None
    return out.reshape(arr.shape)


def _float_array(values, exact) -> np.ndarray:
    if exact is not None:
        return np.array([float(v) for v in exact.ravel()], dtype=float).reshape(exact.shape)
    return np.array(values, dtype=float)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _default_alphabets(shape, alphabets):
    if alphabets is None:
        return tuple(Alphabet(n) for n in shape)
    alphabets = tuple(a if isinstance(a, Alphabet) else Alphabet(int(a)) for a in alphabets)
    if tuple(a.size for a in alphabets) != tuple(shape):
        raise AlphabetMismatchError(f"alphabet sizes {[a.size for a in alphabets]} do not match shape {shape}")
    return alphabets


class _Table:
    """Nonnegative array over a product of finite alphabets with total mass one."""

    def __init__(self, mass, alphabets=None, *, _checked=False):
        exact = _exact_array(mass)
        values = _float_array(mass, exact)
        if values.ndim == 0:
            raise ValueError("a distribution needs at least one axis")
        if not _checked:
            if not np.all(np.isfinite(values)) or np.any(values < 0):
                raise ValueError("probability mass must be finite and nonnegative")
            total = values.sum()
            if abs(total - 1.0) > NORMALIZE_TOL:
                raise ValueError(f"probability mass sums to {total!r}, not 1")
            if exact is not None:
                etotal = sum(exact.ravel(), Fraction(0))
                if etotal != 1:
                    exact = exact / etotal
                    values = _float_array(None, exact)
            else:
                values = values / total
        self._mass = _freeze(values)
        self._exact = None if exact is None else _freeze(exact)
        self._alphabets = _default_alphabets(values.shape, alphabets)

    @property
    def mass(self) -> np.ndarray:
        return self._mass

    @property
    def exact(self) -> np.ndarray | None:
        return self._exact

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    @property
    def alphabets(self) -> tuple[Alphabet, ...]:
        return self._alphabets

    @property
    def shape(self) -> tuple[int, ...]:
        return self._mass.shape

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self._mass, precision=6)})"


class Pmf(_Table):
    """Probability vector on one alphabet."""

    def __init__(self, mass, alphabet: Alphabet | None = None):
        super().__init__(mass, None if alphabet is None else (alphabet,))
        if self._mass.ndim != 1:
            raise ValueError("Pmf mass must be one-dimensional")

    @property
    def alphabet(self) -> Alphabet:
        return self._alphabets[0]

    @property
    def size(self) -> int:
        return self._mass.shape[0]

    def __len__(self):
        return self.size


class JointPmf(_Table):
    """Probability array over two or more alphabets, axis order as given."""

    def __init__(self, mass, alphabets=None):
        super().__init__(mass, alphabets)
        if self._mass.ndim < 2:
            raise ValueError("JointPmf needs at least two axes")

    @property
    def ndim(self) -> int:
        return self._mass.ndim

    def marginal(self, *keep: int):
        """Marginal on the axes in ``keep`` (in that order)."""
        keep = tuple(a % self.ndim for a in keep)
        drop = tuple(a for a in range(self.ndim) if a not in keep)
        src = self._exact if self._exact is not None else self._mass
        out = src.sum(axis=drop) if drop else src
        if len(keep) > 1:
            out = np.transpose(out, [sorted(keep).index(a) for a in keep])
        alph = tuple(self._alphabets[a] for a in keep)
        if len(keep) == 1:
            return Pmf(out, alph[0])
        return JointPmf(out, alph)

    def conditional(self, *given: int) -> "ConditionalPmf":
        """Kernel of the single remaining axis given the axes in ``given``.

        Conditioning cells of zero mass get a uniform row.
        """
        given = tuple(a % self.ndim for a in given)
        rest = [a for a in range(self.ndim) if a not in given]
        if len(rest) != 1:
            raise ValueError("conditional needs exactly one output axis")
        perm = list(given) + rest
        src = self._exact if self._exact is not None else self._mass
        arr = np.transpose(src, perm)
        tot = arr.sum(axis=-1, keepdims=True)
        out_size = arr.shape[-1]
        if self._exact is not None:
            rows = np.empty(arr.shape, dtype=object)
            for idx in np.ndindex(arr.shape[:-1]):
                t = tot[idx][0]
                rows[idx] = [v / t for v in arr[idx]] if t != 0 else [Fraction(1, out_size)] * out_size
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                rows = np.where(tot > 0, arr / np.where(tot > 0, tot, 1.0), 1.0 / out_size)
        alph = tuple(self._alphabets[a] for a in perm)
        return ConditionalPmf(rows, alph[:-1], alph[-1])


class ConditionalPmf:
    """Row-stochastic kernel: one Pmf over the output alphabet per conditioning cell."""

    def __init__(self, rows, given_alphabets=None, out_alphabet: Alphabet | None = None):
        exact = _exact_array(rows)
        values = _float_array(rows, exact)
        if values.ndim < 2:
            raise ValueError("a kernel needs at least one conditioning axis")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("kernel entries must be finite and nonnegative")
        tot = values.sum(axis=-1, keepdims=True)
        if np.any(np.abs(tot - 1.0) > NORMALIZE_TOL):
            raise ValueError("every kernel row must sum to 1")
        if exact is not None:
            for idx in np.ndindex(exact.shape[:-1]):
                t = sum(exact[idx], Fraction(0))
                if t != 1:
                    exact[idx] = [v / t for v in exact[idx]]
            values = _float_array(None, exact)
        else:
            values = values / tot
        self._rows = _freeze(values)
        self._exact = None if exact is None else _freeze(exact)
        self._given = _default_alphabets(values.shape[:-1], given_alphabets)
        self._out = _default_alphabets(values.shape[-1:], None if out_alphabet is None else (out_alphabet,))[0]

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def exact(self) -> np.ndarray | None:
        return self._exact

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    @property
    def given_alphabets(self) -> tuple[Alphabet, ...]:
        return self._given

    @property
    def out_alphabet(self) -> Alphabet:
        return self._out

    @property
    def given_shape(self) -> tuple[int, ...]:
        return self._rows.shape[:-1]

    @property
    def shape(self) -> tuple[int, ...]:
        return self._rows.shape

    def row(self, *cell: int) -> Pmf:
        src = self._exact if self._exact is not None else self._rows
        return Pmf(src[cell], self._out)

    def __repr__(self):
        return f"ConditionalPmf({np.array2string(self._rows, precision=6)})"


class DistortionMatrix:
    """Nonnegative per-letter distortion d(x, xhat)."""

    def __init__(self, values, x_alphabet: Alphabet | None = None, xhat_alphabet: Alphabet | None = None):
        exact = _exact_array(values)
        vals = _float_array(values, exact)
        if vals.ndim != 2:
            raise ValueError("distortion must be a matrix")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("distortion values must be finite and nonnegative")
        self._values = _freeze(vals)
        self._exact = None if exact is None else _freeze(exact)
        self.x_alphabet, self.xhat_alphabet = _default_alphabets(vals.shape, (x_alphabet, xhat_alphabet)
                                                                 if x_alphabet is not None and xhat_alphabet is not None
                                                                 else None)

    @classmethod
    def hamming(cls, size: int, xhat_size: int | None = None) -> "DistortionMatrix":
        m = size if xhat_size is None else xhat_size
        return cls([[0 if i == j else 1 for j in range(m)] for i in range(size)])

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def exact(self) -> np.ndarray | None:
        return self._exact

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    @property
    def shape(self) -> tuple[int, int]:
        return self._values.shape

    def __repr__(self):
        return f"DistortionMatrix({np.array2string(self._values, precision=6)})"


# ---------------------------------------------------------------------------
# array-level functionals (float64, bits)

def _arr(p) -> np.ndarray:
    if isinstance(p, (_Table,)):
        return p.mass
    if isinstance(p, ConditionalPmf):
        return p.rows
    if isinstance(p, DistortionMatrix):
        return p.values
    return np.asarray(p, dtype=float)


def entropy_array(p: np.ndarray, axis=None) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return t.sum(axis=axis)


def kl_array(q: np.ndarray, p: np.ndarray, axis=None) -> np.ndarray:
    return rel_entr(q, p).sum(axis=axis) / LN2


def _row_normalize(j: np.ndarray, tot: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, j / np.where(tot > 0, tot, 1.0), 0.0)


def mutual_information_array(joint: np.ndarray) -> float:
    """I between the first axis and the rest; ``joint`` is a 2-D array."""
    # sum_a p(a) D(p(.|a) || p(.)), which never forms the (underflow-prone) product p(a) p(b)
    pa = joint.sum(1, keepdims=True)
    cond = _row_normalize(joint, pa)
    return max(float(np.sum(pa * rel_entr(cond, joint.sum(0, keepdims=True))) / LN2), 0.0)


def cmi_array(j: np.ndarray) -> float:
    """I(A;C|B) for a 3-D array over (A, B, C)."""
    jb = j.sum((0, 2))
    jab = j.sum(2)
    jbc = j.sum(0)
    c_given_ab = _row_normalize(j, jab[:, :, None])
    c_given_b = _row_normalize(jbc, jb[:, None])
    return max(float(np.sum(jab[:, :, None] * rel_entr(c_given_ab, c_given_b[None, :, :])) / LN2), 0.0)


# ---------------------------------------------------------------------------
# public functionals

def _check_same(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise AlphabetMismatchError(f"{what}: shapes {a.shape} and {b.shape} differ")


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    return float(entropy_array(_arr(p)))


def kl_divergence(q, p) -> float:
    """D(q || p) in bits; ``inf`` when q is not absolutely continuous w.r.t. p."""
    qa, pa = _arr(q), _arr(p)
    _check_same(qa, pa, "kl_divergence")
    return float(kl_array(qa, pa))


def conditional_kl(q_cond, p_cond, weight) -> float:
    """Sum over conditioning cells of weight(cell) * D(q_row || p_row).

    Cells with zero weight are skipped, so a mismatch there costs nothing.
    """
    qa, pa, w = _arr(q_cond), _arr(p_cond), _arr(weight)
    _check_same(qa, pa, "conditional_kl")
    if w.shape != qa.shape[:-1]:
        raise AlphabetMismatchError(f"weight shape {w.shape} does not match cells {qa.shape[:-1]}")
    rows = kl_array(qa, pa, axis=-1)
    mask = w > 0
    return float(np.sum(w[mask] * rows[mask]))


def mutual_information(joint) -> float:
    """I between the two axes of a 2-axis joint, in bits."""
    j = _arr(joint)
    if j.ndim != 2:
        raise ValueError("mutual_information needs a two-axis joint")
    return mutual_information_array(j)


def conditional_mutual_information(joint3, given: int = 1) -> float:
    """I(A; C | B) where B is axis ``given`` of a three-axis joint."""
    j = _arr(joint3)
    if j.ndim != 3:
        raise ValueError("conditional_mutual_information needs a three-axis joint")
    others = [a for a in range(3) if a != given % 3]
    return cmi_array(np.transpose(j, (others[0], given % 3, others[1])))


def compose(base, kernel: ConditionalPmf) -> JointPmf:
    """Joint of ``base`` followed by ``kernel``; the new axis goes last."""
    b = base if isinstance(base, _Table) else JointPmf(base) if np.ndim(base) > 1 else Pmf(base)
    if b.shape != kernel.given_shape:
        raise AlphabetMismatchError(f"kernel conditions on {kernel.given_shape}, base has shape {b.shape}")
    alph = tuple(b.alphabets) + (kernel.out_alphabet,)
    if b.is_exact and kernel.is_exact:
        out = b.exact[..., None] * kernel.exact
        return JointPmf(out, alph)
    out = b.mass[..., None] * kernel.rows
    return JointPmf(out, alph)


def expected_distortion(joint, d: DistortionMatrix):
    """E d(X, Xhat) for a joint over (X, Xhat) or (X, Y, Xhat).

    Returns a Fraction when both inputs are exact, else a float.
    """
    if isinstance(joint, _Table) and joint.is_exact and d.is_exact:
        j = joint.exact
        dm = d.exact
    else:
        j = _arr(joint)
        dm = d.values
    if j.ndim == 3:
        j = j.sum(axis=1)
    if j.ndim != 2 or j.shape != dm.shape:
        raise AlphabetMismatchError(f"joint shape {np.shape(j)} does not match distortion {dm.shape}")
    if j.dtype == object:
        return sum((j * dm).ravel(), Fraction(0))
    return float(np.sum(j * dm))
