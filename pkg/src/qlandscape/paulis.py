"""Exact arithmetic over the n-qubit Pauli basis.

Pauli strings are encoded symplectically as a pair of bit masks ``(x, z)``,
bit ``q`` of each mask referring to qubit ``q``.  The represented operator is
the Hermitian string

    P(x, z) = i^(x.z) X^x Z^z

where ``x.z`` counts the positions with both bits set, so that

    (0, 0) -> I,   (1, 0) -> X,   (0, 1) -> Z,   (1, 1) -> Y

on each qubit and every string squares to the identity.  Linear combinations
carry exact ``fractions.Fraction`` coefficients: products of Pauli strings only
ever introduce factors of ``+-1, +-i`` and commutators factors of ``+-2``, so
linear-independence decisions during Lie-closure computations never rest on a
floating point tolerance.

Commutator convention
---------------------
``pauli_commutator(a, b)`` returns the Hermitian sum ``c`` with

    [A, B] = i * c .

For single anticommuting strings this makes ``c`` equal to ``-i [P, Q] =
+-2 PQ``, e.g. ``[X, Y] = 2iZ`` is returned as ``2 Z``.  The real span of
nested commutators of ``{i H_k}`` equals the real span of the sums produced by
iterating this map, which is what the Lie-closure code consumes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "PauliTerm",
    "PauliSum",
    "CliffordGate",
    "cz",
    "cnot",
    "hadamard",
    "s_gate",
    "pauli_commutator",
    "conjugate_by_clifford",
]

_CHAR_TO_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_XZ_TO_CHAR = {v: k for k, v in _CHAR_TO_XZ.items()}

# single-qubit matrices, used only to build dense oracles
_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliTerm:
    """A single Hermitian Pauli string on ``n`` qubits.

    ``x`` and ``z`` are bit masks (bit q = qubit q).  Qubit 0 is the leftmost
    character in the text form, e.g. ``PauliTerm.from_string("XIZY")`` puts X
    on qubit 0 and Y on qubit 3.
    """

    n: int
    x: int
    z: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("qubit count must be positive")
        lim = 1 << self.n
        if not (0 <= self.x < lim and 0 <= self.z < lim):
            raise ValueError("bit mask does not fit the qubit count")

    @classmethod
    def from_string(cls, text: str) -> "PauliTerm":
        x = z = 0
        for q, ch in enumerate(text):
            try:
                xb, zb = _CHAR_TO_XZ[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(text), x, z)

    def __str__(self) -> str:
        return "".join(
            _XZ_TO_CHAR[(self.x >> q) & 1, (self.z >> q) & 1] for q in range(self.n)
        )

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def commutes_with(self, other: "PauliTerm") -> bool:
        """True when the two strings commute (symplectic form vanishes)."""
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def mul(self, other: "PauliTerm") -> tuple["PauliTerm", int]:
        """Product ``self * other = i^k * result``; returns ``(result, k mod 4)``."""
        if self.n != other.n:
            raise ValueError("qubit counts differ")
        x3 = self.x ^ other.x
        z3 = self.z ^ other.z
        k = (
            (self.x & self.z).bit_count()
            + (other.x & other.z).bit_count()
            - (x3 & z3).bit_count()
            + 2 * (self.z & other.x).bit_count()
        ) % 4
        return PauliTerm(self.n, x3, z3), k

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; qubit q is bit q of the basis index."""
        m = np.ones((1, 1), dtype=complex)
        for q in reversed(range(self.n)):
            m = np.kron(m, _MATS[_XZ_TO_CHAR[(self.x >> q) & 1, (self.z >> q) & 1]])
        return m

    def _key(self) -> tuple[int, int]:
        return (self.x, self.z)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")


class PauliSum:
    """A real (exact-rational) linear combination of Pauli strings.

    Represents a Hermitian operator; the associated Lie-algebra element is
    ``i`` times it.  Zero coefficients are pruned on construction and the
    instance should be treated as immutable once built.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[PauliTerm, object] | None = None):
        self.n = n
        clean: dict[PauliTerm, Fraction] = {}
        for term, coeff in (terms or {}).items():
            if term.n != n:
                raise ValueError("term qubit count differs from the sum's")
            c = _as_fraction(coeff)
            if c != 0:
                clean[term] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "PauliSum":
        return cls(n, {})

    @classmethod
    def from_string(cls, text: str, coeff=1) -> "PauliSum":
        term = PauliTerm.from_string(text)
        return cls(term.n, {term: coeff})

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> "PauliSum":
        """Parse the line format ``coeff<TAB>string`` (one term per line)."""
        terms: dict[PauliTerm, Fraction] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            coeff_s, string = re.split(r"\s+", line, maxsplit=1)
            term = PauliTerm.from_string(string.strip())
            terms[term] = terms.get(term, Fraction(0)) + Fraction(coeff_s)
        if not terms:
            if n is None:
                raise ValueError("cannot infer qubit count of an empty sum")
            return cls.zero(n)
        n_found = next(iter(terms)).n
        return cls(n_found, terms)

    # -- basic protocol ----------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[PauliTerm, Fraction]]:
        return iter(self.terms.items())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliSum)
            and self.n == other.n
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return f"PauliSum(n={self.n}, 0)"
        parts = [f"{c}*{t}" for t, c in sorted(self, key=lambda tc: tc[0]._key())]
        return f"PauliSum({' + '.join(parts)})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_traceless(self) -> bool:
        """No identity component; every Pauli string but I is traceless."""
        return PauliTerm(self.n, 0, 0) not in self.terms

    def coefficient(self, term: PauliTerm) -> Fraction:
        return self.terms.get(term, Fraction(0))

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n != other.n:
            raise ValueError("qubit counts differ")
        out = dict(self.terms)
        for term, c in other.terms.items():
            out[term] = out.get(term, Fraction(0)) + c
        return PauliSum(self.n, out)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "PauliSum":
        c = _as_fraction(scalar)
        return PauliSum(self.n, {t: c * v for t, v in self.terms.items()})

    def __neg__(self) -> "PauliSum":
        return (-1) * self

    def terms_commute(self) -> bool:
        """True when all strings in the sum commute mutually."""
        ts = list(self.terms)
        return all(a.commutes_with(b) for i, a in enumerate(ts) for b in ts[i + 1 :])

    def to_matrix(self) -> np.ndarray:
        d = 1 << self.n
        m = np.zeros((d, d), dtype=complex)
        for term, coeff in self.terms.items():
            m += float(coeff) * term.to_matrix()
        return m

    def to_text(self) -> str:
        lines = [
            f"{coeff}\t{term}"
            for term, coeff in sorted(self, key=lambda tc: tc[0]._key())
        ]
        return "\n".join(lines)


def pauli_commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """Commutator in the stored convention: returns ``c`` with ``[A, B] = i c``.

    The result is the empty sum when A and B commute.  For anticommuting
    strings P, Q the raw commutator is ``[P, Q] = 2 PQ`` and PQ is ``+-i``
    times a Hermitian string, so every contribution lands in ``c`` with an
    exact coefficient ``+-2 a_P b_Q``.
    """
    if a.n != b.n:
        raise ValueError("qubit counts differ")
    out: dict[PauliTerm, Fraction] = {}
    for p, ca in a.terms.items():
        for q, cb in b.terms.items():
            if p.commutes_with(q):
                continue
            r, k = p.mul(q)
            # -i * 2 * i^k with k odd: +2 for k = 1, -2 for k = 3
            sign = 2 if k == 1 else -2
            out[r] = out.get(r, Fraction(0)) + sign * ca * cb
    return PauliSum(a.n, out)


# ---------------------------------------------------------------------------
# Clifford conjugation (symplectic tableau update with exact signs)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CliffordGate:
    """A fixed (non-parametrized) gate: one of CZ, CNOT, H, S."""

    name: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        arity = {"CZ": 2, "CNOT": 2, "H": 1, "S": 1}
        if self.name not in arity:
            raise ValueError(f"unsupported Clifford gate {self.name!r}")
        if len(self.qubits) != arity[self.name]:
            raise ValueError(f"{self.name} takes {arity[self.name]} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated qubit index")

    def __str__(self) -> str:
        return f"{self.name}({','.join(map(str, self.qubits))})"


def cz(i: int, j: int) -> CliffordGate:
    return CliffordGate("CZ", (i, j))


def cnot(control: int, target: int) -> CliffordGate:
    return CliffordGate("CNOT", (control, target))


def hadamard(i: int) -> CliffordGate:
    return CliffordGate("H", (i,))


def s_gate(i: int) -> CliffordGate:
    return CliffordGate("S", (i,))


def _bit(mask: int, q: int) -> int:
    return (mask >> q) & 1


def _set_bit(mask: int, q: int, value: int) -> int:
    return (mask & ~(1 << q)) | (value << q)


def _conjugate_term(term: PauliTerm, gate: CliffordGate) -> tuple[PauliTerm, int]:
    """Return ``(term', sign)`` with ``W^dag P W = sign * P'`` in the
    Hermitian convention.  Update rules act on the local (x, z) bits."""
    x, z = term.x, term.z
    if gate.name == "H":
        (q,) = gate.qubits
        xq, zq = _bit(x, q), _bit(z, q)
        sign = -1 if xq and zq else 1
        x = _set_bit(x, q, zq)
        z = _set_bit(z, q, xq)
        return PauliTerm(term.n, x, z), sign
    if gate.name == "S":
        # S^dag X S = -Y, S^dag Y S = X, Z fixed
        (q,) = gate.qubits
        xq, zq = _bit(x, q), _bit(z, q)
        if xq == 0:
            return term, 1
        sign = -1 if zq == 0 else 1
        z = _set_bit(z, q, 1 - zq)
        return PauliTerm(term.n, x, z), sign
    if gate.name == "CZ":
        a, b = gate.qubits
        xa, za = _bit(x, a), _bit(z, a)
        xb, zb = _bit(x, b), _bit(z, b)
        w_old = (xa & za) + (xb & zb)
        za ^= xb
        zb ^= xa
        w_new = (xa & za) + (xb & zb)
        # phase of X^x Z^z bookkeeping plus the (-1)^(xa xb) from commuting
        # Z factors through X factors; always lands on +-1 for Cliffords
        k = (w_old - w_new + 2 * (xa & xb)) % 4
        assert k in (0, 2)
        z = _set_bit(_set_bit(z, a, za), b, zb)
        return PauliTerm(term.n, x, z), 1 if k == 0 else -1
    if gate.name == "CNOT":
        c, t = gate.qubits
        xc, zc = _bit(x, c), _bit(z, c)
        xt, zt = _bit(x, t), _bit(z, t)
        sign = -1 if (xc & zt & (xt ^ zc ^ 1)) else 1
        z = _set_bit(z, c, zc ^ zt)
        x = _set_bit(x, t, xt ^ xc)
        return PauliTerm(term.n, x, z), sign
    raise AssertionError(gate.name)


def conjugate_by_clifford(p: PauliSum, gate: CliffordGate) -> PauliSum:
    """Exact ``W^dag P W`` for a Pauli sum; term count is preserved."""
    if any(q >= p.n or q < 0 for q in gate.qubits):
        raise ValueError("gate qubit index out of range")
    out: dict[PauliTerm, Fraction] = {}
    for term, coeff in p.terms.items():
        new_term, sign = _conjugate_term(term, gate)
        out[new_term] = out.get(new_term, Fraction(0)) + sign * coeff
    return PauliSum(p.n, out)


def sum_paulis(n: int, entries: Iterable[tuple[object, str]]) -> PauliSum:
    """Convenience builder from (coeff, string) pairs."""
    total = PauliSum.zero(n)
    for coeff, string in entries:
        total = total + PauliSum.from_string(string, coeff)
    return total
