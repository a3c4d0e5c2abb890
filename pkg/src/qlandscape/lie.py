"""Lie closures of Pauli-sum generator sets over exact rational arithmetic.

The closure maintains a row-echelon basis over the Pauli-string index set:
every stored element is normalized so that its smallest string (in a fixed
canonical order) has coefficient one, and that string appears in no earlier
element.  Reducing a candidate sum repeatedly eliminates its smallest string
against the matching pivot row; the candidate is independent exactly when a
nonzero residual with an unclaimed pivot remains.  No tolerance is involved.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .paulis import PauliSum, PauliTerm, pauli_commutator

__all__ = ["LieBasis", "lie_closure"]


def _pivot_key(term: PauliTerm) -> tuple[int, int]:
    return (term.x, term.z)


@dataclass
class LieBasis:
    """Basis of the real span of a Lie closure.

    ``elements`` are the reduced, pivot-normalized sums in insertion order;
    ``pivots`` maps each pivot string to its element index.  ``cap_hit`` is
    set when the closure loop stopped at ``dim_cap`` with commutator pairs
    still unprocessed, in which case closedness is not certified.
    """

    n: int
    elements: list[PauliSum] = field(default_factory=list)
    pivots: dict[PauliTerm, int] = field(default_factory=dict)
    cap_hit: bool = False

    @property
    def dim(self) -> int:
        return len(self.elements)

    def reduce(self, s: PauliSum) -> PauliSum:
        """Residual of ``s`` after forward elimination against the basis."""
        while not s.is_zero:
            lead = min(s.terms, key=_pivot_key)
            idx = self.pivots.get(lead)
            if idx is None:
                return s
            s = s - s.terms[lead] * self.elements[idx]
        return s

    def contains(self, s: PauliSum) -> bool:
        return self.reduce(s).is_zero

    def _insert(self, residual: PauliSum) -> int:
        lead = min(residual.terms, key=_pivot_key)
        normalized = (Fraction(1) / residual.terms[lead]) * residual
        self.elements.append(normalized)
        self.pivots[lead] = len(self.elements) - 1
        return len(self.elements) - 1

    def add(self, s: PauliSum) -> int | None:
        """Reduce and insert; returns the new index or None if dependent."""
        residual = self.reduce(s)
        if residual.is_zero:
            return None
        return self._insert(residual)

    def verify_closed(self) -> bool:
        """Check every pairwise commutator reduces to zero against the basis."""
        for i, a in enumerate(self.elements):
            for b in self.elements[i + 1 :]:
                if not self.contains(pauli_commutator(a, b)):
                    return False
        return True

    # -- persistence ---------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"n={self.n} dim={self.dim}"]
        for k, el in enumerate(self.elements):
            lines.append(f"# element {k}")
            lines.append(el.to_text())
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())


def lie_closure(generators: list[PauliSum], dim_cap: int | None = None) -> LieBasis:
    """Breadth-first Lie closure of ``i * generators`` under commutation.

    Parameters
    ----------
    generators : list of PauliSum
        Nonempty, traceless, all on the same qubit count.
    dim_cap : int, optional
        Stop as soon as this many independent elements are found.  Defaults
        to ``4^n - 1``, the dimension of the full traceless algebra, which no
        closure can exceed.

    Returns
    -------
    LieBasis
        Closed under commutation unless ``cap_hit`` is set.
    """
    if not generators:
        raise ValueError("generator list is empty")
    n = generators[0].n
    if any(g.n != n for g in generators):
        raise ValueError("generators act on different qubit counts")
    for g in generators:
        if g.is_zero:
            raise ValueError("zero generator")
        if not g.is_traceless:
            raise ValueError("generators must be traceless (no identity term)")
    cap = dim_cap if dim_cap is not None else 4**n - 1
    if cap < 1:
        raise ValueError("dim_cap must be at least 1")

    basis = LieBasis(n)
    for g in generators:
        if basis.dim < cap:
            basis.add(g)

    pairs: deque[tuple[int, int]] = deque(
        (i, j) for j in range(basis.dim) for i in range(j)
    )
    while pairs:
        if basis.dim >= cap:
            basis.cap_hit = True
            break
        i, j = pairs.popleft()
        residual = basis.reduce(pauli_commutator(basis.elements[i], basis.elements[j]))
        if residual.is_zero:
            continue
        new = basis._insert(residual)
        pairs.extend((k, new) for k in range(new))
    return basis
