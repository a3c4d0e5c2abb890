"""Dense state-vector simulation of layered periodic ansatzes.

A circuit is an ordered program of slots, each either a rotation
``exp(-i theta H)`` generated by a Pauli sum with mutually commuting terms,
or a fixed Clifford gate.  Rotations of commuting sums factor exactly into
per-string rotations ``exp(-i theta c P) = cos(c theta) I - i sin(c theta) P``,
so gate application is in-place amplitude updating with bit-mask gathers and
never materializes a matrix (except in :func:`full_unitary`).

All state operations act on the last axis of an array, so the same kernels
run a single ``(d,)`` state or a whole batch ``(..., d)`` of independent runs;
rotation angles broadcast against the batch axes.  Batched and single-state
execution produce bit-identical amplitudes because every kernel is
elementwise along the batch axes.

Basis convention: qubit ``q`` is bit ``q`` of the computational basis index
(qubit 0 is the leftmost character of Pauli text strings).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .lie import LieBasis, lie_closure
from .paulis import (
    CliffordGate,
    PauliSum,
    PauliTerm,
    conjugate_by_clifford,
    cz,
    sum_paulis,
)

__all__ = [
    "Rotation",
    "Gate",
    "AnsatzSpec",
    "apply_ansatz",
    "derivative_state",
    "full_unitary",
    "hva_tfim",
    "hea",
    "tfim_hamiltonian",
    "effective_generators",
    "dla_dimension",
    "input_state",
    "PauliAction",
]

MAX_DENSE_QUBITS = 12  # d*d complex storage guard for full_unitary and Hessians


@dataclass(frozen=True)
class Rotation:
    """Parametrized slot exp(-i theta H); ``param_index`` counts within the
    slot's block (prelude or layer)."""

    generator: PauliSum
    param_index: int


@dataclass(frozen=True)
class Gate:
    """Fixed Clifford slot."""

    gate: CliffordGate


Slot = Union[Rotation, Gate]


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


def _term_arrays(term: PauliTerm, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather indices and phases for the action of a Pauli string.

    ``(P psi)[b] = phase[b] * psi[perm[b]]`` with ``perm[b] = b XOR x`` and
    ``phase[b] = i^(x.z) * (-1)^(popcount((b XOR x) AND z))``.
    """
    idx = np.arange(d, dtype=np.intp)
    perm = idx ^ term.x
    counts = np.zeros(d, dtype=np.int64)
    v = (perm & term.z).astype(np.int64)  # popcount of (b^x) & z per basis state
    while v.any():
        counts += v & 1
        v >>= 1
    par = np.where(counts % 2 == 0, 1.0, -1.0)
    phase = (1j ** ((term.x & term.z).bit_count() % 4)) * par
    return perm, phase.astype(complex)


class PauliAction:
    """Compiled applier for a Pauli sum: ``apply`` computes ``H psi``."""

    def __init__(self, op: PauliSum):
        self.op = op
        self.n = op.n
        d = 1 << op.n
        self.terms = []
        for term, coeff in op.terms.items():
            perm, phase = _term_arrays(term, d)
            self.terms.append((float(coeff), perm, phase))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for coeff, perm, phase in self.terms:
            out += coeff * (psi[..., perm] * phase)
        return out

    def trace_with(self, k: np.ndarray) -> np.ndarray:
        """Tr[K H] along the last two axes of ``k``; K may be batched."""
        d = k.shape[-1]
        idx = np.arange(d)
        total = np.zeros(k.shape[:-2], dtype=complex)
        for coeff, perm, phase in self.terms:
            # Tr[K P] = sum_b K[b, b^x] P[b^x, b], and P[b^x, b] = phase[b^x]
            total += coeff * np.sum(k[..., idx, perm] * phase[perm], axis=-1)
        return total


class _RotOp:
    """exp(-i theta H) for a commuting-term Pauli sum."""

    kind = "rot"

    def __init__(self, generator: PauliSum, param: int, d: int):
        if not generator.terms_commute():
            raise ValueError(
                "rotation generator has non-commuting terms; split it into "
                "separate generators (one slot per commuting group)"
            )
        self.param = param
        self.generator = generator
        self.action = PauliAction(generator)
        self.terms = self.action.terms  # (coeff, perm, phase)

    def fwd(self, psi, t, term_shifts=None):
        for k, (coeff, perm, phase) in enumerate(self.terms):
            tt = t if not term_shifts or k not in term_shifts else t + term_shifts[k]
            ang = np.asarray(coeff * tt)
            c = np.cos(ang)[..., None]
            s = np.sin(ang)[..., None]
            psi = c * psi - 1j * s * (psi[..., perm] * phase)
        return psi

    def inv(self, psi, t, term_shifts=None):
        for k, (coeff, perm, phase) in enumerate(reversed(self.terms)):
            kk = len(self.terms) - 1 - k
            tt = t if not term_shifts or kk not in term_shifts else t + term_shifts[kk]
            ang = np.asarray(coeff * tt)
            c = np.cos(ang)[..., None]
            s = np.sin(ang)[..., None]
            psi = c * psi + 1j * s * (psi[..., perm] * phase)
        return psi

    def rmul(self, a, t):
        """A <- A @ U for matrices with columns on the last axis."""
        for coeff, perm, phase in reversed(self.terms):
            ang = np.asarray(coeff * t)
            c = np.cos(ang)[..., None, None]
            s = np.sin(ang)[..., None, None]
            a = c * a - 1j * s * (a[..., perm] * phase[perm])
        return a


class _CliffOp:
    """Fixed Clifford gate: diagonal sign/phase or basis permutation kernels."""

    kind = "cliff"
    param = None

    def __init__(self, gate: CliffordGate, n: int):
        self.gate = gate
        d = 1 << n
        idx = np.arange(d, dtype=np.intp)
        name = gate.name
        if name == "CZ":
            a, b = gate.qubits
            both = ((idx >> a) & 1) & ((idx >> b) & 1)
            self._diag = np.where(both == 1, -1.0, 1.0).astype(complex)
            self._mode = "diag"
        elif name == "S":
            (q,) = gate.qubits
            self._diag = np.where((idx >> q) & 1 == 1, 1j, 1.0).astype(complex)
            self._mode = "diag"
        elif name == "CNOT":
            c, t = gate.qubits
            flip = ((idx >> c) & 1) << t
            self._perm = idx ^ flip
            self._mode = "perm"
        elif name == "H":
            (q,) = gate.qubits
            self._lo = idx[(idx >> q) & 1 == 0]
            self._hi = self._lo | (1 << q)
            self._mode = "h"
        else:
            raise ValueError(f"unsupported gate {name}")

    def fwd(self, psi, t=None, term_shifts=None):
        if self._mode == "diag":
            return psi * self._diag
        if self._mode == "perm":
            return psi[..., self._perm]
        lo, hi = psi[..., self._lo], psi[..., self._hi]
        out = np.empty_like(psi)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        out[..., self._lo] = (lo + hi) * inv_sqrt2
        out[..., self._hi] = (lo - hi) * inv_sqrt2
        return out

    def inv(self, psi, t=None, term_shifts=None):
        if self._mode == "diag":
            return psi * self._diag.conj()
        return self.fwd(psi)  # CNOT and H are involutions

    def rmul(self, a, t=None):
        # CZ, S are diagonal and CNOT, H symmetric, so A @ U applies the
        # forward kernel along the column axis
        return self.fwd(a)


Op = Union[_RotOp, _CliffOp]


def input_state(tag: str, n: int) -> np.ndarray:
    d = 1 << n
    if tag == "plus_state":
        return np.full(d, 1.0 / np.sqrt(d), dtype=complex)
    if tag == "zero_state":
        psi = np.zeros(d, dtype=complex)
        psi[0] = 1.0
        return psi
    raise ValueError(f"unknown input state tag {tag!r}")


class CompiledAnsatz:
    """Flattened op list of a spec, with derivative and unitary helpers."""

    def __init__(self, spec: "AnsatzSpec"):
        self.spec = spec
        self.n = spec.n
        self.d = 1 << spec.n
        self.M = spec.M
        self.ops: list[Op] = []
        self.op_of_param: dict[int, int] = {}

        def emit(slots: Sequence[Slot], base: int):
            for slot in slots:
                if isinstance(slot, Rotation):
                    op = _RotOp(slot.generator, base + slot.param_index, self.d)
                    self.op_of_param[op.param] = len(self.ops)
                    self.ops.append(op)
                else:
                    self.ops.append(_CliffOp(slot.gate, self.n))

        emit(spec.prelude, 0)
        p = spec.prelude_params
        for layer in range(spec.L):
            emit(spec.layer, p + layer * spec.K)

    # -- application ---------------------------------------------------------

    def _angle(self, theta, param):
        theta = np.asarray(theta, dtype=float)
        return theta[..., param]

    def apply(self, theta, psi, shifts=None):
        """Apply the circuit; ``theta`` has shape (..., M) broadcasting
        against the batch axes of ``psi``; ``shifts`` maps
        ``(param_index, term_index) -> angle offset``."""
        per_param = None
        if shifts:
            per_param = {}
            for (j, k), off in shifts.items():
                per_param.setdefault(j, {})[k] = per_param.get(j, {}).get(k, 0.0) + off
        for op in self.ops:
            if op.kind == "rot":
                ts = per_param.get(op.param) if per_param else None
                psi = op.fwd(psi, self._angle(theta, op.param), ts)
            else:
                psi = op.fwd(psi)
        return psi

    def input_state(self) -> np.ndarray:
        return input_state(self.spec.input_state_tag, self.n)

    def derivative_state(self, theta, psi0, j: int) -> np.ndarray:
        """Forward-sweep derivative: gates through slot j, then -i H_j,
        then the remaining gates.  Unnormalized."""
        if not (0 <= j < self.M):
            raise IndexError(f"parameter index {j} out of range (M={self.M})")
        cut = self.op_of_param[j]
        psi = np.asarray(psi0, dtype=complex)
        for op in self.ops[: cut + 1]:
            psi = op.fwd(psi, self._angle(theta, op.param)) if op.kind == "rot" else op.fwd(psi)
        psi = -1j * self.ops[cut].action.apply(psi)
        for op in self.ops[cut + 1 :]:
            psi = op.fwd(psi, self._angle(theta, op.param)) if op.kind == "rot" else op.fwd(psi)
        return psi

    def derivative_states(self, theta, psi0) -> np.ndarray:
        """All M derivative states as an (M, d) array.

        One forward sweep stores the state after each parametrized slot; a
        reverse sweep accumulates the dense suffix propagator so each
        derivative costs one matrix-vector product.
        """
        theta = np.asarray(theta, dtype=float)
        psi = np.asarray(psi0, dtype=complex)
        after: dict[int, np.ndarray] = {}
        for op in self.ops:
            psi = op.fwd(psi, self._angle(theta, op.param)) if op.kind == "rot" else op.fwd(psi)
            if op.kind == "rot":
                after[op.param] = psi
        out = np.empty((self.M, self.d), dtype=complex)
        suffix = np.eye(self.d, dtype=complex)
        for op in reversed(self.ops):
            if op.kind == "rot":
                out[op.param] = suffix @ (-1j * op.action.apply(after[op.param]))
                suffix = op.rmul(suffix, self._angle(theta, op.param))
            else:
                suffix = op.rmul(suffix)
        return out

    def unitary(self, theta) -> np.ndarray:
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(
                f"full unitary needs d^2 storage; refusing n={self.n} > "
                f"{MAX_DENSE_QUBITS}"
            )
        rows = np.eye(self.d, dtype=complex)  # row b is the basis state |b>
        rows = self.apply(np.asarray(theta, dtype=float), rows)
        return rows.T

    def conjugated_actions(self, theta, vectors: np.ndarray) -> np.ndarray:
        """Stack ``out[j, s] = Htilde_j |vectors[s]>`` with ``Htilde_j`` the
        slot generator conjugated back through the circuit prefix ending at
        slot j inclusive."""
        theta = np.asarray(theta, dtype=float)
        vecs = np.atleast_2d(np.asarray(vectors, dtype=complex))
        phis = vecs.copy()
        vt = np.eye(self.d, dtype=complex)  # rows are columns of the prefix V
        out = np.empty((self.M,) + vecs.shape, dtype=complex)
        for op in self.ops:
            if op.kind == "rot":
                t = self._angle(theta, op.param)
                phis = op.fwd(phis, t)
                vt = op.fwd(vt, t)
                out[op.param] = op.action.apply(phis) @ vt.conj().T
            else:
                phis = op.fwd(phis)
                vt = op.fwd(vt)
        return out

    def htilde_stack(self, theta) -> np.ndarray:
        """Dense ``(M, d, d)`` stack of the conjugated generators."""
        if self.n > MAX_DENSE_QUBITS:
            raise ValueError(f"refusing dense stack at n={self.n}")
        theta = np.asarray(theta, dtype=float)
        vt = np.eye(self.d, dtype=complex)
        out = np.empty((self.M, self.d, self.d), dtype=complex)
        for op in self.ops:
            if op.kind == "rot":
                vt = op.fwd(vt, self._angle(theta, op.param))
                hvt = op.action.apply(vt)
                out[op.param] = vt.conj() @ hvt.T
            else:
                vt = op.fwd(vt)
        return out


@dataclass
class AnsatzSpec:
    """Ordered slot program: an optional one-shot prelude followed by L
    repetitions of ``layer``.  Trainable angles are ordered prelude first,
    then layer-major, matching the order slots are applied to the state.
    """

    n: int
    layer: tuple[Slot, ...]
    L: int
    prelude: tuple[Slot, ...] = ()
    input_state_tag: str = "zero_state"
    family: str = "custom"
    boundary: str | None = None
    _compiled: CompiledAnsatz | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        self.layer = tuple(self.layer)
        self.prelude = tuple(self.prelude)
        if self.L < 0:
            raise ValueError("layer count must be nonnegative")
        for block, name in ((self.prelude, "prelude"), (self.layer, "layer")):
            idx = sorted(
                s.param_index for s in block if isinstance(s, Rotation)
            )
            if idx != list(range(len(idx))):
                raise ValueError(f"{name} parameter indices must be 0..K-1 exactly once")
            for s in block:
                if isinstance(s, Rotation):
                    if s.generator.n != self.n:
                        raise ValueError("generator qubit count differs from ansatz")
                    if s.generator.is_zero or not s.generator.is_traceless:
                        raise ValueError("rotation generators must be traceless and nonzero")

    @property
    def K(self) -> int:
        return sum(1 for s in self.layer if isinstance(s, Rotation))

    @property
    def prelude_params(self) -> int:
        return sum(1 for s in self.prelude if isinstance(s, Rotation))

    @property
    def M(self) -> int:
        return self.prelude_params + self.K * self.L

    @property
    def d(self) -> int:
        return 1 << self.n

    def compile(self) -> CompiledAnsatz:
        if self._compiled is None:
            self._compiled = CompiledAnsatz(self)
        return self._compiled

    def check_params(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.M:
            raise ValueError(f"expected {self.M} parameters, got {theta.shape[-1]}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("parameters must be finite")
        return theta

    # -- JSON ----------------------------------------------------------------

    def to_json(self) -> str:
        doc: dict = {"family": self.family, "n": self.n, "L": self.L}
        if self.family == "hva_tfim":
            doc["boundary"] = self.boundary
        elif self.family == "custom":
            doc["input_state"] = self.input_state_tag
            doc["generators"] = [
                [[str(c), str(t)] for t, c in sorted(s.generator, key=lambda tc: str(tc[0]))]
                for s in self.layer
                if isinstance(s, Rotation)
            ]
        elif self.family != "hea":
            raise ValueError(f"cannot serialize family {self.family!r}")
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "AnsatzSpec":
        doc = json.loads(text)
        family = doc.get("family")
        if family == "hva_tfim":
            return hva_tfim(doc["n"], doc["L"], doc.get("boundary", "open"))
        if family == "hea":
            return hea(doc["n"], doc["L"])
        if family == "custom":
            n = doc["n"]
            gens = [
                sum_paulis(n, [(Fraction(c), s) for c, s in entries])
                for entries in doc["generators"]
            ]
            layer = tuple(Rotation(g, k) for k, g in enumerate(gens))
            return cls(
                n=n,
                layer=layer,
                L=doc["L"],
                input_state_tag=doc.get("input_state", "zero_state"),
                family="custom",
            )
        raise ValueError(f"unknown ansatz family {family!r}")


# ---------------------------------------------------------------------------
# spec-level operations
# ---------------------------------------------------------------------------


def apply_ansatz(a: AnsatzSpec, theta, psi_in=None) -> np.ndarray:
    """U(theta) |psi_in>; defaults to the ansatz input state."""
    theta = a.check_params(theta)
    plan = a.compile()
    psi = plan.input_state() if psi_in is None else np.asarray(psi_in, dtype=complex)
    out = plan.apply(theta, psi)
    assert abs(np.linalg.norm(out[..., :].reshape(-1, plan.d), axis=-1) - 1.0).max() < 1e-12
    return out


def derivative_state(a: AnsatzSpec, theta, psi_in, j: int) -> np.ndarray:
    """d|psi(theta)>/d theta_j, unnormalized."""
    theta = a.check_params(theta)
    return a.compile().derivative_state(theta, psi_in, j)


def full_unitary(a: AnsatzSpec, theta) -> np.ndarray:
    u = a.compile().unitary(a.check_params(theta))
    d = u.shape[0]
    assert np.linalg.norm(u.conj().T @ u - np.eye(d)) < 1e-10
    return u


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _tfim_bonds(n: int, boundary: str) -> list[tuple[int, int]]:
    if boundary not in ("open", "closed"):
        raise ValueError("boundary must be 'open' or 'closed'")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if boundary == "closed":
        bonds.append((n - 1, 0))
    return bonds


def _string(n: int, assignment: dict[int, str]) -> str:
    return "".join(assignment.get(q, "I") for q in range(n))


def tfim_hamiltonian(n: int, h: float = 1.0, boundary: str = "open") -> PauliSum:
    """H = -sum_i Z_i Z_{i+1} - h sum_i X_i on a chain of n spins."""
    entries: list[tuple[object, str]] = []
    for i, j in _tfim_bonds(n, boundary):
        entries.append((-1, _string(n, {i: "Z", j: "Z"})))
    for q in range(n):
        entries.append((-Fraction(h), _string(n, {q: "X"})))
    return sum_paulis(n, entries)


def hva_tfim(n: int, L: int, boundary: str = "open") -> AnsatzSpec:
    """Two-generator alternating ansatz for the transverse-field Ising chain.

    Each layer applies exp(-i beta/2 sum ZZ) then exp(-i gamma/2 sum X);
    the input state is |+>^n.
    """
    if n < 2:
        raise ValueError("need at least 2 qubits")
    half = Fraction(1, 2)
    g_zz = sum_paulis(
        n, [(half, _string(n, {i: "Z", j: "Z"})) for i, j in _tfim_bonds(n, boundary)]
    )
    g_x = sum_paulis(n, [(half, _string(n, {q: "X"})) for q in range(n)])
    layer = (Rotation(g_zz, 0), Rotation(g_x, 1))
    return AnsatzSpec(
        n=n,
        layer=layer,
        L=L,
        input_state_tag="plus_state",
        family="hva_tfim",
        boundary=boundary,
    )


def _hea_layer_slots(n: int) -> list[Slot]:
    half = Fraction(1, 2)
    slots: list[Slot] = []
    p = 0
    for offset in (0, 1):
        pairs = [(i, i + 1) for i in range(offset, n - 1, 2)]
        touched = sorted({q for pr in pairs for q in pr})
        for i, j in pairs:
            slots.append(Gate(cz(i, j)))
        for q in touched:
            slots.append(Rotation(PauliSum.from_string(_string(n, {q: "Y"}), half), p))
            p += 1
            slots.append(Rotation(PauliSum.from_string(_string(n, {q: "X"}), half), p))
            p += 1
    return slots


def hea(n: int, L: int) -> AnsatzSpec:
    """Hardware-efficient ansatz: Ry,Rx on every qubit up front, then L
    layers of CZ entanglers on alternating pairs, each followed by Ry,Rx on
    the qubits they touch.  Parameter count is 2n + L(4n-4).
    """
    if n < 2:
        raise ValueError("need at least 2 qubits")
    half = Fraction(1, 2)
    prelude: list[Slot] = []
    p = 0
    for q in range(n):
        prelude.append(Rotation(PauliSum.from_string(_string(n, {q: "Y"}), half), p))
        p += 1
        prelude.append(Rotation(PauliSum.from_string(_string(n, {q: "X"}), half), p))
        p += 1
    return AnsatzSpec(
        n=n,
        layer=tuple(_hea_layer_slots(n)),
        L=L,
        prelude=tuple(prelude),
        input_state_tag="zero_state",
        family="hea",
    )


# ---------------------------------------------------------------------------
# effective generators and the circuit DLA
# ---------------------------------------------------------------------------


def effective_generators(a: AnsatzSpec) -> list[PauliSum]:
    """Distinct rotation generators over one layer period (plus the prelude),
    each conjugated through the fixed-gate prefix preceding it."""
    prefix: list[CliffordGate] = []
    out: list[PauliSum] = []
    seen: set[PauliSum] = set()
    for slot in a.prelude + a.layer:
        if isinstance(slot, Gate):
            prefix.append(slot.gate)
            continue
        h = slot.generator
        for g in reversed(prefix):
            h = conjugate_by_clifford(h, g)
        if h not in seen:
            seen.add(h)
            out.append(h)
    return out


def dla_dimension(a: AnsatzSpec, dim_cap: int | None = None) -> int:
    """Dimension of the Lie closure of the ansatz's effective generators."""
    return lie_closure(effective_generators(a), dim_cap).dim


def shiftable_terms(a: AnsatzSpec) -> list[list[int]]:
    """Per-parameter generator-term indices for parameter-shift rules.

    Every term must carry coefficient +-1/2 (eigenvalues +-1/2) so the
    two-point rule with shifts of pi/2 applies verbatim; anything else is
    rejected.
    """
    plan = a.compile()
    per_param: list[list[int]] = [[] for _ in range(a.M)]
    for op in plan.ops:
        if op.kind != "rot":
            continue
        for k, (coeff, _, _) in enumerate(op.terms):
            if abs(abs(coeff) - 0.5) > 1e-15:
                raise ValueError(
                    f"parameter {op.param}: term coefficient {coeff} is not "
                    "+-1/2; the two-point shift rule does not apply"
                )
            per_param[op.param].append(k)
    return per_param


def ansatz_dla(a: AnsatzSpec, dim_cap: int | None = None) -> LieBasis:
    return lie_closure(effective_generators(a), dim_cap)
