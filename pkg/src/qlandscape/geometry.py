"""Quantum and classical Fisher information, orbit dimensions, and rank
reports for parametrized circuits.

Three independent routes to the same quantum Fisher information matrix are
provided: the defining overlap formula on derivative states (:func:`qfim`),
a double parameter-shift of the state fidelity (:func:`qfim_shift_rule`),
and the rank-one decomposition over an orthonormal basis containing the
input state (:func:`qfim_rank_one_form`).  They agree to 1e-8 and are
cross-checked in the test suite; disagreement signals a broken simulator.

Numerical rank decisions all flow through :func:`spectrum_report`, which
records the spectral gap at the cut so borderline calls are visible instead
of silent.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .circuits import AnsatzSpec, PauliAction, shiftable_terms
from .lie import LieBasis

__all__ = [
    "QfimMatrix",
    "SpectrumReport",
    "qfim",
    "qfim_shift_rule",
    "qfim_rank_one_form",
    "qfim_unitary",
    "classical_fim",
    "orbit_dimension",
    "state_sector_dimension",
    "effective_dimension_d1",
    "spectrum_report",
]

RANK_TOL = 1e-8
GAP_WARN = 1e3


@dataclass
class QfimMatrix:
    """M x M quantum Fisher information at a point, tagged by input state."""

    entries: np.ndarray
    theta: np.ndarray
    state_tag: str = ""

    @property
    def m(self) -> int:
        return self.entries.shape[0]


def _finalize_qfim(f: np.ndarray, theta, tag: str) -> QfimMatrix:
    asym = np.abs(f - f.T).max()
    scale = max(1.0, np.abs(f).max())
    if asym > 1e-10 * scale:
        raise ValueError(f"QFIM asymmetry {asym:.3e} exceeds tolerance")
    f = 0.5 * (f + f.T)
    w = np.linalg.eigvalsh(f)
    if w[-1] > 0 and w[0] < -1e-8 * w[-1]:
        raise ValueError(f"QFIM has a significant negative eigenvalue {w[0]:.3e}")
    return QfimMatrix(f, np.array(theta, dtype=float), tag)


def _resolve_state(a: AnsatzSpec, psi) -> tuple[np.ndarray, str]:
    if psi is None:
        return a.compile().input_state(), a.input_state_tag
    return np.asarray(psi, dtype=complex), "custom"


def qfim(a: AnsatzSpec, theta, psi=None) -> QfimMatrix:
    """QFIM from derivative-state overlaps:
    ``F_ij = 4 Re[<d_i|d_j> - <d_i|psi><psi|d_j>]``."""
    theta = a.check_params(theta)
    state, tag = _resolve_state(a, psi)
    plan = a.compile()
    d_states = plan.derivative_states(theta, state)
    psi_out = plan.apply(theta, state)
    gram = d_states.conj() @ d_states.T
    v = d_states.conj() @ psi_out
    f = 4.0 * np.real(gram - np.outer(v, v.conj()))
    return _finalize_qfim(f, theta, tag)


def qfim_shift_rule(a: AnsatzSpec, theta, psi=None) -> QfimMatrix:
    """QFIM from double-shifted fidelity evaluations.

    With the bra frozen at the base point and ``G(s, s') = |<psi(theta)|
    psi(theta + shifts)>|^2``, each entry is

        F_ij = -1/2 sum_{t in terms(i), u in terms(j)}
               [G(t+, u+) + G(t-, u-) - G(t+, u-) - G(t-, u+)]

    summing pi/2 shifts over the generator terms carrying each parameter.
    """
    theta = a.check_params(theta)
    state, tag = _resolve_state(a, psi)
    plan = a.compile()
    terms = shiftable_terms(a)
    base = plan.apply(theta, state)
    half_pi = 0.5 * np.pi

    def fidelity(shifts: dict) -> float:
        shifted = plan.apply(theta, state, shifts=shifts)
        return abs(np.sum(base.conj() * shifted)) ** 2

    m = a.M
    f = np.zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            acc = 0.0
            for ti in terms[i]:
                for tj in terms[j]:
                    for si, sj, sgn in ((1, 1, 1), (-1, -1, 1), (1, -1, -1), (-1, 1, -1)):
                        shifts: dict = {}
                        key_i = (i, ti)
                        shifts[key_i] = shifts.get(key_i, 0.0) + si * half_pi
                        key_j = (j, tj)
                        shifts[key_j] = shifts.get(key_j, 0.0) + sj * half_pi
                        acc += sgn * fidelity(shifts)
            f[i, j] = f[j, i] = -0.5 * acc
    return _finalize_qfim(f, theta, tag)


def qfim_rank_one_form(a: AnsatzSpec, theta, psi=None) -> QfimMatrix:
    """QFIM assembled from its rank-one decomposition.

    With ``a_i = Htilde_i |psi>`` and an orthonormal basis ``{|m>}``
    containing the input state,

        F = 4 sum_{m != psi} (R_m R_m^T + I_m I_m^T),
        R_m(i) = Re <m|a_i>,  I_m(i) = Im <m|a_i>,

    a sum of 2d-2 positive-semidefinite rank-one matrices.
    """
    theta = a.check_params(theta)
    state, tag = _resolve_state(a, psi)
    plan = a.compile()
    actions = plan.conjugated_actions(theta, state[None, :])[:, 0, :]  # (M, d)
    d = plan.d
    x = np.eye(d, dtype=complex)
    x[:, 0] = state
    q, _ = np.linalg.qr(x)
    phase = np.vdot(q[:, 0], state)
    q[:, 0] *= phase  # pin the first basis vector to the state exactly
    coords = actions @ q.conj()
    coords = coords[:, 1:]  # drop the m = psi column
    re, im = coords.real, coords.imag
    f = 4.0 * (re @ re.T + im @ im.T)
    return _finalize_qfim(f, theta, tag)


def qfim_unitary(a: AnsatzSpec, theta) -> QfimMatrix:
    """QFIM of the circuit run on half of a maximally entangled pair.

    This is the information matrix the compilation fidelity test probes: the
    n-qubit circuit acting on one half of a 2n-qubit maximally entangled
    state.  In terms of the conjugated generators it reduces to

        F_ij = (4/d) Re Tr[Htilde_i Htilde_j]
               - (4/d^2) Tr[Htilde_i] Tr[Htilde_j].
    """
    theta = a.check_params(theta)
    plan = a.compile()
    stack = plan.htilde_stack(theta)
    gram = np.real(np.einsum("iab,jba->ij", stack, stack))
    traces = np.real(np.einsum("iaa->i", stack))
    d = plan.d
    f = (4.0 / d) * gram - (4.0 / d**2) * np.outer(traces, traces)
    return _finalize_qfim(f, theta, "entangled_pair")


def classical_fim(a: AnsatzSpec, theta, psi=None, prob_floor: float = 1e-12) -> np.ndarray:
    """Fisher information of the computational-basis outcome distribution
    ``p_z = |<z|psi(theta)>|^2``; outcomes below ``prob_floor`` are removable
    0/0 terms and are excluded."""
    theta = a.check_params(theta)
    state, _ = _resolve_state(a, psi)
    plan = a.compile()
    d_states = plan.derivative_states(theta, state)
    psi_out = plan.apply(theta, state)
    probs = np.abs(psi_out) ** 2
    dp = 2.0 * np.real(d_states * psi_out.conj()[None, :])
    keep = probs > prob_floor
    w = dp[:, keep] / np.sqrt(probs[keep])[None, :]
    f = w @ w.T
    return 0.5 * (f + f.T)


def state_sector_dimension(basis: LieBasis, psi, tol: float = RANK_TOL) -> int:
    """Dimension of the closure's action on the state's invariant sector.

    Builds the minimal subspace containing ``psi`` that is invariant under
    every basis element (the sector of the algebra's symmetries that the
    state respects), restricts each basis element to it, and returns the
    real dimension of the span of the restrictions.  For a state that
    breaks no symmetry of the generators this equals the closure dimension
    (possibly minus directions that act trivially on the sector); for a
    symmetric state it is strictly smaller, e.g. the ring-chain alternating
    ansatz on the uniform-superposition input drops from ``3n - 1`` to
    ``3n/2``.
    """
    state = np.asarray(psi, dtype=complex)
    actions = [PauliAction(e) for e in basis.elements]
    cols: list[np.ndarray] = [state / np.linalg.norm(state)]
    frontier = list(cols)
    while frontier:
        new: list[np.ndarray] = []
        for v in frontier:
            for act in actions:
                w = act.apply(v)
                for _ in range(2):  # two Gram-Schmidt passes for stability
                    for c in cols:
                        w = w - np.vdot(c, w) * c
                nrm = np.linalg.norm(w)
                if nrm > 1e-9:
                    w = w / nrm
                    cols.append(w)
                    new.append(w)
        frontier = new
    q = np.stack(cols, axis=1)
    restricted = [q.conj().T @ act.apply(q.T).T for act in actions]
    vecs = np.stack(
        [np.concatenate([r.real.ravel(), r.imag.ravel()]) for r in restricted], axis=1
    )
    s = np.linalg.svd(vecs, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def orbit_dimension(basis: LieBasis, psi) -> int:
    """Real dimension of the group orbit through ``psi``, modulo global phase.

    Stacks the projected tangent vectors ``(1 - |psi><psi|) S_nu |psi>`` as
    real columns and returns their numerical rank (relative tolerance 1e-8).
    """
    state = np.asarray(psi, dtype=complex)
    cols = []
    for element in basis.elements:
        v = PauliAction(element).apply(state)
        v = v - state * np.vdot(state, v)
        cols.append(np.concatenate([v.real, v.imag]))
    if not cols:
        return 0
    mat = np.stack(cols, axis=1)
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def effective_dimension_d1(a: AnsatzSpec, theta, dataset) -> float:
    """Mean QFIM rank over the training states (uniform weights)."""
    states = list(dataset)
    if not states:
        raise ValueError("dataset is empty")
    ranks = [
        spectrum_report(qfim(a, theta, psi).entries).rank for psi in states
    ]
    return float(np.mean(ranks))


@dataclass
class SpectrumReport:
    """Eigenvalues (descending), the rank decision, and the gap at the cut.

    ``gap`` is the ratio of the smallest counted eigenvalue to the largest
    discarded one (inf when nothing positive is discarded), so a borderline
    rank call is visible in the report rather than silent.
    """

    eigenvalues: np.ndarray
    rank: int
    gap: float
    tolerance: float

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0

    def summary(self) -> dict:
        return {
            "rank": self.rank,
            "gap": self.gap,
            "tolerance": self.tolerance,
            "lambda_max": self.lambda_max,
        }

    def save(self, prefix) -> None:
        """Write ``<prefix>.csv`` (index, eigenvalue) and ``<prefix>.json``."""
        with open(f"{prefix}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "eigenvalue"])
            for k, val in enumerate(self.eigenvalues):
                writer.writerow([k, f"{val:.17g}"])
        with open(f"{prefix}.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")


def spectrum_report(matrix: np.ndarray, tol: float = RANK_TOL) -> SpectrumReport:
    """Eigendecompose a real symmetric matrix and decide its numerical rank.

    ``rank = #{lambda_i > tol * lambda_max}`` (zero when ``lambda_max <= 0``).
    Emits a warning when the gap at the cut is below 1e3.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    asym = np.abs(m - m.T).max() if m.size else 0.0
    if asym > 1e-8 * max(1.0, np.abs(m).max()):
        raise ValueError(f"matrix asymmetry {asym:.3e} beyond 1e-8")
    m = 0.5 * (m + m.T)
    w = np.linalg.eigvalsh(m)[::-1]
    if w.size == 0 or w[0] <= 0.0:
        return SpectrumReport(w, 0, math.inf, tol)
    cut = tol * w[0]
    rank = int(np.sum(w > cut))
    if rank < w.size and w[rank] > 0.0:
        gap = float(w[rank - 1] / w[rank])
    else:
        gap = math.inf
    if gap < GAP_WARN:
        warnings.warn(
            f"rank decision is borderline: gap {gap:.3e} < {GAP_WARN:.0e} "
            f"at rank {rank}",
            stacklevel=2,
        )
    return SpectrumReport(w, rank, gap, tol)
