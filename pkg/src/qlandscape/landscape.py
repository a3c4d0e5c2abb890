"""Loss functions, gradients, and Hessians for eigensolver, compilation, and
autoencoding tasks.

Two families of losses are handled:

* linear in the evolved density matrix,
  ``L = offset + sum_s c_s <psi_s| U^dag O U |psi_s>``, which covers the
  energy objective (single state, c = 1, O = H), the generic weighted form,
  and the autoencoder objective (``c_s = -1/|S|`` against the trash-qubit
  projector, plus the constant ``|S|``);
* compilation overlaps built from ``T(theta) = Tr[V^dag U(theta)]``:
  ``L1 = 2d - 2 Re T`` and ``L2 = 1 - |T|^2 / d^2``.

Gradients come in two interchangeable backends (exact adjoint sweeps and
two-point parameter shifts) that must agree to 1e-8; Hessians come from
exact conjugated-generator contractions, with a double parameter-shift
backend and closed forms at compilation optima as cross-checks.

Everything is written against a batch axis: ``loss_batch`` and
``make_loss_grad`` map ``(B, M)`` parameter blocks to ``(B,)`` losses so a
whole sweep point trains in one vectorized pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circuits import AnsatzSpec, PauliAction, shiftable_terms
from .paulis import PauliSum

__all__ = [
    "LossSpec",
    "HessianMatrix",
    "loss",
    "loss_batch",
    "gradient",
    "hessian",
    "hessian_linear",
    "hessian_compile",
    "hessian_shift_rule",
    "compile_hessian_closed_form",
    "make_loss_grad",
    "target_value",
    "trash_projector_diagonal",
]


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


class _Observable:
    """Uniform applier over PauliSum / diagonal / dense observables."""

    def __init__(self, obs):
        if isinstance(obs, PauliSum):
            self._action = PauliAction(obs)
            self._mode = "pauli"
        else:
            arr = np.asarray(obs)
            if arr.ndim == 1:
                self._diag = arr.astype(complex)
                self._mode = "diag"
            elif arr.ndim == 2:
                if np.abs(arr - arr.conj().T).max() > 1e-10:
                    raise ValueError("observable must be Hermitian")
                self._dense = arr.astype(complex)
                self._mode = "dense"
            else:
                raise ValueError("observable must be a PauliSum, diagonal, or matrix")
        self.raw = obs

    def apply(self, psi: np.ndarray) -> np.ndarray:
        if self._mode == "pauli":
            return self._action.apply(psi)
        if self._mode == "diag":
            return psi * self._diag
        return psi @ self._dense.T

    def dense(self, d: int) -> np.ndarray:
        if self._mode == "pauli":
            return self.raw.to_matrix()
        if self._mode == "diag":
            return np.diag(self._diag)
        return self._dense


def trash_projector_diagonal(n: int, n_trash: int) -> np.ndarray:
    """Diagonal of ``|0><0|^(n_trash) (x) 1`` with the trash block on the
    first ``n_trash`` qubits."""
    if not 0 < n_trash < n:
        raise ValueError("need 0 < n_trash < n")
    idx = np.arange(1 << n)
    mask = (1 << n_trash) - 1
    return np.where((idx & mask) == 0, 1.0, 0.0)


# ---------------------------------------------------------------------------
# loss specification
# ---------------------------------------------------------------------------


@dataclass
class LossSpec:
    """One of the supported objectives; build through the classmethods."""

    kind: str
    hamiltonian: PauliSum | None = None
    states: np.ndarray | None = None  # (S, d) rows
    coeffs: np.ndarray | None = None  # (S,)
    observable: object = None
    target_unitary: np.ndarray | None = None
    offset: float = 0.0
    n_trash: int | None = None
    _obs: _Observable | None = field(default=None, repr=False, compare=False)

    @classmethod
    def vqe_energy(cls, hamiltonian: PauliSum) -> "LossSpec":
        return cls(kind="vqe", hamiltonian=hamiltonian)

    @classmethod
    def linear(cls, states, coeffs, observable) -> "LossSpec":
        states = np.atleast_2d(np.asarray(states, dtype=complex))
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (states.shape[0],):
            raise ValueError("one real coefficient per state is required")
        return cls(kind="linear", states=states, coeffs=coeffs, observable=observable)

    @classmethod
    def compile_l1(cls, target: np.ndarray) -> "LossSpec":
        return cls(kind="compile_l1", target_unitary=_check_unitary(target))

    @classmethod
    def compile_l2(cls, target: np.ndarray) -> "LossSpec":
        return cls(kind="compile_l2", target_unitary=_check_unitary(target))

    @classmethod
    def autoencoder(cls, dataset, n: int, n_trash: int) -> "LossSpec":
        states = np.atleast_2d(np.asarray(dataset, dtype=complex))
        if states.shape[0] == 0:
            raise ValueError("dataset is empty")
        size = states.shape[0]
        return cls(
            kind="autoencoder",
            states=states,
            coeffs=np.full(size, -1.0 / size),
            observable=trash_projector_diagonal(n, n_trash),
            offset=float(size),
            n_trash=n_trash,
        )

    @property
    def is_linear_form(self) -> bool:
        return self.kind in ("vqe", "linear", "autoencoder")

    @property
    def is_compile(self) -> bool:
        return self.kind in ("compile_l1", "compile_l2")

    def obs(self) -> _Observable:
        if self._obs is None:
            raw = self.hamiltonian if self.kind == "vqe" else self.observable
            self._obs = _Observable(raw)
        return self._obs

    def bound_states(self, a: AnsatzSpec) -> tuple[np.ndarray, np.ndarray]:
        """Input states and weights of the linear form, resolved against the
        ansatz (the energy objective runs on the ansatz input state)."""
        if self.kind == "vqe":
            return a.compile().input_state()[None, :], np.array([1.0])
        return self.states, self.coeffs


def _check_unitary(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    d = v.shape[0]
    if v.shape != (d, d) or np.linalg.norm(v.conj().T @ v - np.eye(d)) > 1e-10:
        raise ValueError("compilation target must be unitary to 1e-10")
    return v


@dataclass
class HessianMatrix:
    entries: np.ndarray
    theta: np.ndarray
    loss_tag: str


# ---------------------------------------------------------------------------
# loss and gradient evaluation
# ---------------------------------------------------------------------------


def _compile_overlap(spec: LossSpec, a: AnsatzSpec, theta_b, shifts=None) -> np.ndarray:
    """T(theta) = Tr[V^dag U(theta)] for a (B, M) parameter block."""
    plan = a.compile()
    d = plan.d
    rows = np.broadcast_to(np.eye(d, dtype=complex), (theta_b.shape[0], d, d)).copy()
    rows = plan.apply(theta_b[:, None, :], rows, shifts=shifts)
    return np.sum(rows * spec.target_unitary.conj().T, axis=(-2, -1))


def loss_batch(spec: LossSpec, a: AnsatzSpec, theta_b, shifts=None) -> np.ndarray:
    """Loss values for a (B, M) block of parameter vectors."""
    theta_b = np.atleast_2d(a.check_params(theta_b))
    plan = a.compile()
    if spec.is_compile:
        t = _compile_overlap(spec, a, theta_b, shifts)
        d = plan.d
        if spec.kind == "compile_l1":
            return 2.0 * d - 2.0 * t.real
        return 1.0 - np.abs(t) ** 2 / d**2
    states, coeffs = spec.bound_states(a)
    psi = np.broadcast_to(states, (theta_b.shape[0],) + states.shape).copy()
    psi = plan.apply(theta_b[:, None, :], psi, shifts=shifts)
    per_state = np.sum(psi.conj() * spec.obs().apply(psi), axis=-1).real
    return spec.offset + np.sum(per_state * coeffs, axis=-1)


def loss(spec: LossSpec, a: AnsatzSpec, theta) -> float:
    return float(loss_batch(spec, a, np.asarray(theta, dtype=float)[None, :])[0])


def make_loss_grad(spec: LossSpec, a: AnsatzSpec) -> Callable:
    """Batched exact loss-and-gradient function ``(B, M) -> ((B,), (B, M))``.

    Linear-form losses use an adjoint double sweep (one forward pass, one
    backward pass undoing each slot); compilation losses recur the matrix
    ``K_j = U_(<=j) V^dag U_(>j)`` so each entry is a sparse Pauli trace.
    """
    plan = a.compile()
    if spec.is_linear_form:
        states, coeffs = spec.bound_states(a)

        def fn(theta_b: np.ndarray):
            theta_b = np.atleast_2d(theta_b)
            b = theta_b.shape[0]
            ang = theta_b[:, None, :]
            psi = np.broadcast_to(states, (b,) + states.shape).copy()
            psi = plan.apply(ang, psi)
            lam = spec.obs().apply(psi)
            per_state = np.sum(psi.conj() * lam, axis=-1).real
            value = spec.offset + np.sum(per_state * coeffs, axis=-1)
            grad = np.empty((b, theta_b.shape[1]))
            cur = psi
            for op in reversed(plan.ops):
                if op.kind == "rot":
                    t = ang[..., op.param]
                    hpsi = op.action.apply(cur)
                    inner = np.sum(lam.conj() * hpsi, axis=-1).imag
                    grad[:, op.param] = 2.0 * np.sum(inner * coeffs, axis=-1)
                    cur = op.inv(cur, t)
                    lam = op.inv(lam, t)
                else:
                    cur = op.inv(cur)
                    lam = op.inv(lam)
            return value, grad

        return fn

    vd = spec.target_unitary.conj().T
    d = plan.d

    def fn(theta_b: np.ndarray):
        theta_b = np.atleast_2d(theta_b)
        b = theta_b.shape[0]
        ang = theta_b[:, None, :]
        rows = np.broadcast_to(np.eye(d, dtype=complex), (b, d, d)).copy()
        rows = plan.apply(ang, rows)
        t_val = np.sum(rows * spec.target_unitary.conj().T, axis=(-2, -1))
        k = np.matmul(rows.transpose(0, 2, 1), vd)  # U V^dag
        grad_t = np.empty((b, theta_b.shape[1]), dtype=complex)
        for op in reversed(plan.ops):
            if op.kind == "rot":
                grad_t[:, op.param] = -1j * op.action.trace_with(k)
                t = theta_b[:, op.param][:, None]
                k = op.inv(k.swapaxes(-1, -2), t).swapaxes(-1, -2)
                k = op.rmul(k, theta_b[:, op.param])
            else:
                k = op.inv(k.swapaxes(-1, -2)).swapaxes(-1, -2)
                k = op.rmul(k)
        if spec.kind == "compile_l1":
            value = 2.0 * d - 2.0 * t_val.real
            grad = -2.0 * grad_t.real
        else:
            value = 1.0 - np.abs(t_val) ** 2 / d**2
            grad = -(2.0 / d**2) * (grad_t * t_val.conj()[:, None]).real
        return value, grad

    return fn


def _shift_params(spec: LossSpec) -> tuple[float, float]:
    """(shift, gradient prefactor) for the two-point rule.

    Expectation-type losses are frequency-1 in each +-1/2-eigenvalue term
    (pi/2 shifts); the trace overlap itself is linear in the circuit, so
    ``compile_l1`` oscillates at half frequency and needs pi shifts.
    """
    if spec.kind == "compile_l1":
        return np.pi, 0.25
    return 0.5 * np.pi, 0.5


def gradient(spec: LossSpec, a: AnsatzSpec, theta, method: str = "exact") -> np.ndarray:
    """Loss gradient; ``method`` is ``"exact"`` or ``"shift"`` and the two
    backends agree to 1e-8."""
    theta = a.check_params(np.asarray(theta, dtype=float))
    if method == "exact":
        return make_loss_grad(spec, a)(theta[None, :])[1][0]
    if method != "shift":
        raise ValueError(f"unknown gradient method {method!r}")
    terms = shiftable_terms(a)
    shift, factor = _shift_params(spec)
    grad = np.zeros(a.M)
    for j in range(a.M):
        acc = 0.0
        for k in terms[j]:
            plus = loss_batch(spec, a, theta[None, :], shifts={(j, k): shift})[0]
            minus = loss_batch(spec, a, theta[None, :], shifts={(j, k): -shift})[0]
            acc += factor * (plus - minus)
        grad[j] = acc
    return grad


# ---------------------------------------------------------------------------
# Hessians
# ---------------------------------------------------------------------------


def _symmetrize_upper(upper: np.ndarray) -> np.ndarray:
    return np.triu(upper) + np.triu(upper, 1).T


def hessian_linear(spec: LossSpec, a: AnsatzSpec, theta) -> HessianMatrix:
    """Exact Hessian of a linear-form loss at any point.

    For ``i <= j`` the matrix element is
    ``2 Re Tr[Ht_i rho Ht_j O_f] - 2 Re Tr[rho Ht_i Ht_j O_f]`` with
    ``O_f = U^dag O U``, evaluated through conjugated-generator actions on
    the training states.  (Differentiating the gradient also produces a
    ``Tr[[[Ht_i, Ht_j], rho] O_f]`` term; it merges into the ordering of the
    product above, which is why the index order matters and only the upper
    triangle is computed directly.)
    """
    if not spec.is_linear_form:
        raise ValueError("hessian_linear needs a linear-form loss")
    theta = a.check_params(np.asarray(theta, dtype=float))
    plan = a.compile()
    states, coeffs = spec.bound_states(a)
    u = plan.unitary(theta)
    o_f = u.conj().T @ spec.obs().dense(plan.d) @ u
    a_stack = plan.conjugated_actions(theta, states)  # (M, S, d)
    w = states @ o_f.T  # rows O_f |psi_s>
    c_stack = plan.conjugated_actions(theta, w)
    e_stack = a_stack @ o_f.T
    t1 = np.einsum("isd,jsd,s->ij", a_stack.conj(), c_stack, coeffs)
    t2 = np.einsum("jsd,isd,s->ij", a_stack.conj(), e_stack, coeffs)
    upper = 2.0 * (t2 - t1).real
    h = _symmetrize_upper(upper)
    return HessianMatrix(h, theta, spec.kind)


def _compile_pieces(a: AnsatzSpec, theta, v: np.ndarray):
    plan = a.compile()
    stack = plan.htilde_stack(theta)
    w = v.conj().T @ plan.unitary(theta)
    t_val = np.trace(w)
    dt = -1j * np.einsum("ab,jba->j", w, stack)
    q = np.einsum("ab,jbc,ica->ij", w, stack, stack)  # q[i,j] = Tr[W Ht_j Ht_i]
    ddt = -_symmetrize_upper_complex(q)
    return t_val, dt, ddt


def _symmetrize_upper_complex(q: np.ndarray) -> np.ndarray:
    return np.triu(q) + np.triu(q, 1).T


def hessian_compile(kind: str, a: AnsatzSpec, theta, target: np.ndarray) -> HessianMatrix:
    """Exact Hessian of a compilation loss anywhere in the landscape, from
    the second derivatives of the trace overlap:
    ``d_i d_j T = -Tr[V^dag U Ht_j Ht_i]`` for ``i <= j``."""
    if kind not in ("l1", "l2", "compile_l1", "compile_l2"):
        raise ValueError(f"unknown compilation loss {kind!r}")
    kind = kind.removeprefix("compile_")
    theta = a.check_params(np.asarray(theta, dtype=float))
    v = _check_unitary(target)
    d = a.d
    t_val, dt, ddt = _compile_pieces(a, theta, v)
    if kind == "l1":
        h = -2.0 * ddt.real
    else:
        h = -(2.0 / d**2) * ((ddt * np.conj(t_val)).real + np.outer(dt, dt.conj()).real)
    h = 0.5 * (h + h.T)
    return HessianMatrix(h, theta, f"compile_{kind}")


def compile_hessian_closed_form(kind: str, a: AnsatzSpec, theta) -> np.ndarray:
    """Optimum-only closed forms, used as cross-checks against
    :func:`hessian_compile` at verified optima (loss below 1e-10):

        L1:  H_ij = 2 Re Tr[Ht_i Ht_j]
        L2:  H_ij = (2/d) Re Tr[Ht_i Ht_j] - (2/d^2) Tr[Ht_i] Tr[Ht_j]
    """
    kind = kind.removeprefix("compile_")
    theta = a.check_params(np.asarray(theta, dtype=float))
    plan = a.compile()
    stack = plan.htilde_stack(theta)
    gram = np.real(np.einsum("iab,jba->ij", stack, stack))
    if kind == "l1":
        return 2.0 * gram
    traces = np.real(np.einsum("iaa->i", stack))
    d = plan.d
    return (2.0 / d) * gram - (2.0 / d**2) * np.outer(traces, traces)


def hessian(spec: LossSpec, a: AnsatzSpec, theta) -> HessianMatrix:
    if spec.is_linear_form:
        return hessian_linear(spec, a, theta)
    return hessian_compile(spec.kind, a, theta, spec.target_unitary)


def hessian_shift_rule(spec: LossSpec, a: AnsatzSpec, theta) -> np.ndarray:
    """Hessian from the double two-point parameter-shift rule, summing the
    four-point combination over generator-term pairs."""
    theta = a.check_params(np.asarray(theta, dtype=float))
    terms = shiftable_terms(a)
    shift, factor = _shift_params(spec)
    m = a.M
    h = np.zeros((m, m))
    for i in range(m):
        for j in range(i, m):
            acc = 0.0
            for ti in terms[i]:
                for tj in terms[j]:
                    for si, sj, sgn in ((1, 1, 1), (-1, -1, 1), (1, -1, -1), (-1, 1, -1)):
                        shifts: dict = {}
                        key_i = (i, ti)
                        shifts[key_i] = shifts.get(key_i, 0.0) + si * shift
                        key_j = (j, tj)
                        shifts[key_j] = shifts.get(key_j, 0.0) + sj * shift
                        acc += sgn * loss_batch(spec, a, theta[None, :], shifts=shifts)[0]
            h[i, j] = h[j, i] = factor**2 * acc
    return h


def target_value(spec: LossSpec, a: AnsatzSpec) -> float | None:
    """Known optimum used for gap-based stopping and success labeling."""
    if spec.kind == "vqe":
        return float(np.linalg.eigvalsh(spec.hamiltonian.to_matrix())[0])
    if spec.is_compile:
        return 0.0
    if spec.kind == "autoencoder":
        # every fidelity term reaches 1 for a perfectly compressible dataset
        return float(spec.states.shape[0] - 1)
    return None
