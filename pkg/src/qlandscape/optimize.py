"""Deterministic full-batch Adam training against a known target value.

The update is the standard bias-corrected rule

    m <- b1 m + (1 - b1) g        mhat = m / (1 - b1^t)
    v <- b2 v + (1 - b2) g^2      vhat = v / (1 - b2^t)
    theta <- theta - lr * mhat / (sqrt(vhat) + eps_hat)

run with exact full-batch gradients until the loss gap to the target drops
below ``stop_gap`` or the iteration cap is hit.  A run is labeled a success
when its final gap is below 1e-7.

Many runs with independent seeds execute as one vectorized block: every
kernel is elementwise along the batch axis, so each run's trajectory is
bit-identical whether it trains alone or inside a batch.  Initial angles are
i.i.d. uniform on [-pi, pi) from a counter-based Philox generator keyed by
the run seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .circuits import AnsatzSpec
from .landscape import LossSpec, make_loss_grad, target_value

__all__ = ["AdamConfig", "AdamState", "RunRecord", "adam_step", "train", "train_batch",
           "init_params", "SUCCESS_TOL"]

SUCCESS_TOL = 1e-7


@dataclass
class AdamConfig:
    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_hat: float = 1e-7
    max_iters: int = 10_000
    stop_gap: float = 1e-12
    target_value: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 0 or self.stop_gap < 0.0:
            raise ValueError("max_iters and stop_gap must be nonnegative")

    def replace(self, **kw) -> "AdamConfig":
        data = self.__dict__ | kw
        return AdamConfig(**{k: data[k] for k in AdamConfig.__dataclass_fields__})


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0)


def adam_step(state: AdamState, grad: np.ndarray, theta: np.ndarray,
              cfg: AdamConfig) -> np.ndarray:
    """One bias-corrected update; mutates ``state`` and returns new theta."""
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient")
    state.t += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad**2
    mhat = state.m / (1.0 - cfg.beta1**state.t)
    vhat = state.v / (1.0 - cfg.beta2**state.t)
    return theta - cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.epsilon_hat)


@dataclass
class RunRecord:
    seed: int
    m: int
    loss_trace: np.ndarray
    final_loss: float
    iterations_used: int
    success: bool
    wall_time: float
    gap: float = 0.0
    failed: bool = False
    theta: np.ndarray = field(default=None, repr=False)


def init_params(m: int, seed) -> np.ndarray:
    """i.i.d. uniform [-pi, pi) angles from a Philox stream keyed by seed."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return rng.uniform(-np.pi, np.pi, m)


def train_batch(spec: LossSpec, a: AnsatzSpec, cfg: AdamConfig,
                seeds, keep_traces: bool = True) -> list[RunRecord]:
    """Run one Adam trajectory per seed, vectorized over the batch.

    Converged or failed runs are frozen and periodically compacted out of
    the batch; this changes nothing about the surviving trajectories because
    every kernel is elementwise along the batch axis.
    """
    seeds = list(seeds)
    fn = make_loss_grad(spec, a)
    b = len(seeds)
    m = a.M
    theta = np.stack([init_params(m, s) for s in seeds])
    state = AdamState.zeros((b, m))
    live = np.arange(b)
    traces = [np.empty(cfg.max_iters + 1) for _ in range(b)] if keep_traces else None
    records: dict[int, RunRecord] = {}
    start = time.perf_counter()
    target = cfg.target_value

    def finalize(row: int, run: int, loss_val: float, iters: int, failed: bool):
        gap = abs(loss_val - target)
        records[run] = RunRecord(
            seed=seeds[run],
            m=m,
            loss_trace=traces[run][: iters + 1].copy() if keep_traces else np.empty(0),
            final_loss=float(loss_val),
            iterations_used=iters,
            success=bool(not failed and gap < SUCCESS_TOL),
            wall_time=time.perf_counter() - start,
            gap=float(gap),
            failed=failed,
            theta=theta[row].copy(),
        )

    t = 0
    while True:
        value, grad = fn(theta)
        finite = np.isfinite(value) & np.all(np.isfinite(grad), axis=1)
        if keep_traces:
            for row, run in enumerate(live):
                traces[run][t] = value[row] if finite[row] else np.nan
        done = (~finite) | (np.abs(value - target) < cfg.stop_gap) | (t >= cfg.max_iters)
        if np.any(done):
            for row in np.nonzero(done)[0]:
                finalize(row, int(live[row]), value[row], t, not finite[row])
            keep = ~done
            if not np.any(keep):
                break
            theta = theta[keep]
            grad = grad[keep]
            state.m = state.m[keep]
            state.v = state.v[keep]
            live = live[keep]
        theta = adam_step(state, grad, theta, cfg)
        t += 1
    return [records[run] for run in range(b)]


def train(spec: LossSpec, a: AnsatzSpec, cfg: AdamConfig | None = None,
          seed=0, keep_traces: bool = True) -> RunRecord:
    """Single seeded run; equivalent to a one-element batch."""
    if cfg is None:
        tv = target_value(spec, a)
        cfg = AdamConfig(target_value=tv if tv is not None else 0.0)
    return train_batch(spec, a, cfg, [seed], keep_traces=keep_traces)[0]


def newton_polish(spec: LossSpec, a: AnsatzSpec, theta, steps: int = 3,
                  curvature_cut: float = 1e-6) -> np.ndarray:
    """Refine a converged point with Newton steps restricted to the clearly
    curved subspace of the exact Hessian.

    Adam stops when the *computed* loss gap reaches the stopping threshold,
    which leaves a parameter error of order sqrt(gap).  That error perturbs
    the Hessian's exact zero eigenvalues enough to blur rank decisions at
    the 1e-8 tolerance; a couple of pseudo-inverse Newton steps push the
    point to within rounding error of the optimum so curvature spectra are
    clean.  Flat directions are left untouched.
    """
    from .landscape import gradient, hessian  # local import avoids cycle at module load

    theta = np.asarray(theta, dtype=float).copy()
    for _ in range(steps):
        g = gradient(spec, a, theta)
        h = hessian(spec, a, theta).entries
        w, vecs = np.linalg.eigh(h)
        keep = w > curvature_cut * max(w.max(), 0.0)
        if not np.any(keep):
            break
        theta = theta - vecs[:, keep] @ ((vecs[:, keep].T @ g) / w[keep])
    return theta
