"""Experiment orchestration: depth/seed sweeps, rank scans, Haar sampling,
dataset generation, and CSV persistence.

Reproducibility contract: every random stream is keyed off the experiment's
``master_seed`` through ``numpy.random.SeedSequence`` entropy lists (a
published, stable hash), with one stream id per purpose:

    [master, 0, depth, index]   per-run initialization
    [master, 1]                 compilation target unitary
    [master, 2, depth, index]   rank-scan sample points
    [master, 3]                 autoencoder dataset

so adding depths or seeds never perturbs existing runs, and rerunning a
sweep reproduces its CSV outputs byte for byte.  All floats are written
with 17 significant digits.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .circuits import AnsatzSpec, dla_dimension, hea, hva_tfim, tfim_hamiltonian
from .geometry import SpectrumReport, qfim, qfim_unitary, spectrum_report
from .landscape import LossSpec, hessian
from .optimize import AdamConfig, RunRecord, newton_polish, train_batch

__all__ = [
    "haar_unitary",
    "compressible_dataset",
    "ExperimentConfig",
    "RankScanConfig",
    "SweepResult",
    "run_sweep",
    "rank_scan",
    "save_matrix",
    "fmt17",
]

# stream ids for SeedSequence entropy lists
_STREAM_RUN = 0
_STREAM_TARGET = 1
_STREAM_SCAN = 2
_STREAM_DATASET = 3
_STREAM_PROBE = 4

OPTIMUM_GAP = 1e-9  # loss gap below which a trained point counts as an optimum


def fmt17(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def haar_unitary(d: int, seed) -> np.ndarray:
    """Haar-distributed unitary: Ginibre matrix, QR, then the phase fix that
    multiplies each column of Q by the phase of R's diagonal."""
    if d < 1 or d > 1 << 12:
        raise ValueError("dimension out of supported range")
    rng = _rng(seed)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    lam = np.diagonal(r)
    q = q * (lam / np.abs(lam))
    assert np.linalg.norm(q.conj().T @ q - np.eye(d)) < 1e-10
    return q


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def compressible_dataset(n: int, n_trash: int, count: int, seed) -> list[np.ndarray]:
    """States drawn Haar-uniformly inside a random 2^(n - n_trash)-dimensional
    subspace, so a perfect encoder onto the non-trash qubits exists by
    construction and the autoencoder loss floor is attainable."""
    if not 0 < n_trash < n:
        raise ValueError("need 0 < n_trash < n")
    d = 1 << n
    d_keep = 1 << (n - n_trash)
    rng = _rng(seed)
    isometry = haar_unitary(d, rng)[:, :d_keep]
    return [isometry @ haar_state(d_keep, rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RankScanConfig:
    points_per_depth: int = 30
    at_optima: bool = False
    optima_per_depth: int = 3
    probe: str = "input"  # "input": the task's own state(s); "haar": one fixed Haar state

    def __post_init__(self):
        if self.points_per_depth < 0 or self.optima_per_depth < 0:
            raise ValueError("rank-scan counts must be nonnegative")
        if self.probe not in ("input", "haar"):
            raise ValueError("rank-scan probe must be 'input' or 'haar'")


_ADAM_KEYS = {"learning_rate", "beta1", "beta2", "epsilon_hat", "max_iters", "stop_gap"}


@dataclass
class ExperimentConfig:
    task: str
    n: int
    depth_list: list[int]
    boundary: str = "open"
    seeds_per_point: int = 50
    adam: AdamConfig = field(default_factory=AdamConfig)
    rank_scan: RankScanConfig = field(default_factory=RankScanConfig)
    output_dir: str = "out"
    master_seed: int = 0
    n_trash: int | None = None
    dataset_size: int = 4
    save_traces: bool = False

    def __post_init__(self):
        if self.task not in ("vqe", "compile", "autoencoder"):
            raise ValueError(f"unknown task {self.task!r}")
        if not self.depth_list or sorted(self.depth_list) != list(self.depth_list):
            raise ValueError("depth_list must be nonempty and ascending")
        if self.seeds_per_point < 1:
            raise ValueError("seeds_per_point must be at least 1")
        if self.task == "vqe" and self.boundary not in ("open", "closed"):
            raise ValueError("boundary must be 'open' or 'closed'")
        if self.task == "autoencoder" and not self.n_trash:
            raise ValueError("autoencoder task needs n_trash")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        if "adam" in doc:
            bad = set(doc["adam"]) - _ADAM_KEYS
            if bad:
                raise ValueError(
                    f"unknown or disallowed adam fields: {sorted(bad)} "
                    "(the target value is derived from the task)"
                )
            doc["adam"] = AdamConfig(**doc["adam"])
        if "rank_scan" in doc:
            doc["rank_scan"] = RankScanConfig(**doc["rank_scan"])
        return cls(**doc)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["adam"].pop("target_value", None)
        return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# task plumbing
# ---------------------------------------------------------------------------


@dataclass
class _Task:
    ansatz_for: object  # depth -> AnsatzSpec
    loss_for: object  # AnsatzSpec -> LossSpec
    target: float


def _build_task(cfg: ExperimentConfig) -> _Task:
    if cfg.task == "vqe":
        ham = tfim_hamiltonian(cfg.n, 1.0, cfg.boundary)
        spec = LossSpec.vqe_energy(ham)
        target = float(np.linalg.eigvalsh(ham.to_matrix())[0])
        return _Task(
            ansatz_for=lambda L: hva_tfim(cfg.n, L, cfg.boundary),
            loss_for=lambda a: spec,
            target=target,
        )
    if cfg.task == "compile":
        v = haar_unitary(1 << cfg.n, [cfg.master_seed, _STREAM_TARGET])
        spec = LossSpec.compile_l2(v)
        return _Task(
            ansatz_for=lambda L: hea(cfg.n, L),
            loss_for=lambda a: spec,
            target=0.0,
        )
    dataset = compressible_dataset(
        cfg.n, cfg.n_trash, cfg.dataset_size, [cfg.master_seed, _STREAM_DATASET]
    )
    spec = LossSpec.autoencoder(dataset, cfg.n, cfg.n_trash)
    return _Task(
        ansatz_for=lambda L: hea(cfg.n, L),
        loss_for=lambda a: spec,
        target=float(cfg.dataset_size - 1),
    )


@dataclass
class SweepRun:
    depth: int
    m: int
    index: int
    record: RunRecord


@dataclass
class RankRow:
    depth: int
    m: int
    point_kind: str  # random | optimum
    matrix: str  # qfim | hessian
    rank: int
    gap: float
    lambda_max: float


@dataclass
class SweepResult:
    config: ExperimentConfig
    runs: list[SweepRun]
    success: list[tuple[int, int, float, int]]  # (depth, M, probability, n_runs)
    rank_rows: list[RankRow]
    dla_dim: int
    target: float
    output_dir: Path

    def success_probability(self, depth: int) -> float:
        for d, _, p, _ in self.success:
            if d == depth:
                return p
        raise KeyError(depth)

    def rank_summary(self) -> dict[int, tuple[float, float, bool]]:
        """Per-depth (mean, stddev, saturated) over random-point QFIM ranks;
        saturated means every sampled point shares one rank value."""
        out: dict[int, tuple[float, float, bool]] = {}
        for depth in self.config.depth_list:
            ranks = [
                r.rank
                for r in self.rank_rows
                if r.depth == depth and r.point_kind == "random" and r.matrix == "qfim"
            ]
            if ranks:
                arr = np.asarray(ranks, dtype=float)
                out[depth] = (float(arr.mean()), float(arr.std()), len(set(ranks)) == 1)
        return out


def _scan_qfims(cfg: ExperimentConfig, spec: LossSpec, a: AnsatzSpec, theta) -> list:
    """QFIM spectrum reports at one parameter point, one per probed state."""
    if cfg.task == "compile":
        return [spectrum_report(qfim_unitary(a, theta).entries)]
    if cfg.rank_scan.probe == "haar":
        probe = haar_state(1 << cfg.n, _rng([cfg.master_seed, _STREAM_PROBE]))
        return [spectrum_report(qfim(a, theta, probe).entries)]
    if cfg.task == "autoencoder":
        return [
            spectrum_report(qfim(a, theta, psi).entries) for psi in spec.states
        ]
    return [spectrum_report(qfim(a, theta).entries)]


def rank_scan(cfg: ExperimentConfig, depth: int, optima: list[np.ndarray] | None = None):
    """Spectrum reports at uniform-random points (and supplied optima).

    Returns ``(random_reports, optimum_reports)`` where each entry of
    ``optimum_reports`` is a ``(qfim_reports, hessian_report)`` pair.
    """
    task = _build_task(cfg)
    a = task.ansatz_for(depth)
    spec = task.loss_for(a)
    random_reports = []
    for k in range(cfg.rank_scan.points_per_depth):
        rng = _rng([cfg.master_seed, _STREAM_SCAN, depth, k])
        theta = rng.uniform(-np.pi, np.pi, a.M)
        random_reports.append(_scan_qfims(cfg, spec, a, theta))
    optimum_reports = []
    for theta in optima or []:
        qs = _scan_qfims(cfg, spec, a, theta)
        hrep = spectrum_report(np.asarray(hessian(spec, a, theta).entries))
        optimum_reports.append((qs, hrep))
    return random_reports, optimum_reports


def _run_depth(cfg: ExperimentConfig, depth: int):
    task = _build_task(cfg)
    a = task.ansatz_for(depth)
    spec = task.loss_for(a)
    adam = cfg.adam.replace(target_value=task.target)
    seeds = [
        [cfg.master_seed, _STREAM_RUN, depth, idx]
        for idx in range(cfg.seeds_per_point)
    ]
    records = train_batch(spec, a, adam, seeds, keep_traces=cfg.save_traces)
    runs = [SweepRun(depth, a.M, idx, rec) for idx, rec in enumerate(records)]

    rank_rows: list[RankRow] = []
    spectra: list[tuple[str, SpectrumReport]] = []
    if cfg.rank_scan.points_per_depth > 0 or cfg.rank_scan.at_optima:
        optima = []
        if cfg.rank_scan.at_optima:
            converged = [r.theta for r in records if r.gap < OPTIMUM_GAP]
            optima = [
                newton_polish(spec, a, theta)
                for theta in converged[: cfg.rank_scan.optima_per_depth]
            ]
        random_reports, optimum_reports = rank_scan(cfg, depth, optima)
        for reports in random_reports:
            for rep in reports:
                rank_rows.append(
                    RankRow(depth, a.M, "random", "qfim", rep.rank, rep.gap, rep.lambda_max)
                )
        for k, (qreps, hrep) in enumerate(optimum_reports):
            for rep in qreps:
                rank_rows.append(
                    RankRow(depth, a.M, "optimum", "qfim", rep.rank, rep.gap, rep.lambda_max)
                )
            rank_rows.append(
                RankRow(depth, a.M, "optimum", "hessian", hrep.rank, hrep.gap, hrep.lambda_max)
            )
            if k == 0:
                spectra.append((f"spectrum_d{depth}_qfim", qreps[0]))
                spectra.append((f"spectrum_d{depth}_hessian", hrep))
    return runs, rank_rows, spectra


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> SweepResult:
    """Execute the full sweep and write ``runs.csv``, ``success.csv``,
    ``ranks.csv`` (plus optional traces and spectrum dumps) to the output
    directory.  Partial run failures are recorded, never fatal; a recorded
    rank exceeding the circuit's Lie-closure dimension is fatal."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    depths = list(cfg.depth_list)
    if jobs > 1 and len(depths) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(depths))) as pool:
            results = list(pool.map(_run_depth, [cfg] * len(depths), depths))
    else:
        results = [_run_depth(cfg, depth) for depth in depths]

    runs: list[SweepRun] = []
    rank_rows: list[RankRow] = []
    spectra = []
    for depth_runs, depth_ranks, depth_spectra in results:
        runs.extend(depth_runs)
        rank_rows.extend(depth_ranks)
        spectra.extend(depth_spectra)
    runs.sort(key=lambda r: (r.depth, r.index))

    task = _build_task(cfg)
    dla = dla_dimension(task.ansatz_for(depths[0]))
    for row in rank_rows:
        if row.rank > dla:
            raise RuntimeError(
                f"rank bound violated: {row.matrix} rank {row.rank} exceeds "
                f"the closure dimension {dla} at depth {row.depth}"
            )

    success = []
    for depth in depths:
        here = [r for r in runs if r.depth == depth]
        prob = sum(r.record.success for r in here) / len(here)
        success.append((depth, here[0].m, prob, len(here)))

    _write_runs(outdir / "runs.csv", cfg, runs)
    _write_success(outdir / "success.csv", success)
    _write_ranks(outdir / "ranks.csv", rank_rows)
    if cfg.save_traces:
        for r in runs:
            _write_trace(outdir / f"trace_{r.depth}_{r.index}.csv", r.record)
    for name, rep in spectra:
        rep.save(outdir / name)
    return SweepResult(cfg, runs, success, rank_rows, dla, task.target, outdir)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------


def _write_runs(path, cfg: ExperimentConfig, runs: list[SweepRun]) -> None:
    boundary = cfg.boundary if cfg.task == "vqe" else "none"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["task", "n", "boundary", "depth", "M", "seed", "final_loss", "gap",
             "iterations", "success"]
        )
        for r in runs:
            w.writerow(
                [cfg.task, cfg.n, boundary, r.depth, r.m, r.index,
                 fmt17(r.record.final_loss), fmt17(r.record.gap),
                 r.record.iterations_used, fmt17(r.record.success)]
            )


def _write_success(path, success) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "M", "success_probability", "n_runs"])
        for depth, m, prob, n_runs in success:
            w.writerow([depth, m, fmt17(prob), n_runs])


def _write_ranks(path, rank_rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "M", "point_kind", "matrix", "rank", "gap", "lambda_max"])
        for r in rank_rows:
            w.writerow(
                [r.depth, r.m, r.point_kind, r.matrix, r.rank, fmt17(r.gap),
                 fmt17(r.lambda_max)]
            )


def _write_trace(path, record: RunRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "loss"])
        for k, val in enumerate(record.loss_trace):
            w.writerow([k, fmt17(val)])


def save_matrix(prefix, entries: np.ndarray, meta: dict) -> None:
    """Row-major CSV dump of a matrix plus a JSON sidecar."""
    entries = np.asarray(entries)
    with open(f"{prefix}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        for row in entries:
            w.writerow([fmt17(x) for x in row])
    with open(f"{prefix}.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def theta_hash(theta) -> str:
    import hashlib

    return hashlib.sha256(np.asarray(theta, dtype=float).tobytes()).hexdigest()[:16]


def default_output_dir() -> str:
    return os.environ.get("QLANDSCAPE_OUTDIR", "out")
