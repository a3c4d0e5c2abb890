"""Command-line frontend.

Subcommands::

    dla         closure dimension (and state-sector dimension) of an ansatz
    train       one seeded optimization run, record + trace
    sweep       full depth/seed sweep from a JSON config
    qfim        QFIM spectrum at a supplied or random point
    hessian     loss Hessian spectrum at a supplied or random point
    rank-scan   QFIM ranks at random points across depths
    haar-check  moment self-tests of the Haar sampler

Exit codes: 0 success, 1 validation error, 2 computation failure.  Figures
are rendered next to the CSV outputs unless ``--no-figures`` is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import plots
from .circuits import AnsatzSpec, ansatz_dla, hea, hva_tfim
from .geometry import (
    qfim,
    qfim_rank_one_form,
    qfim_shift_rule,
    qfim_unitary,
    spectrum_report,
    state_sector_dimension,
)
from .harness import (
    ExperimentConfig,
    RankScanConfig,
    _build_task,
    default_output_dir,
    fmt17,
    haar_unitary,
    rank_scan,
    run_sweep,
    save_matrix,
    theta_hash,
)
from .landscape import hessian
from .optimize import AdamConfig, train


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_ansatz(args) -> AnsatzSpec:
    if getattr(args, "ansatz_json", None):
        return AnsatzSpec.from_json(Path(args.ansatz_json).read_text())
    if args.family == "hva_tfim":
        return hva_tfim(args.n, args.L, args.boundary)
    if args.family == "hea":
        return hea(args.n, args.L)
    raise ValidationError("custom ansatzes must be supplied via --ansatz-json")


def _resolve_theta(args, a: AnsatzSpec) -> np.ndarray:
    if getattr(args, "theta_file", None):
        text = Path(args.theta_file).read_text()
        theta = np.array([float(x) for x in text.replace(",", " ").split()])
    elif getattr(args, "theta", None):
        theta = np.array([float(x) for x in args.theta.split(",")])
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
        theta = rng.uniform(-np.pi, np.pi, a.M)
    if theta.shape != (a.M,):
        raise ValidationError(
            f"expected {a.M} angles for this ansatz, got {theta.shape[0]}"
        )
    return theta


def _add_ansatz_flags(p, with_depth=True):
    p.add_argument("--family", choices=["hva_tfim", "hea"], default="hva_tfim")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--boundary", choices=["open", "closed"], default="open")
    if with_depth:
        p.add_argument("--L", type=int, default=1, help="layer count")
    p.add_argument("--ansatz-json", help="JSON ansatz file (overrides flags)")


def _report_spectrum(report, outdir: Path, prefix: str, no_figures: bool):
    report.save(outdir / prefix)
    if not no_figures:
        plots.plot_spectrum(
            report.eigenvalues, outdir / f"{prefix}.png",
            tolerance=report.tolerance, title=prefix,
        )
    print(f"rank={report.rank} gap={fmt17(report.gap)} "
          f"lambda_max={fmt17(report.lambda_max)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_dla(args) -> int:
    a = _build_ansatz(args)
    basis = ansatz_dla(a, args.dim_cap)
    print(f"dim={basis.dim}")
    if basis.cap_hit:
        print("dim_cap_hit=true")
    sector = state_sector_dimension(basis, a.compile().input_state())
    print(f"state_sector_dim={sector}")
    if args.dump_basis:
        basis.save(args.dump_basis)
        print(f"basis written to {args.dump_basis}")
    return 0


def _make_config(args, depths) -> ExperimentConfig:
    adam = AdamConfig(
        learning_rate=args.lr, max_iters=args.max_iters, stop_gap=args.stop_gap
    )
    return ExperimentConfig(
        task=args.task,
        n=args.n,
        depth_list=list(depths),
        boundary=args.boundary,
        seeds_per_point=1,
        adam=adam,
        rank_scan=RankScanConfig(points_per_depth=0),
        output_dir=args.output_dir,
        master_seed=args.master_seed,
        n_trash=args.n_trash,
        dataset_size=args.dataset_size,
    )


def _cmd_train(args) -> int:
    cfg = _make_config(args, [args.depth])
    task = _build_task(cfg)
    a = task.ansatz_for(args.depth)
    spec = task.loss_for(a)
    adam = cfg.adam.replace(target_value=task.target)
    record = train(spec, a, adam, seed=[args.master_seed, 0, args.depth, args.seed])
    outdir = _outdir(args)
    trace_path = outdir / f"trace_{args.depth}_{args.seed}.csv"
    with open(trace_path, "w") as fh:
        fh.write("iteration,loss\n")
        for k, v in enumerate(record.loss_trace):
            fh.write(f"{k},{fmt17(v)}\n")
    run_path = outdir / "run.csv"
    with open(run_path, "w") as fh:
        fh.write("task,n,boundary,depth,M,seed,final_loss,gap,iterations,success\n")
        boundary = cfg.boundary if cfg.task == "vqe" else "none"
        fh.write(
            f"{cfg.task},{cfg.n},{boundary},{args.depth},{record.m},{args.seed},"
            f"{fmt17(record.final_loss)},{fmt17(record.gap)},"
            f"{record.iterations_used},{record.success}\n"
        )
    if not args.no_figures:
        plots.plot_traces([record.loss_trace], outdir / "trace.png",
                          target=task.target, title=f"{args.task} depth {args.depth}")
    print(f"final_loss={fmt17(record.final_loss)} gap={fmt17(record.gap)} "
          f"iterations={record.iterations_used} success={record.success}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    result = run_sweep(cfg, jobs=args.jobs)
    for depth, m, prob, n_runs in result.success:
        print(f"depth={depth} M={m} success={fmt17(prob)} runs={n_runs}")
    if not args.no_figures:
        for path in plots.render_sweep_figures(result):
            print(f"figure written to {path}")
    print(f"outputs in {result.output_dir}")
    return 0


def _cmd_qfim(args) -> int:
    a = _build_ansatz(args)
    theta = _resolve_theta(args, a)
    outdir = _outdir(args)
    if args.method == "exact":
        mat = qfim(a, theta)
    elif args.method == "shift":
        mat = qfim_shift_rule(a, theta)
    elif args.method == "rank-one":
        mat = qfim_rank_one_form(a, theta)
    else:
        mat = qfim_unitary(a, theta)
    save_matrix(outdir / "qfim", mat.entries,
                {"M": a.M, "point_hash": theta_hash(theta), "loss_kind": "qfim"})
    _report_spectrum(spectrum_report(mat.entries), outdir, "qfim_spectrum",
                     args.no_figures)
    return 0


def _cmd_hessian(args) -> int:
    cfg = _make_config(args, [args.depth])
    task = _build_task(cfg)
    a = task.ansatz_for(args.depth)
    spec = task.loss_for(a)
    theta = _resolve_theta(args, a)
    mat = hessian(spec, a, theta)
    outdir = _outdir(args)
    save_matrix(outdir / "hessian", mat.entries,
                {"M": a.M, "point_hash": theta_hash(theta), "loss_kind": mat.loss_tag})
    _report_spectrum(spectrum_report(mat.entries), outdir, "hessian_spectrum",
                     args.no_figures)
    return 0


def _cmd_rank_scan(args) -> int:
    from collections import namedtuple

    depths = [int(x) for x in args.depths.split(",")]
    cfg = _make_config(args, depths)
    cfg.rank_scan = RankScanConfig(points_per_depth=args.points, probe=args.probe)
    outdir = _outdir(args)
    row_t = namedtuple("Row", "depth m point_kind matrix rank gap lambda_max")
    rows = []
    task = _build_task(cfg)
    for depth in depths:
        random_reports, _ = rank_scan(cfg, depth)
        m = task.ansatz_for(depth).M
        for reports in random_reports:
            for rep in reports:
                rows.append(row_t(depth, m, "random", "qfim", rep.rank, rep.gap,
                                  rep.lambda_max))
    path = outdir / "ranks.csv"
    with open(path, "w") as fh:
        fh.write("depth,M,point_kind,matrix,rank,gap,lambda_max\n")
        for r in rows:
            fh.write(f"{r.depth},{r.m},{r.point_kind},{r.matrix},{r.rank},"
                     f"{fmt17(r.gap)},{fmt17(r.lambda_max)}\n")
    for depth in depths:
        here = [r for r in rows if r.depth == depth]
        mean = float(np.mean([r.rank for r in here]))
        print(f"depth={depth} M={here[0].m} mean_rank={mean:.3f}")
    if not args.no_figures:
        plots.plot_rank_staircase(rows, outdir / "ranks.png",
                                  title=f"{args.task}, n={args.n}")
    print(f"ranks written to {path}")
    return 0


def _cmd_haar_check(args) -> int:
    d = args.d
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    u00 = np.empty(args.samples)
    tr2 = np.empty(args.samples)
    for k in range(args.samples):
        u = haar_unitary(d, rng)
        u00[k] = abs(u[0, 0]) ** 2
        tr2[k] = abs(np.trace(u)) ** 2
    ok = True
    for name, vals, expect in (("E|U00|^2", u00, 1.0 / d), ("E|TrU|^2", tr2, 1.0)):
        mean = vals.mean()
        se = vals.std(ddof=1) / np.sqrt(len(vals))
        dev = abs(mean - expect) / se
        line = (f"{name}: {mean:.6f} expected {expect:.6f} "
                f"stderr {se:.2e} ({dev:.2f} sigma)")
        if dev > 3.0:
            ok = False
            line += " FAIL"
        else:
            line += " ok"
        print(line)
    return 0 if ok else 2


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="qlandscape")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dla", parents=[], help="circuit Lie-closure dimension")
    _add_ansatz_flags(p, with_depth=True)
    p.add_argument("--dim-cap", type=int, default=None)
    p.add_argument("--dump-basis", help="write the basis to this file")
    p.set_defaults(fn=_cmd_dla)

    def add_task_flags(p, with_seed=True):
        p.add_argument("--task", choices=["vqe", "compile", "autoencoder"],
                       default="vqe")
        p.add_argument("--n", type=int, default=4)
        p.add_argument("--boundary", choices=["open", "closed"], default="open")
        p.add_argument("--depth", type=int, default=4, help="layer count")
        p.add_argument("--n-trash", type=int, default=2)
        p.add_argument("--dataset-size", type=int, default=4)
        p.add_argument("--master-seed", type=int, default=0)
        if with_seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--lr", type=float, default=1e-2)
        p.add_argument("--max-iters", type=int, default=10_000)
        p.add_argument("--stop-gap", type=float, default=1e-12)

    p = sub.add_parser("train", help="one seeded optimization run")
    add_task_flags(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("sweep", help="depth/seed sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes across depths (default: logical cores)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("qfim", help="QFIM spectrum at a point")
    _add_ansatz_flags(p)
    p.add_argument("--theta", help="comma-separated angles")
    p.add_argument("--theta-file", help="angles file (overrides --theta)")
    p.add_argument("--seed", type=int, default=0, help="random point seed")
    p.add_argument("--method",
                   choices=["exact", "shift", "rank-one", "entangled"],
                   default="exact")
    p.set_defaults(fn=_cmd_qfim)

    p = sub.add_parser("hessian", help="loss Hessian spectrum at a point")
    add_task_flags(p, with_seed=False)
    p.add_argument("--theta", help="comma-separated angles")
    p.add_argument("--theta-file", help="angles file (overrides --theta)")
    p.add_argument("--seed", type=int, default=0, help="random point seed")
    p.set_defaults(fn=_cmd_hessian)

    p = sub.add_parser("rank-scan", help="QFIM ranks at random points")
    add_task_flags(p, with_seed=False)
    p.add_argument("--depths", default="2,4,6", help="comma-separated layer counts")
    p.add_argument("--points", type=int, default=30)
    p.add_argument("--probe", choices=["input", "haar"], default="input")
    p.set_defaults(fn=_cmd_rank_scan)

    p = sub.add_parser("haar-check", help="Haar sampler moment self-tests")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_haar_check)

    for name, sp in sub.choices.items():
        if name != "sweep":
            sp.add_argument("--output-dir", default=default_output_dir())
        sp.add_argument("--no-figures", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValidationError, ValueError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # computation failure
        print(f"computation failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
