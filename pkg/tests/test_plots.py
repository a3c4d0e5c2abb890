import warnings

import numpy as np

from qlandscape import plots
from qlandscape.harness import ExperimentConfig, RankScanConfig, run_sweep
from qlandscape.optimize import AdamConfig


def test_standalone_plots(tmp_path):
    plots.plot_success([(1, 2, 0.1, 4), (3, 6, 0.9, 4)], tmp_path / "s.png",
                       dla_dim=4)
    plots.plot_spectrum(np.array([1.0, 1e-4, 1e-12]), tmp_path / "e.png",
                        tolerance=1e-8)
    plots.plot_traces([np.geomspace(1, 1e-9, 50)], tmp_path / "t.png", target=0.0)
    for name in ("s.png", "e.png", "t.png"):
        assert (tmp_path / name).stat().st_size > 0


def test_render_sweep_figures(tmp_path):
    cfg = ExperimentConfig(
        task="vqe", n=2, depth_list=[1, 2], seeds_per_point=2,
        adam=AdamConfig(max_iters=400),
        rank_scan=RankScanConfig(points_per_depth=2),
        output_dir=str(tmp_path), master_seed=4, save_traces=True,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_sweep(cfg)
    written = plots.render_sweep_figures(result)
    assert (tmp_path / "success.png").exists()
    assert (tmp_path / "ranks.png").exists()
    assert (tmp_path / "traces_depth2.png").exists()
    assert len(written) == 3
