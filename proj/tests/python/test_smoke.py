import os
import subprocess

import numpy as np
import pytest

import latentstitch as ls


def test_ridge_matches_numpy_least_squares():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, 6))
    w = rng.normal(size=(6, 3))
    y = x @ w + 0.5
    m = ls.fit_ridge(x, y, 0.0)
    assert np.allclose(m.weight, w.T, atol=1e-9)
    assert np.allclose(m.bias, 0.5, atol=1e-9)
    assert np.allclose(ls.apply_map(m, x), y, atol=1e-9)
    assert np.allclose(m(x), y, atol=1e-9)


def test_fit_map_reports_fallback_on_rank_deficient_data():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 2)) @ rng.normal(size=(2, 5))
    m, fallback = ls.fit_map(x, x[:, :3])
    assert fallback
    assert ls.latent_mse(m(x), x[:, :3]) < 1e-18


def test_errors_carry_code_names():
    with pytest.raises(ls.LatentStitchError, match="DimensionMismatch"):
        ls.fit_ridge(np.zeros((3, 2)), np.zeros((4, 2)), 1.0)


def test_lasso_probe_and_metrics():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(300, 4))
    y = (x[:, 0] > 0).astype(int).tolist()
    p = ls.fit_lasso(x, y, 0.01)
    assert ls.accuracy(p, x, y) > 0.9
    assert ls.match_percent(p, x, x) == 100.0
    assert ls.fit_lasso(x, y, ls.lasso_alpha_max(x, y)).weight.tolist() == [0.0] * 4
    assert ls.accuracy_delta(0.8, 0.88) == pytest.approx(10.0)


def test_fid_and_rmse():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(400, 3))
    assert abs(ls.fid(a, a)) < 1e-8
    assert ls.fid(a, a + np.array([1.0, 2.0, 0.0])) == pytest.approx(5.0, abs=1e-8)
    assert ls.pixel_rmse(np.zeros((2, 2)), np.ones((2, 2))) == pytest.approx(1.0)
    assert ls.plateau_index([0.5, 0.7, 0.8, 0.805], 0.01) == 2


def test_balanced_subset_sizes():
    ids = [f"s{i}" for i in range(130)]
    labels = [1] * 30 + [-1] * 100
    pos, neg = ls.balanced_subset(ids, labels, 7)
    assert len(pos) == len(neg) == 24


def test_latent_file_round_trip(tmp_path):
    values = np.arange(6, dtype=float).reshape(3, 2)
    ls.write_latents(tmp_path / "a.lsf", "VAE", ["a", "b", "c"], values)
    model_id, ids, back = ls.read_latents(tmp_path / "a.lsf")
    assert model_id == "VAE"
    assert ids == ["a", "b", "c"]
    assert np.array_equal(back, values)


def test_synthetic_experiment_through_cli(tmp_path):
    cfg = ls.generate_synthetic(tmp_path / "world", n=300, k=3, d_pix=12, seed=4, n_train=250, n_holdout=50)
    cli = os.environ.get("LATENTSTITCH_CLI")
    if not cli:
        pytest.skip("CLI path not provided")
    out = tmp_path / "grid"
    subprocess.run([cli, "--config", str(cfg), "--out", str(out), "stitch-grid"], check=True)
    text = (out / "latent_mse.csv").read_text()
    assert text.startswith("encoder\\decoder,ortho_a,ortho_b")
    m = ls.read_map(out / "maps" / "ortho_a__ortho_b.lmap")
    assert m.weight.shape == (12, 12)
