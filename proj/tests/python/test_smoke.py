import numpy as np
import pytest

import gptomo


def test_phantom_and_projector():
    f = gptomo.shepp_logan(16)
    assert f.shape == (16, 16)
    assert f.min() >= 0.0
    a = gptomo.build_system_matrix(16, 10)
    assert a.shape == (10 * 23, 256)
    assert a.n_tau == 23
    y = a.forward(f)
    assert y.shape == (230,)
    rng = np.random.default_rng(0)
    u = rng.normal(size=(16, 16))
    v = rng.normal(size=230)
    assert np.isclose(a.forward(u) @ v, np.sum(u * a.adjoint(v)), rtol=1e-12)
    rows, cols, vals = a.triplets()
    assert len(vals) == a.nnz


def test_noise_cases():
    y = np.linspace(1.0, 2.0, 1000)
    assert np.array_equal(gptomo.corrupt(y, "I")["y"], y)
    r2 = gptomo.corrupt(y, "II", seed=3)
    assert np.array_equal(r2["y"], gptomo.corrupt(y, "II", seed=3)["y"])
    rms = np.sqrt(np.mean(y**2))
    assert np.allclose(r2["sigma_true"], 0.1 * rms)
    r4 = gptomo.corrupt(y, "IV", seed=3)
    assert np.allclose(r4["model_sigma"], 0.1 * rms)


def test_gp_fit_and_posterior():
    f = gptomo.shepp_logan(12)
    a = gptomo.build_system_matrix(12, 8)
    noisy = gptomo.corrupt(a.forward(f), "II", seed=1)
    sigma = noisy["model_sigma"]
    fit = gptomo.fit_sequential(a, noisy["y"], sigma, family="MK32", n_k=1)
    assert len(fit["stage_nll"]) == 1
    spec = fit["spec"]
    assert spec.family == "MK32"
    value, grad = gptomo.nll(a, noisy["y"], sigma, "MK32", spec.to_hyper(), gradient=True)
    assert value == pytest.approx(fit["stage_nll"][0])
    assert np.max(np.abs(grad)) < 1e-2
    post = gptomo.posterior(a, noisy["y"], sigma, spec)
    assert post["mean"].shape == (12, 12)
    assert np.all(post["variance"] >= 0)
    assert gptomo.e_norm(post["mean"], f) < 1.0


def test_baselines():
    f = gptomo.shepp_logan(8)
    a = gptomo.build_system_matrix(8, 16)
    y = a.forward(f)
    l2 = gptomo.reconstruct_l2(a, y)
    assert gptomo.e_norm(l2, f) < 1e-3
    tv = gptomo.reconstruct_tv(a, y, 1e-6)
    assert gptomo.e_norm(tv, f) < 0.05
    res = gptomo.tv_grid_search(a, y, f)
    assert len(res["curve"]) == 13


def test_run_config_and_experiment():
    cfg = gptomo.RunConfig()
    cfg.set("grid.n", "12")
    cfg.set("scan.n_theta", "6")
    cfg.set("method.name", "l2")
    assert "n = 12" in cfg.to_ini()
    again = gptomo.RunConfig.from_ini(cfg.to_ini())
    assert again.to_dict() == cfg.to_dict()
    out = gptomo.run_experiment(cfg)
    assert out["recon"].shape == (12, 12)
    assert out["e_norm"] == pytest.approx(gptomo.e_norm(out["recon"], out["truth"]))
    with pytest.raises(gptomo.ConfigError):
        cfg.set("grid.bogus", "1")
    with pytest.raises(ValueError):
        gptomo.e_norm(np.ones(4), np.zeros(4))
