import math

import numpy as np
import pytest

import inrct


def fan(views=24, det=48):
    return inrct.FanBeamGeometry(inrct.equispaced_angles(views), 100.0, 200.0, det, 1.0)


def test_projector_adjoint():
    grid = inrct.VoxelGrid.make2d(24, 1.0)
    p = inrct.Projector(fan(), grid)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(p.num_voxels)
    y = rng.standard_normal(p.num_rays)
    px, pty = p.forward(x), p.back(y)
    assert abs(px @ y - x @ pty) <= 1e-10 * np.linalg.norm(px) * np.linalg.norm(y)


def test_cone_projector_shapes():
    g = inrct.ConeBeamGeometry(inrct.equispaced_angles(6), 80.0, 160.0, 16, 1.5, 8, 1.5)
    p = inrct.Projector(g, inrct.VoxelGrid.make3d(8, 1.0))
    assert p.forward(np.ones(512)).shape == (6 * 8 * 16,)


def test_phantom_and_fbp():
    grid = inrct.VoxelGrid.make2d(48, 1.0)
    fine = inrct.VoxelGrid.make2d(96, 0.5)
    geom = fan(90, 96)
    ph = inrct.shepp_logan_2d(20.0)
    truth = inrct.rasterize(ph, grid, 4)
    assert truth.shape == (48, 48)
    assert truth.max() <= 0.022 + 1e-15
    y = inrct.simulate_measurements(ph, geom, fine, grid)
    assert y.shape == (90, 96)
    img = inrct.fbp(geom, y.ravel(), grid)
    assert img.shape == (48, 48)
    assert np.mean((img - truth) ** 2) < np.mean(truth**2)


def test_model_gradient_matches_differences():
    cfg = inrct.InrConfig.default(inrct.Arch.SIREN)
    cfg.hidden_width = 8
    cfg.hidden_layers = 2
    cfg.first_omega = 3.0
    cfg.hidden_omega = 3.0
    model = inrct.init_model(cfg, 2, seed=1)
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, size=(5, 2))
    w = rng.standard_normal(5)
    g = inrct.weighted_param_grad(model, x, w)
    theta = model.params()
    assert g.shape == theta.shape == (model.num_params,)
    for k in rng.choice(theta.size, 10, replace=False):
        e = np.zeros_like(theta)
        e[k] = 1e-6
        up = inrct.eval(model.with_params(theta + e), x) @ w
        down = inrct.eval(model.with_params(theta - e), x) @ w
        assert math.isclose(g[k], (up - down) / 2e-6, rel_tol=1e-5, abs_tol=1e-9)


def test_full_batch_estimate_equals_exact():
    grid = inrct.VoxelGrid.make2d(8, 1.0)
    geom = inrct.FanBeamGeometry(inrct.equispaced_angles(4), 30.0, 60.0, 8, 3.0)
    mask = inrct.make_fov_mask(grid, inrct.MaskShape.Full)
    y = np.random.default_rng(2).uniform(0, 1, 32)
    problem = inrct.ReconProblem(mask, geom, y, inrct.Loss.FLS)
    cfg = inrct.InrConfig.default(inrct.Arch.FFN)
    cfg.hidden_width, cfg.fourier_features = 8, 8
    model = inrct.init_model(cfg, 2)
    exact = inrct.exact_gradient(model, problem)
    grad, scale, loss = inrct.stochastic_gradient(model, problem, mask.n, seed=3)
    assert scale == 1.0
    assert loss == pytest.approx(problem.loss(model))
    np.testing.assert_array_equal(grad, exact)
    assert inrct.memory_ratio(model, mask, mask.n // 16) == 16.0


def test_cgls_recovers_consistent_data():
    grid = inrct.VoxelGrid.make2d(6, 1.0)
    geom = fan(16, 16)
    x = np.random.default_rng(4).uniform(size=36)
    y = inrct.Projector(geom, grid).forward(x)
    img, res = inrct.cgls(geom, grid, y, 60)
    assert res[-1] <= 1e-6 * res[0]
    np.testing.assert_allclose(img.ravel(), x, atol=1e-6)


def test_train_tiny():
    c = inrct.ReconConfig()
    c.grid = [16, 16, 1]
    c.views, c.detectors, c.det_spacing, c.sim_factor = 8, 24, 2.0, 2
    c.model.hidden_width, c.model.hidden_layers, c.model.fourier_features = 8, 2, 8
    c.iterations, c.log_every = 20, 10
    out = inrct.train_inr(c)
    assert [r[0] for r in out["metrics"]] == [1, 10, 20]
    assert out["image"].shape == (16, 16)
    assert out["metrics"][-1][1] < out["metrics"][0][1]
