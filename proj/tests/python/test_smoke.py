"""Smoke tests for the python bindings: round trips, determinism, and a
small end-to-end projection/registration exercise."""

import numpy as np
import pytest

import sxt


@pytest.fixture(scope="module")
def geometry():
    geom = sxt.desk_geometry()
    geom.detector_width = 48
    geom.detector_height = 48
    geom.source_object_distance = 96.0
    geom.object_detector_distance = 96.0
    geom.validate()
    return geom


@pytest.fixture(scope="module")
def phantom():
    volume, lines = sxt.generate_phantom(32, 32, 32, n_lines=2, n_ellipsoids=4, seed=7)
    return volume, lines


def test_generate_phantom_shapes(phantom):
    volume, lines = phantom
    assert volume.shape == (32, 32, 32)
    assert np.isfinite(volume).all()
    assert len(lines) == 2
    for line in lines:
        assert line.ndim == 2 and line.shape[1] == 3


def test_generate_phantom_deterministic(phantom):
    volume, _ = phantom
    again, _ = sxt.generate_phantom(32, 32, 32, n_lines=2, n_ellipsoids=4, seed=7)
    assert np.array_equal(volume, again)


def test_forward_project_finite(phantom, geometry):
    volume, _ = phantom
    proj = sxt.forward_project(volume, geometry, view=0)
    assert proj.shape == (48, 48)
    assert np.isfinite(proj).all()
    assert proj.max() > 0.0


def test_poisson_noise_deterministic(phantom, geometry):
    volume, _ = phantom
    proj = sxt.forward_project(volume, geometry, view=0)
    a = sxt.add_poisson_noise(proj, 0.24, seed=3)
    b = sxt.add_poisson_noise(proj, 0.24, seed=3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, proj)


def test_register_2d_self_is_identity(phantom, geometry):
    volume, _ = phantom
    proj = sxt.forward_project(volume, geometry, view=0)
    res = sxt.register_2d(proj, proj, max_iterations=10)
    assert np.abs(res["dx"]).max() < 0.1
    assert np.abs(res["dy"]).max() < 0.1


def test_warp_image_zero_field_is_exact(phantom, geometry):
    volume, _ = phantom
    proj = sxt.forward_project(volume, geometry, view=1)
    zero = np.zeros_like(proj)
    assert np.allclose(sxt.warp_image(proj, zero, zero), proj)


def test_chamfer_identical_sets_is_zero():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.0, 10.0, size=(50, 3))
    assert sxt.chamfer_distance(pts, pts) == 0.0


def test_chamfer_single_pair():
    a = np.array([[0.0, 0.0, 0.0]])
    b = np.array([[3.0, 4.0, 0.0]])
    assert sxt.chamfer_distance(a, b) == pytest.approx(5.0)


def test_roc_hand_case():
    scores = np.array([0.9, 0.8, 0.3, 0.1])
    truth = np.array([1.0, 0.0, 1.0, 0.0])
    _, _, _, auc = sxt.roc_curve(scores, truth)
    assert auc == pytest.approx(0.75)


def test_rasterize_and_evidence(phantom, geometry):
    _, lines = phantom
    raster = sxt.rasterize_polylines(lines, 32, 32, 32, radius=1.2)
    assert raster.shape == (32, 32, 32)
    assert raster.max() == pytest.approx(1.0)

    feat0 = sxt.forward_project(raster, geometry, view=0)
    feat1 = sxt.forward_project(raster, geometry, view=1)
    evidence, has_evidence = sxt.make_bp_evidence(feat0, feat1, geometry, 32, 32, 32)
    assert has_evidence
    assert evidence.max() == pytest.approx(1.0)


def test_detect_features_on_lines(phantom, geometry):
    _, lines = phantom
    raster = sxt.rasterize_polylines(lines, 32, 32, 32, radius=1.2)
    proj = sxt.forward_project(raster, geometry, view=0)
    score, threshold = sxt.detect_features_2d(proj, marker_radius_px=1.2)
    assert score.shape == proj.shape
    assert 0.0 < threshold < 1.0
    assert (score > threshold).any()
