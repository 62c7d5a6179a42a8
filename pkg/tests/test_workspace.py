import logging
import math

import numpy as np
import pytest

from vamkin.exceptions import EmptyRegion, EmptyWorkspace
from vamkin.mechanism import rotation
from vamkin.workspace import (
    VAM,
    CellClass,
    GridSpec,
    calibrate_char_length,
    candidate_cells,
    classify_cell,
    classify_grid,
    classify_points,
    grouped,
    minimize_on_interval,
    mode_ratios,
    passes,
    rdw_search,
    scan_constant_phi,
    scan_constant_phi_detail,
    vam_classify_cell,
)

PHI = math.radians(17.5)
SMALL = GridSpec(x_res=61, y_res=61, phi_res=6)
FAR = GridSpec(x_range=(50.0, 60.0), y_range=(50.0, 60.0), x_res=5, y_res=5, phi_res=3)


# --- grid -------------------------------------------------------------------


def test_gridspec_defaults():
    spec = GridSpec()
    assert spec.xs[0] == -9.0 and spec.xs[-1] == 9.0
    assert spec.xs.size == spec.ys.size == 400
    assert spec.phis.size == 21
    assert math.degrees(spec.phis[0]) == pytest.approx(5.0)
    assert math.degrees(spec.phis[-1]) == pytest.approx(25.0)
    X, Y = spec.mesh()
    assert X.shape == (400, 400)
    assert np.all(Y[:, 0] == spec.ys)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"x_range": (1.0, 1.0)},
        {"y_range": (2.0, -2.0)},
        {"x_res": 1},
        {"phi_range": (0.5, 0.1)},
        {"phi_res": 1},
    ],
)
def test_gridspec_rejects(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_gridspec_single_phi_allowed():
    spec = GridSpec(phi_range=(PHI, PHI), phi_res=1)
    assert spec.phis.tolist() == [PHI]


def test_refined_keeps_nodes():
    spec = GridSpec(x_res=5, y_res=7, phi_res=3)
    fine = spec.refined(2)
    assert (fine.x_res, fine.y_res, fine.phi_res) == (9, 13, 5)
    np.testing.assert_allclose(fine.xs[::2], spec.xs)
    np.testing.assert_allclose(fine.phis[::2], spec.phis)


def test_passes_direction():
    assert passes("cond", [0.2, 0.1], 0.15).tolist() == [True, False]
    assert passes("angle", [1.0, 1.4], math.radians(75)).tolist() == [True, False]
    assert not passes("angle", [np.nan], 1.0)[0]
    with pytest.raises(ValueError):
        passes("speed", [1.0], 1.0)


# --- constant-orientation scans ---------------------------------------------


def test_scan_ratio_is_fraction(geometry):
    res = scan_constant_phi_detail(geometry, 1, PHI, SMALL)
    assert 0.0 < res.ratio < 1.0
    assert res.ratio == pytest.approx(res.passing.sum() / res.reachable.sum())
    assert not (res.passing & ~res.reachable).any()


def test_scan_empty_grid_raises(geometry):
    with pytest.raises(EmptyWorkspace):
        scan_constant_phi(geometry, 1, PHI, FAR)


def test_mode_ratios_match_single_scans(geometry):
    ratios = mode_ratios(geometry, SMALL, PHI, "cond", 0.15)
    for m in (1, 4, 8):
        assert ratios[m - 1] == pytest.approx(scan_constant_phi(geometry, m, PHI, SMALL, "cond", 0.15))


def test_grouped():
    assert grouped([1, 2, 3, 4, 5, 6, 7, 8]) == (1.0, 3.0, 6.0, 8.0)


@pytest.mark.parametrize("index,thresholds", [("angle", (40, 60, 75, 85)), ("cond", (0.4, 0.3, 0.15, 0.05))])
def test_threshold_monotonicity(geometry, index, thresholds):
    if index == "angle":
        thresholds = [math.radians(t) for t in thresholds]
    ratios = [scan_constant_phi(geometry, 5, PHI, SMALL, index, t) for t in thresholds]
    assert ratios == sorted(ratios)
    light = [
        (classify_grid(geometry, 5, SMALL, index, t).cells == CellClass.LIGHT_GRAY).sum() for t in thresholds
    ]
    assert light == sorted(light)


@pytest.mark.parametrize("index", ["angle", "cond"])
def test_vam_is_union_of_modes(geometry, index):
    per_mode = [scan_constant_phi_detail(geometry, m, PHI, SMALL, index) for m in range(1, 9)]
    vam = scan_constant_phi_detail(geometry, VAM, PHI, SMALL, index)
    union = np.logical_or.reduce([r.passing for r in per_mode])
    np.testing.assert_array_equal(vam.passing, union)
    # over an orientation sweep the VAM may switch modes between samples
    vam_cells = classify_grid(geometry, VAM, SMALL, index).cells
    for m in range(1, 9):
        light = classify_grid(geometry, m, SMALL, index).cells == CellClass.LIGHT_GRAY
        assert np.all(vam_cells[light] == CellClass.LIGHT_GRAY)


def test_mode2_mode3_rotation_symmetry(geometry):
    # leg relabelling i -> i+1 maps mode 3 (PDP) onto mode 2 (PPD)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-6, 6, size=(400, 2))
    rot = pts @ rotation(2 * math.pi / 3).T
    for index in ("angle", "cond"):
        c3, v3 = classify_points(geometry, pts[:, 0], pts[:, 1], 3, SMALL.phis, index)
        c2, v2 = classify_points(geometry, rot[:, 0], rot[:, 1], 2, SMALL.phis, index)
        np.testing.assert_array_equal(c3, c2)
        np.testing.assert_allclose(v3, v2, rtol=1e-9, atol=1e-12, equal_nan=True)


def test_classify_cell_matches_grid(geometry):
    scan = classify_grid(geometry, 2, SMALL)
    rng = np.random.default_rng(6)
    for _ in range(15):
        iy, ix = rng.integers(0, 61, size=2)
        cls = classify_cell(geometry, SMALL.xs[ix], SMALL.ys[iy], 2, SMALL.phi_range, SMALL.phi_res)
        assert cls == scan.cells[iy, ix]


def test_vam_classify_cell(geometry):
    assert vam_classify_cell(geometry, 0.0, 0.0, SMALL.phi_range, 5) == CellClass.LIGHT_GRAY
    assert vam_classify_cell(geometry, 30.0, 0.0, SMALL.phi_range, 5) == CellClass.DARK
    with pytest.raises(ValueError):
        classify_cell(geometry, 0.0, 0.0, 1, SMALL.phi_range, 1)


def test_candidate_pruning_is_safe(geometry):
    spec = GridSpec(x_res=41, y_res=41, phi_res=4)
    cand = candidate_cells(geometry, spec)
    X, Y = spec.mesh()
    cls, _ = classify_points(geometry, X[~cand], Y[~cand], 1, spec.phis)
    assert np.all(cls == CellClass.DARK)


# --- regular dextrous workspace ----------------------------------------------


def test_rdw_circle_is_light_gray_at_finer_orientation(geometry):
    spec = GridSpec(x_res=81, y_res=81, phi_res=6)
    scan = classify_grid(geometry, 1, spec)
    rdw = rdw_search(scan)
    assert rdw.radius > 0.5
    X, Y = spec.mesh()
    inside = np.hypot(X - rdw.center[0], Y - rdw.center[1]) <= rdw.radius
    assert inside.any()
    fine_phis = np.linspace(*spec.phi_range, 4 * (spec.phi_res - 1) + 1)
    cls, _ = classify_points(geometry, X[inside], Y[inside], 1, fine_phis)
    assert np.all(cls == CellClass.LIGHT_GRAY)


def test_rdw_all_dark(geometry):
    scan = classify_grid(geometry, 1, FAR)
    assert np.all(scan.cells == CellClass.DARK)
    rdw = rdw_search(scan)
    assert rdw.radius == 0.0
    with pytest.raises(EmptyRegion):
        rdw_search(scan, strict=True)


def test_rdw_negative_threshold_gives_zero(geometry):
    scan = classify_grid(geometry, 1, SMALL, "angle", -0.1)
    assert not (scan.cells == CellClass.LIGHT_GRAY).any()
    assert rdw_search(scan).radius == 0.0


def test_rdw_synthetic_disc():
    from vamkin.workspace import ScanResult

    spec = GridSpec(x_range=(-5, 5), y_range=(-5, 5), x_res=201, y_res=201, phi_res=2)
    X, Y = spec.mesh()
    cells = np.where(np.hypot(X - 1.0, Y + 0.5) < 3.0, CellClass.LIGHT_GRAY, CellClass.DARK_GRAY).astype(np.int8)
    rdw = rdw_search(ScanResult(spec, 1, "angle", 1.0, cells, np.zeros_like(X)))
    assert rdw.center == pytest.approx((1.0, -0.5), abs=0.06)
    assert rdw.radius == pytest.approx(3.0, abs=0.1)
    assert rdw.radius < 3.0


# --- calibration --------------------------------------------------------------


def test_minimize_tie_goes_to_smaller():
    # two equal plateaus; the smaller argument wins
    def f(x):
        return 0.0 if (1.0 < x < 2.0 or 6.0 < x < 7.0) else 1.0

    x = minimize_on_interval(f, 0.5, 20.0)
    assert 1.0 < x < 2.0


def test_minimize_smooth():
    x = minimize_on_interval(lambda v: (v - 4.2) ** 2, 0.5, 20.0)
    assert x == pytest.approx(4.2, abs=1e-3)


def test_minimize_flat_returns_midpoint(caplog):
    with caplog.at_level(logging.WARNING):
        x = minimize_on_interval(lambda v: 3.0, 0.5, 20.0)
    assert x == pytest.approx(10.25)
    assert "flat" in caplog.text


def test_calibrate_far_grid_is_flat(geometry, caplog):
    with caplog.at_level(logging.WARNING):
        L = calibrate_char_length(geometry, FAR, coarse=5)
    assert L == pytest.approx(10.25)


def test_calibrate_rejects_bad_targets(geometry):
    with pytest.raises(ValueError):
        calibrate_char_length(geometry, SMALL, target_ratios=(0.5, 0.5))


def test_calibrate_recovers_known_length(geometry):
    # targets generated at L = 4 must calibrate back to a length giving the
    # same ratios
    spec = GridSpec(x_res=41, y_res=41, phi_res=2)
    target = mode_ratios(geometry, spec, PHI, "cond", 0.15, char_length=4.0)
    L = calibrate_char_length(geometry, spec, target_ratios=target, coarse=25)
    got = mode_ratios(geometry, spec, PHI, "cond", 0.15, char_length=L)
    np.testing.assert_allclose(got, target, atol=0.02)
