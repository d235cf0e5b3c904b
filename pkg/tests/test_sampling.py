import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drpinns import sampling as sp
from drpinns.exceptions import EmptyInputError, InvalidConfigError, InvalidDomainError


# -- latin hypercube ---------------------------------------------------------

def test_lhs_single_point_strictly_inside():
    pts = sp.latin_hypercube(1, [[0.0, 1.0]], 7)
    assert pts.shape == (1, 1)
    assert 0.0 < pts[0, 0] < 1.0


def test_lhs_stratification_small():
    pts = sp.latin_hypercube(4, [[0.0, 1.0]], 3)
    strata = np.sort(np.floor(4 * pts[:, 0]).astype(int))
    assert strata.tolist() == [0, 1, 2, 3]


def test_lhs_marginal_histogram_exact():
    # 1000 points on the unit square: every 10-bin marginal holds exactly 100
    pts = sp.latin_hypercube(1000, [[0.0, 1.0], [0.0, 1.0]], 11)
    for k in range(2):
        counts, _ = np.histogram(pts[:, k], bins=10, range=(0.0, 1.0))
        assert counts.tolist() == [100] * 10


def test_lhs_deterministic_and_box_scaled():
    box = [[-2.0, 3.0], [1.0, 4.0]]
    a = sp.latin_hypercube(64, box, 5)
    b = sp.latin_hypercube(64, box, 5)
    assert np.array_equal(a, b)
    assert np.all(a[:, 0] > -2) and np.all(a[:, 0] < 3)
    assert np.all(a[:, 1] > 1) and np.all(a[:, 1] < 4)


def test_lhs_rejects_degenerate_box():
    with pytest.raises(InvalidDomainError):
        sp.latin_hypercube(8, [[0.0, 0.0]], 1)


def test_lhs_rejects_non_positive_count():
    with pytest.raises(InvalidConfigError):
        sp.latin_hypercube(0, [[0.0, 1.0]], 1)


# -- boundary sampling --------------------------------------------------------

def test_boundary_1d_alternates_endpoints():
    pts = sp.sample_boundary(5, [[0.0, 1.0]], 0)
    assert pts[:, 0].tolist() == [0.0, 1.0, 0.0, 1.0, 0.0]


def test_boundary_2d_points_on_faces():
    box = np.array([[-1.0, 1.0], [0.0, 2.0]])
    pts = sp.sample_boundary(500, box, 3)
    on_face = (pts == box[:, 0]) | (pts == box[:, 1])
    assert np.all(on_face.any(axis=1))
    inside = (pts >= box[:, 0]) & (pts <= box[:, 1])
    assert np.all(inside)


# -- selection probabilities --------------------------------------------------

def test_probabilities_uniform_for_equal_residuals():
    p = sp.sampling_probabilities([2.0, 2.0, 2.0, 2.0])
    assert np.allclose(p, 0.25, atol=1e-15)


def test_probabilities_formula_two_values():
    eps = 1e-6
    p = sp.sampling_probabilities([1.0, 3.0], eps)
    expected = np.array([1.0 + eps, 3.0 + eps]) / (4.0 + 2 * eps)
    assert np.allclose(p, expected, rtol=0, atol=1e-16)


def test_probabilities_epsilon_floor_on_zeros():
    p = sp.sampling_probabilities([0.0, 0.0, 0.0], 1e-6)
    assert np.allclose(p, 1.0 / 3.0, atol=1e-15)


def test_probabilities_empty_input():
    with pytest.raises(EmptyInputError):
        sp.sampling_probabilities([])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=-5, max_value=1e6, allow_nan=False),
                min_size=1, max_size=40),
       st.floats(min_value=1e-9, max_value=1e-2))
def test_probabilities_form_a_distribution(res, eps):
    p = sp.sampling_probabilities(res, eps)
    assert np.all(p > 0)
    assert abs(p.sum() - 1.0) <= 1e-12
    clamped = np.maximum(np.asarray(res, dtype=float), 0.0)
    order = np.argsort(clamped)
    assert np.all(np.diff(p[order]) >= -1e-15)


def test_parent_selection_frequency_matches_probabilities():
    # chi-square sanity at 3 standard errors per bin, frozen draw
    res = np.array([0.0, 1.0, 2.0, 4.0, 8.0])
    p = sp.sampling_probabilities(res)
    rng = np.random.default_rng(12345)
    draws = rng.choice(5, size=100_000, p=p)
    counts = np.bincount(draws, minlength=5)
    expected = 100_000 * p
    se = np.sqrt(100_000 * p * (1 - p))
    assert np.all(np.abs(counts - expected) <= 3 * se)


# -- collocation sets and refreshing -----------------------------------------

def _small_set(n=20, seed=0):
    box = np.array([[0.0, 1.0], [0.0, 1.0]])
    interior = sp.latin_hypercube(n, box, seed)
    boundary = sp.sample_boundary(8, box, seed + 1)
    return sp.CollocationSet(interior, boundary, box, 0)


def test_collocation_validation_catches_outside_points():
    box = [[0.0, 1.0]]
    with pytest.raises(InvalidConfigError):
        sp.CollocationSet(np.array([[0.0]]), np.array([[1.0]]), box, 0)
    with pytest.raises(InvalidConfigError):
        sp.CollocationSet(np.array([[0.5]]), np.array([[0.5]]), box, 0)
    with pytest.raises(InvalidConfigError):
        sp.CollocationSet(np.array([[0.5], [0.5]]), np.array([[0.0]]), box, 0)


def test_resample_set_identity_counts():
    cset = _small_set(100)
    res = np.zeros(100)
    cfg = sp.ResampleConfig(parent_count=10, children_per_parent=2, base_radius=0.05)
    new = sp.resample(cset, res, cfg, 99)
    old_rows = {tuple(r) for r in cset.interior}
    new_rows = {tuple(r) for r in new.interior}
    removed = old_rows - new_rows
    d = len(removed)
    assert 1 <= d <= 10
    assert len(new.interior) == 100 - d + 2 * d
    assert new.round == 1


def test_resample_dominant_parent_replaced_by_children():
    cset = _small_set(50)
    res = np.zeros(50)
    res[17] = 1e12  # makes point 17 the parent with near-certainty
    cfg = sp.ResampleConfig(parent_count=5, children_per_parent=2, base_radius=0.02)
    new = sp.resample(cset, res, cfg, 4)
    assert len(new.interior) == 51  # one distinct parent, two children
    parent = cset.interior[17]
    assert not any(np.array_equal(parent, row) for row in new.interior)
    dists = np.linalg.norm(new.interior - parent, axis=1)
    assert np.sum(dists <= 0.02 + 1e-12) >= 2


def test_resample_radius_decays_with_round():
    box = np.array([[0.0, 1.0], [0.0, 1.0]])
    interior = sp.latin_hypercube(30, box, 2)
    cset = sp.CollocationSet(interior, sp.sample_boundary(4, box, 3), box, 40)
    res = np.zeros(30)
    res[3] = 1e12
    cfg = sp.ResampleConfig(parent_count=3, children_per_parent=1, base_radius=0.3)
    new = sp.resample(cset, res, cfg, 8)
    # radius 0.3*exp(-40) is far below any visible displacement
    child = min(new.interior, key=lambda r: np.linalg.norm(r - interior[3]))
    assert np.linalg.norm(child - interior[3]) < 1e-6
    assert new.round == 41


def test_resample_children_stay_in_box_and_reproducible():
    cset = _small_set(60)
    res = np.linspace(0, 1, 60)
    cfg = sp.ResampleConfig(parent_count=20, children_per_parent=3, base_radius=2.0)
    a = sp.resample(cset, res, cfg, 7)
    b = sp.resample(cset, res, cfg, 7)
    assert np.array_equal(a.interior, b.interior)
    assert np.all(a.interior > 0.0) and np.all(a.interior < 1.0)


def test_resample_validates_inputs():
    cset = _small_set(10)
    cfg = sp.ResampleConfig(parent_count=11, children_per_parent=1, base_radius=0.1)
    with pytest.raises(InvalidConfigError):
        sp.resample(cset, np.zeros(10), cfg, 0)
    cfg = sp.ResampleConfig(parent_count=2, children_per_parent=1, base_radius=0.1)
    with pytest.raises(InvalidConfigError):
        sp.resample(cset, np.zeros(9), cfg, 0)


def test_resample_config_validation():
    with pytest.raises(InvalidConfigError):
        sp.ResampleConfig(parent_count=0, children_per_parent=1, base_radius=0.1)
    with pytest.raises(InvalidConfigError):
        sp.ResampleConfig(parent_count=1, children_per_parent=1, base_radius=-0.1)
    with pytest.raises(InvalidConfigError):
        sp.ResampleConfig(parent_count=1, children_per_parent=1, base_radius=0.1,
                          epsilon=0.0)


def test_csv_roundtrip_preserves_set(tmp_path):
    cset = _small_set(25)
    path = tmp_path / "round_0.csv"
    cset.to_csv(path)
    back = sp.CollocationSet.from_csv(path)
    assert back.round == cset.round
    assert np.array_equal(back.box, cset.box)
    assert np.array_equal(back.interior, cset.interior)
    assert np.array_equal(back.boundary, cset.boundary)


def test_normal_cloud_inside_box():
    box = [[0.0, 1.0], [-1.0, 1.0]]
    pts = sp.normal_cloud(500, box, 3)
    assert np.all(pts[:, 0] > 0) and np.all(pts[:, 0] < 1)
    assert np.all(pts[:, 1] > -1) and np.all(pts[:, 1] < 1)
