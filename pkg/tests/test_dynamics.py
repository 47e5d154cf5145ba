import numpy as np
import pytest

from nsdistill.boxes import B_CC, DomainError, PlaneCoords, chsh, make_correlated, make_plane, to_plane_coords
from nsdistill.dynamics import (
    ATTRACTIVE,
    CONVERGED,
    MARGINAL,
    MAX_ITERATIONS,
    REPULSIVE,
    SADDLE,
    THRESHOLD_CROSSED,
    chsh_after,
    classify,
    finite_difference_jacobian,
    fixed_points_1d,
    fixed_points_2d,
    iterate,
    jacobian_t2,
    map_t,
    map_t2,
)
from nsdistill.wiring import compose, paper_protocol


def box_level_t(eps):
    b = make_correlated(eps)
    return to_plane_coords(compose(b, b, paper_protocol()))


def test_map_t_examples():
    assert map_t(0.0) == 0.0
    assert map_t(1.0) == 1.0
    # oracle: compose two copies and read the PR weight back
    assert box_level_t(0.5).xi == pytest.approx(0.625, abs=1e-12)
    assert map_t(0.5) == pytest.approx(0.625, abs=1e-15)


@pytest.mark.parametrize("eps", [-1e-9, 1.5])
def test_map_t_domain(eps):
    with pytest.raises(DomainError):
        map_t(eps)
    with pytest.raises(DomainError):
        chsh_after(eps)


def test_chsh_after():
    b = make_correlated(0.5)
    assert chsh(compose(b, b, paper_protocol())) == pytest.approx(3.25, abs=1e-12)
    assert chsh_after(0.5) == pytest.approx(3.25, abs=1e-15)
    assert chsh_after(1.0) == 4.0
    assert chsh_after(0.0) == 2.0
    for eps in np.linspace(0, 1, 101):
        assert chsh_after(eps) == pytest.approx(2 * (map_t(eps) + 1), abs=1e-12)


def test_monotone_distillation():
    grid = np.linspace(0, 1, 1001)[1:-1]
    assert all(map_t(e) > e for e in grid)


def test_map_t2_examples():
    assert map_t2((1, 0)) == PlaneCoords(1.0, 0.0)
    assert map_t2((0.5, 0)) == PlaneCoords(0.5, 0.0)
    c = map_t2((0.6, 0.4))
    b = make_plane((0.6, 0.4))
    oracle = to_plane_coords(compose(b, b, paper_protocol()))
    assert (oracle.xi, oracle.gamma) == pytest.approx((0.72, 0.28), abs=1e-12)
    assert (c.xi, c.gamma) == pytest.approx((0.72, 0.28), abs=1e-12)


def test_map_t2_domain():
    with pytest.raises(DomainError):
        map_t2((0.9, 0.5))


def test_map_t2_matches_boxes(rng):
    w = paper_protocol()
    for _ in range(300):
        xi = rng.uniform(0, 1)
        gamma = rng.uniform(0, 1) - xi
        b = make_plane((xi, gamma))
        oracle = to_plane_coords(compose(b, b, w))
        c = map_t2((xi, gamma))
        assert (c.xi, c.gamma) == pytest.approx((oracle.xi, oracle.gamma), abs=1e-12)


def test_line_invariance():
    for xi in np.linspace(0, 1, 101):
        c = map_t2((xi, 1 - xi))
        assert c.xi == pytest.approx(map_t(xi), abs=1e-12)
        assert c.gamma == pytest.approx(1 - map_t(xi), abs=1e-12)


def test_iterate_threshold():
    t = iterate(map_t, 0.01, chsh_threshold=B_CC)
    assert t.terminated_by == THRESHOLD_CROSSED
    assert t.steps == 12
    assert t.final == pytest.approx(0.656, abs=1e-3)
    assert t.final > B_CC / 2 - 1
    assert t.chsh[-2] <= B_CC < t.chsh[-1]


def test_iterate_max_n_at_fixed_point():
    t = iterate(map_t, 1.0, max_n=5)
    assert t.terminated_by == MAX_ITERATIONS
    assert t.points == [1.0] * 6


def test_iterate_converges_at_mixed_box():
    t = iterate(map_t2, (0.5, 0.0), tol=1e-12)
    assert t.terminated_by == CONVERGED
    assert t.steps <= 1
    assert t.final == PlaneCoords(0.5, 0.0)


def test_trajectory_chsh_matches_states():
    t = iterate(map_t2, (0.3, 0.6), max_n=10)
    for p, c in zip(t.points, t.chsh):
        assert c == pytest.approx(chsh(make_plane(p)), abs=1e-12)


def test_asymptotic_convergence():
    for eps in np.linspace(1e-3, 1, 500):
        t = iterate(map_t, eps, tol=1e-12)
        assert t.terminated_by == CONVERGED
        assert t.steps <= 60
        assert t.final == pytest.approx(1.0, abs=1e-9)


def test_fixed_points_1d():
    (p0, p1) = fixed_points_1d()
    assert p0.location == 0.0 and p0.eigenvalues == [1.5] and p0.classification == REPULSIVE
    assert p1.location == 1.0 and p1.eigenvalues == [0.5] and p1.classification == ATTRACTIVE


def test_fixed_points_2d():
    reports = {(r.location.xi, r.location.gamma): r for r in fixed_points_2d()}
    assert reports[1.0, 0.0].eigenvalues == pytest.approx([0.5, 2.0], abs=1e-12)
    assert reports[1.0, 0.0].classification == SADDLE
    assert reports[0.0, 1.0].eigenvalues == pytest.approx([1.5, 2.0], abs=1e-12)
    assert reports[0.0, 1.0].classification == REPULSIVE
    assert reports[0.5, 0.0].eigenvalues == pytest.approx([0.0, 0.25], abs=1e-12)
    assert reports[0.5, 0.0].classification == ATTRACTIVE
    for c in reports:
        m = map_t2(c)
        assert (m.xi, m.gamma) == pytest.approx(c, abs=1e-15)


def test_jacobian_at_pr():
    np.testing.assert_allclose(jacobian_t2((1, 0)), [[1.5, 1.0], [0.5, 1.0]], atol=0)


def test_jacobian_matches_finite_differences(rng):
    for _ in range(100):
        xi = rng.uniform(0.01, 0.99)
        gamma = rng.uniform(0.01, 0.99) - xi
        np.testing.assert_allclose(jacobian_t2((xi, gamma)), finite_difference_jacobian((xi, gamma)), atol=1e-6)


@pytest.mark.parametrize("eigs, cls", [
    ([0.2, 0.5], ATTRACTIVE), ([1.5, 2.0], REPULSIVE), ([0.5, 2.0], SADDLE), ([1.0, 0.5], MARGINAL),
    ([-1.2], REPULSIVE),
])
def test_classify(eigs, cls):
    assert classify(eigs) == cls
