import numpy as np
import pytest

from fixorder.errors import DomainError
from fixorder.placement import cluster_all_poles, place_poles, sylvester_matrix
from fixorder.plant import BENCHMARK, Plant, closed_loop_poly, objective
from fixorder.poly import Poly

from conftest import PXYSTAR_COEFFS, XYSTAR_THETA, ZSTAR

S, ONE = Poly([0.0, 1.0]), Poly([1.0])


def third_order_formula(z):
    x = [-35 * z**3 + 14 * z, 21 * z**2 - 2, -7 * z]
    y = [-(z**7), 7 * z**6, -21 * z**5 + 70 * z**3 - 28 * z, 35 * z**4 - 42 * z**2 + 4]
    return np.array(x + y)


def test_sylvester_benchmark_layout():
    # columns x0 x1 x2 y0 y1 y2 y3, rows p0..p6 (with the 2 s^5 term moved to the right side)
    expected = np.array(
        [
            [0, 0, 0, 1, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, 0],
            [2, 0, 0, 0, 0, 1, 0],
            [0, 2, 0, 0, 0, 0, 1],
            [1, 0, 2, 0, 0, 0, 0],
            [0, 1, 0, 0, 0, 0, 0],
            [0, 0, 1, 0, 0, 0, 0],
        ],
        dtype=float,
    )
    M = sylvester_matrix(BENCHMARK.den, BENCHMARK.num, 3)
    np.testing.assert_array_equal(M, expected)
    assert abs(np.linalg.det(M)) > 0.5


def test_sylvester_trivial():
    np.testing.assert_array_equal(sylvester_matrix(S, ONE, 0), [[1.0]])


def test_sylvester_rejects_common_root():
    with pytest.raises(DomainError, match="singular"):
        sylvester_matrix(Poly([1, 0, -1]), Poly([1, 1]), 1)


@pytest.mark.parametrize("z", [-1.0, -2.0, -0.5, -3.3])
def test_place_matches_closed_form(z):
    res = place_poles(BENCHMARK, 3, Poly.from_roots([z] * 7))
    np.testing.assert_allclose(res.controller.params(), third_order_formula(z), rtol=1e-12, atol=1e-12)


def test_place_unit_cluster_integers():
    res = place_poles(BENCHMARK, 3, Poly.from_roots([-1.0] * 7))
    assert res.controller.x == Poly([21, 19, 7, 1])
    assert closed_loop_poly(BENCHMARK, res.controller) == Poly.from_roots([-1.0] * 7)


def test_place_trivial():
    res = place_poles(Plant(ONE, S), 0, Poly([5.0, 1.0]))
    assert res.controller.y == Poly([5.0])


def test_place_rejects_low_order_and_bad_target():
    with pytest.raises(DomainError):
        place_poles(BENCHMARK, 2, Poly.from_roots([-1.0] * 6))
    with pytest.raises(DomainError):
        place_poles(BENCHMARK, 3, Poly.from_roots([-1.0] * 6))
    with pytest.raises(DomainError):
        place_poles(BENCHMARK, 3, Poly.from_roots([-1.0] * 7) * Poly([2.0]))


def test_cluster_benchmark():
    sols = cluster_all_poles(BENCHMARK, 2)
    stable = [s for s in sols if s.kind == "stable"]
    assert len(stable) == 1
    assert abs(stable[0].z - ZSTAR) < 1e-10
    np.testing.assert_allclose(stable[0].controller.params(), XYSTAR_THETA, atol=1e-10)
    np.testing.assert_allclose(
        closed_loop_poly(BENCHMARK, stable[0].controller).real_coeffs, PXYSTAR_COEFFS, atol=1e-12
    )


def test_cluster_reports_marginal_and_unstable():
    sols = cluster_all_poles(BENCHMARK, 2)
    kinds = {s.kind: s.z for s in sols}
    assert abs(kinds["marginal"]) < 1e-10
    assert abs(kinds["unstable"] + ZSTAR) < 1e-10


def test_cluster_zero_set_is_exactly_three_points():
    zs = sorted(s.z for s in cluster_all_poles(BENCHMARK, 2, bracket=(-5.0, 5.0)))
    np.testing.assert_allclose(zs, [ZSTAR, 0.0, -ZSTAR], atol=1e-10)


def test_cluster_first_order_has_no_solution():
    assert cluster_all_poles(BENCHMARK, 1) == []


def test_cluster_requires_overdetermined_order():
    with pytest.raises(DomainError):
        cluster_all_poles(BENCHMARK, 3)


def test_round_trip_random_clusters():
    rng = np.random.default_rng(5)
    for z in rng.uniform(-3, -0.1, 50):
        target = Poly.from_roots([z] * 7)
        k = place_poles(BENCHMARK, 3, target).controller
        got = closed_loop_poly(BENCHMARK, k).real_coeffs
        want = target.real_coeffs
        assert np.max(np.abs(got - want)) <= 1e-9 * np.max(np.abs(want))


@pytest.mark.parametrize("z", [-1.0, -2.0, -4.0, -8.0])
def test_unbounded_witness(z):
    k = place_poles(BENCHMARK, 3, Poly.from_roots([z] * 7)).controller
    assert objective(BENCHMARK, k) <= z + 0.15
