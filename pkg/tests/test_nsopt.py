import numpy as np
import pytest

from fixorder.errors import DomainError, NonsmoothPointError
from fixorder.nsopt import OptOptions, abscissa_gradient, min_norm_in_hull, minimize_abscissa
from fixorder.placement import place_poles
from fixorder.plant import BENCHMARK, Controller, Plant, closed_loop_coeffs
from fixorder.poly import Poly, abscissa_batch, roots_batch

from conftest import XYSTAR_THETA, ZSTAR


def smooth_points(count, seed):
    """Random order-2 controllers whose active root is simple and well separated."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        th = rng.uniform(-5, 5, 5)
        z, _ = roots_batch(closed_loop_coeffs(BENCHMARK, 2, th[None, :]))
        z = z[0]
        a = np.argmax(z.real)
        others = np.delete(z, a)
        others = others[np.abs(others - z[a].conj()) > 1e-3]
        if np.all(z[a].real - others.real > 1e-2) and np.min(np.abs(others - z[a])) > 1e-1:
            out.append(th)
    return np.array(out)


def test_gradient_trivial_plant():
    plant = Plant(Poly([1.0]), Poly([0.0, 1.0]))
    g = abscissa_gradient(plant, Controller(Poly([1.0]), Poly([2.5])))
    np.testing.assert_allclose(g, [-1.0], rtol=1e-14)


def test_gradient_matches_finite_differences():
    h = 1e-6
    for th in smooth_points(100, seed=6):
        g = abscissa_gradient(BENCHMARK, Controller.from_params(2, th))
        E = np.eye(5) * h
        fp = abscissa_batch(closed_loop_coeffs(BENCHMARK, 2, th + E))
        fm = abscissa_batch(closed_loop_coeffs(BENCHMARK, 2, th - E))
        fd = (fp - fm) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-4 * np.linalg.norm(fd)


def test_gradient_nonsmooth_at_cluster(xystar):
    with pytest.raises(NonsmoothPointError):
        abscissa_gradient(BENCHMARK, xystar)


def test_min_norm_hull():
    G = np.array([[1.0, 1.0], [1.0, -1.0]])
    np.testing.assert_allclose(min_norm_in_hull(G), [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(min_norm_in_hull(np.array([[1.0, 0.0], [-1.0, 0.0]])), [0, 0])
    np.testing.assert_allclose(min_norm_in_hull(np.array([[3.0, 4.0]])), [3.0, 4.0])


def test_min_norm_hull_is_optimal():
    rng = np.random.default_rng(7)
    for _ in range(50):
        G = rng.standard_normal((6, 3)) + rng.uniform(-2, 2, 3)
        g = min_norm_in_hull(G)
        # optimality: <g, row - g> >= 0 for every row
        assert np.all(G @ g - g @ g >= -1e-9 * (1 + g @ g))


def test_options_validation():
    with pytest.raises(DomainError):
        OptOptions(sample_count=3).validate(5)
    with pytest.raises(DomainError):
        OptOptions(radius_schedule=(0.1, 0.2)).validate(5)
    with pytest.raises(DomainError):
        OptOptions(radius_schedule=(0.1, -0.05)).validate(5)
    assert OptOptions().validate(5) == 10


def test_start_order_mismatch(xystar):
    with pytest.raises(DomainError):
        minimize_abscissa(BENCHMARK, 3, xystar)


def test_first_order_cannot_stabilize():
    rng = np.random.default_rng(8)
    for _ in range(3):
        start = Controller.from_params(1, rng.uniform(-3, 3, 3))
        res = minimize_abscissa(BENCHMARK, 1, start, OptOptions(max_iters=50, bfgs_iters=0))
        assert res.objective >= -1e-6


def test_trace_monotone_and_deterministic():
    start = Controller.from_params(2, XYSTAR_THETA + np.array([0.3, -0.2, 0.1, 0.05, 0.2]))
    opts = OptOptions(max_iters=60, seed=11, bfgs_iters=20)
    r1 = minimize_abscissa(BENCHMARK, 2, start, opts)
    r2 = minimize_abscissa(BENCHMARK, 2, start, opts)
    assert r1.trace == r2.trace
    f = np.array([t[1] for t in r1.trace])
    assert np.all(np.diff(f) <= 0)
    assert r1.objective == f[-1]
    assert r1.objective < f[0]
    assert r1.trace_csv().startswith("iteration,objective,radius\n")


def test_pure_sampling_trace_monotone():
    start = Controller.from_params(2, np.array([5.0, 3.0, 0.5, 1.0, -6.0]))
    res = minimize_abscissa(BENCHMARK, 2, start, OptOptions(max_iters=40, seed=3, bfgs_iters=0))
    f = np.array([t[1] for t in res.trace])
    assert np.all(np.diff(f) <= 0)
    assert res.status in {"converged", "stalled", "iteration-cap"}


def _noisy_start(seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(-1, 1, 5)
    return Controller.from_params(2, XYSTAR_THETA + 1e-3 * d / np.linalg.norm(d))


def test_local_minimizer_objective_bound():
    res = minimize_abscissa(BENCHMARK, 2, _noisy_start(0))
    assert res.objective >= ZSTAR - 1e-3


@pytest.mark.xfail(
    strict=False,
    reason="double-precision abscissa near a six-fold root is flat to ~5e-3 over a valley "
    "wider than 1e-2; the minimizer cannot single out the exact cluster point",
)
def test_local_minimizer_pulls_back():
    res = minimize_abscissa(BENCHMARK, 2, _noisy_start(0))
    assert np.linalg.norm(res.controller.params() - XYSTAR_THETA) <= 1e-2


@pytest.mark.xfail(
    strict=False,
    reason="descent from an exact seven-fold cluster lies in a cusp of width ~delta^7; "
    "local methods stall just above the starting value",
)
def test_third_order_descends_below_start():
    start = place_poles(BENCHMARK, 3, Poly.from_roots([-1.0] * 7)).controller
    res = minimize_abscissa(BENCHMARK, 3, start, OptOptions(max_iters=1000))
    assert res.objective < -1
