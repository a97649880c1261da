"""End-to-end acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with its runtime
(visible in ``pytest -v`` output) and fails normally on any violated bound.
"""

import contextlib
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fixorder.analysis import fragility_experiment, step_response
from fixorder.cli import main
from fixorder.hurwitz import stability_batch
from fixorder.placement import place_poles
from fixorder.plant import BENCHMARK, Controller, closed_loop_coeffs, closed_loop_poly, objective
from fixorder.poly import Poly, abscissa_batch

from conftest import SQRT15, XYSTAR_THETA, ZSTAR, multiset_match
from test_analysis import FIVE_DIGIT_ROOTS
from test_certificate import EXPECTED_A

HERE = Path(__file__).resolve().parent


@pytest.fixture
def criterion(request, capsys):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    @contextlib.contextmanager
    def run(number, title, budget):
        start = time.perf_counter()
        ok = False
        try:
            yield
            elapsed = time.perf_counter() - start
            assert elapsed < budget, f"runtime {elapsed:.2f} s exceeds {budget} s"
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f} s, budget {budget} s)"
            with capsys.disabled():
                if reporter is not None:
                    reporter.write_line("")
                    reporter.write_line(line)
                else:
                    print(line)

    return run


def cli_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def test_1_clustering(criterion, capsys):
    with criterion(1, "clustering at z* = -sqrt(15)/5", 1.0):
        doc = cli_json(capsys, "cluster", "--plant", "benchmark", "--order", "2")
        assert abs(doc["z"] - ZSTAR) < 1e-10
        k = Controller.from_json(doc["controller"])
        # (7, 6 sqrt15/5, 27/125, 54 sqrt15/125, -43/5)
        expected = [7, 6 * SQRT15 / 5, 27 / 125, 54 * SQRT15 / 125, -43 / 5]
        assert np.max(np.abs(k.params() - expected)) < 1e-10


def test_2_certificate(criterion, capsys, tmp_path):
    with criterion(2, "certificate at the clustered controller", 1.0):
        path = tmp_path / "xystar.json"
        path.write_text(json.dumps(Controller.from_params(2, XYSTAR_THETA).to_json()))
        doc = cli_json(capsys, "certify", "--plant", "benchmark", "--controller", str(path))
        assert doc["verdict"] == "certified"
        c3, c4 = (complex(*doc["c_solution"][j]) for j in (3, 4))
        assert abs(c3 - (-1 / 24)) < 1e-10
        assert abs(c4 - (-SQRT15 / 30)) < 1e-10
        assert abs(doc["strictness_margin"] - SQRT15 / 30) < 1e-10
        A = np.array(doc["A"])
        As = np.array(doc["A_adjoint"])
        assert np.max(np.abs(A - EXPECTED_A)) < 1e-12
        assert np.max(np.abs(As - EXPECTED_A.T)) < 1e-12


def test_3_soundness_sampling(criterion):
    with criterion(3, "sharp growth on 1e4 perturbations", 30.0):
        rng = np.random.default_rng(2024)
        u = rng.standard_normal((10_000, 5))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        norms = 10.0 ** rng.uniform(-4, -2, 10_000)
        thetas = XYSTAR_THETA + u * norms[:, None]
        alpha = abscissa_batch(closed_loop_coeffs(BENCHMARK, 2, thetas))
        bound = -SQRT15 / 5 + 1e-3 * norms
        worst = np.min(alpha - bound)
        assert worst >= 0, f"violation {worst:.3g}"


def test_4_first_order_infeasibility(criterion):
    with criterion(4, "no stable first-order controller, 2x2 minor exactly 0", 10.0):
        rng = np.random.default_rng(7)
        thetas = rng.uniform(-100, 100, (100_000, 3))
        minors, stable = stability_batch(closed_loop_coeffs(BENCHMARK, 1, thetas))
        assert not stable.any()
        assert np.all(minors[:, 1] == 0.0)


def test_5_third_order_placement(criterion):
    with criterion(5, "third-order placement reproduces (s - z)^7", 1.0):
        for z in (-1.0, -2.0, -4.0):
            target = Poly.from_roots([z] * 7)
            k = place_poles(BENCHMARK, 3, target).controller
            got = closed_loop_poly(BENCHMARK, k).real_coeffs
            want = target.real_coeffs
            assert np.max(np.abs(got - want) / np.abs(want)) < 1e-9
            if z == -4.0:
                assert objective(BENCHMARK, k) < -3.5


def test_6_fragility(criterion, xystar):
    with criterion(6, "five-digit rounding moves the poles", 1.0):
        rep = fragility_experiment(BENCHMARK, xystar, 5)
        assert multiset_match(rep.rounded_roots.roots, FIVE_DIGIT_ROOTS) < 1e-3


def test_7_step_response(criterion, xystar):
    with criterion(7, "settling time and final value", 5.0):
        sr = step_response(BENCHMARK, xystar)
        assert abs(sr.settling_time - 16) <= 2
        assert abs(sr.final_value - 875 / 27) <= 1e-3


PROPERTY_TESTS = [
    "test_poly.py::test_roots_shift_consistency",
    "test_poly.py::test_abscissa_shift",
    "test_certificate.py::test_adjoint_identity",
    "test_nsopt.py::test_gradient_matches_finite_differences",
    "test_analysis.py::test_distance_vs_sampled_solutions",
    "test_analysis.py::test_cluster_membership_brute_force",
    "test_nsopt.py::test_trace_monotone_and_deterministic",
]


def test_8_property_suites(criterion):
    with criterion(8, "property suites", 60.0):
        env = dict(os.environ, PYTHONDONTWRITEBYTECODE="1")
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
            cwd=HERE, capture_output=True, text=True, env=env, check=False,
        )
        assert proc.returncode == 0, proc.stdout[-2000:]
        assert f"{len(PROPERTY_TESTS)} passed" in proc.stdout
