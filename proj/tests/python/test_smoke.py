import json
import math
import os
import subprocess

import numpy as np
import pytest

import excurse


def test_version():
    assert excurse.__version__ == "0.1.0"


def test_covariance_models():
    g = excurse.CovarianceModel.gaussian()
    assert g.name == "gaussian"
    assert g(1.0, 0.0) == pytest.approx(0.606530659712633423604, abs=1e-14)
    m = excurse.CovarianceModel.matern(2.5)
    assert m.radial(1.0) == pytest.approx(0.660278930914271900317, abs=1e-12)


def test_expected_values():
    assert excurse.rho(2, 1.0) == pytest.approx(0.0385108368907489432218, abs=1e-16)
    assert excurse.expected_chi_2d(1.0, 4.0, 1.0) == pytest.approx(0.390230796082313809721, abs=1e-14)
    assert excurse.expected_chi_1d(1.0, 2.0) == pytest.approx(0.0442894112500278369862, abs=1e-14)


def test_simulate_shape_and_determinism():
    a = excurse.simulate(0.0, 0.0, 0.2, 30, 40, 7)
    b = excurse.simulate(0.0, 0.0, 0.2, 30, 40, 7)
    assert a.shape == (30, 40)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, excurse.simulate(0.0, 0.0, 0.2, 30, 40, 8))


def test_euler_characteristic():
    ring = np.zeros((5, 5))
    ring[1:4, 1:4] = 1.0
    ring[2, 2] = 0.0
    assert excurse.euler_characteristic(ring, 0.5) == 0
    ring[2, 2] = 1.0
    assert excurse.euler_characteristic(ring, 0.5) == 1


def test_deformations():
    theta = excurse.Deformation.spiral("r^2")
    assert np.allclose(theta(np.array([2.0, 0.0])), [4.0, 0.0])
    assert excurse.is_spiral(theta)
    assert not excurse.is_spiral(excurse.Deformation.linear(np.diag([2.0, 1.0])))
    j = excurse.jacobian_summary(excurse.Deformation.linear(np.array([[2.0, 1.0], [0.0, 1.0]])), np.zeros(2))
    assert (j.a, j.b, j.c) == pytest.approx((2.0, math.sqrt(2.0), 2.0))
    tens = excurse.Deformation.tensorial("s^3 + s", "t")
    assert excurse.image_area(tens, 1.0, 1.0) == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(excurse.DomainError):
        excurse.Deformation.tensorial("s^2", "t")


def test_identify_linear_round_trip():
    theta = excurse.Deformation.linear(np.array([[2.0, 1.0], [0.0, 1.0]]))
    csv = excurse.analytic_table_csv(theta, [("hseg", 1.0, 0.0), ("vseg", 0.0, 1.0), ("rect", 1.0, 1.0)], [1.0])
    assert csv.startswith("# config-hash: python\n")
    a, b, c = excurse.identify_linear(csv, 1.0, 1.0, 1.0)
    assert (a, b, c) == pytest.approx((2.0, math.sqrt(2.0), 2.0), abs=1e-10)
    mu1, mu2, modulus = excurse.dilatation(a, b, c)
    assert mu1 == pytest.approx(0.2 + 0.4j, abs=1e-12)
    assert mu2 == pytest.approx(0.2 - 0.4j, abs=1e-12)
    assert modulus == pytest.approx(math.sqrt(0.2), abs=1e-12)


def test_isotropy():
    ok, dev, _ = excurse.chi_isotropy(excurse.Deformation.spiral("r^2", "sin(r)"), 2.0, 1.0)
    assert ok and dev <= 1e-6
    ok, dev, worst = excurse.chi_isotropy(excurse.Deformation.linear(np.diag([2.0, 1.0])), 2.0, 1.0)
    assert not ok and dev > 1e-3


def test_errors():
    with pytest.raises(excurse.DomainError):
        excurse.dilatation(1.0, 1.0, 2.0)
    with pytest.raises(excurse.Error):
        excurse.Deformation.spiral("r - 1")


@pytest.mark.skipif("EXCURSE_CLI" not in os.environ, reason="command-line binary not provided")
def test_cli_print_config():
    out = subprocess.run([os.environ["EXCURSE_CLI"], "--print-config"], capture_output=True, text=True, check=True)
    config = json.loads(out.stdout)
    assert config["model"]["kind"] == "gaussian"
    bad = subprocess.run([os.environ["EXCURSE_CLI"], "--config", "/nonexistent.json", "simulate"])
    assert bad.returncode == 4
