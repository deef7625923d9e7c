"""
Description: Test the growth functions and the numerical checks of the growth assumptions

"""
import math

import numpy as np
import pytest

from levelset_decay.errors import AxiomError, DomainError, ParameterError
from levelset_decay.growth import (
    IDENTITY,
    LN2_POWER,
    LOGLINEAR,
    SQUARE,
    estimate_mu,
    eval_growth,
    growth_from_config,
    power,
    require_conforming,
    verify_axioms,
)


def test_loglinear_passes_every_check():
    report = verify_axioms(LOGLINEAR, 1e3, sample_count=10_000)
    assert report.passed
    assert report.failed() == ()
    for check in report.checks.values():
        assert check.worst_violation <= 1e-12


def test_identity_passes_every_check():
    report = verify_axioms(IDENTITY, 1e3, sample_count=2500)
    assert report.passed


def test_ln2_power_fails_convexity():
    report = verify_axioms(LN2_POWER, 1e3, sample_count=2500)
    assert not report.passed
    assert "convexity" in report.failed()


def test_square_fails_derivative_at_zero():
    report = verify_axioms(SQUARE, 1e3, sample_count=2500)
    assert "derivative_at_zero" in report.failed()
    assert report.checks["doubling"].passed


def test_report_to_dict():
    report = verify_axioms(IDENTITY, 10.0, sample_count=100)
    data = report.to_dict()
    assert data["growth"] == "identity"
    assert data["passed"] is True
    assert set(data["checks"]) == {
        "zero",
        "positivity",
        "monotonicity",
        "convexity",
        "doubling",
        "derivative_at_zero",
        "derivative_growth",
        "derivative_pair",
    }


def test_verify_axioms_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        verify_axioms(IDENTITY, 0.0)
    with pytest.raises(ParameterError):
        verify_axioms(IDENTITY, 10.0, sample_count=2)


def test_eval_growth_values():
    assert eval_growth(IDENTITY, 3.5) == 3.5
    assert eval_growth(LOGLINEAR, 0.0) == 0.0
    assert math.isclose(eval_growth(LOGLINEAR, 1.0), math.log(math.e + 1.0))


@pytest.mark.parametrize("bad", [-1.0, math.inf, math.nan, "3", None, True])
def test_eval_growth_domain(bad):
    with pytest.raises(DomainError):
        eval_growth(IDENTITY, bad)


def test_power_growth():
    assert power(1.0) is IDENTITY
    gf = power(1.5)
    assert gf.mu == 1.5
    assert gf.g_prime_at_zero == 0.0
    assert not gf.conforming
    assert gf.convex
    assert math.isclose(float(gf.g(4.0)), 8.0)
    with pytest.raises(ParameterError):
        power(0.5)


def test_growth_from_config():
    assert growth_from_config(None) is IDENTITY
    assert growth_from_config("loglinear") is LOGLINEAR
    assert growth_from_config({"kind": "square"}) is SQUARE
    assert growth_from_config({"kind": "power", "p": 2.0}).mu == 2.0
    with pytest.raises(ParameterError):
        growth_from_config({"kind": "cubic"})
    with pytest.raises(ParameterError):
        growth_from_config({"kind": "power"})


def test_estimate_mu_matches_declared_mu():
    assert estimate_mu(IDENTITY, 1e3, 2500) == pytest.approx(1.0, abs=1e-9)
    assert estimate_mu(LOGLINEAR, 1e3, 2500) <= LOGLINEAR.mu


def test_require_conforming():
    assert require_conforming(LOGLINEAR, True, "test") is None
    with pytest.raises(AxiomError):
        require_conforming(LN2_POWER, True, "test")
    note = require_conforming(LN2_POWER, False, "test")
    assert "ln2-power" in note


def test_require_conforming_without_slope():
    gf = power(1.5)
    with pytest.raises(AxiomError):
        require_conforming(gf, True, "test")
    assert require_conforming(gf, True, "test", slope_needed=False) is None
    assert require_conforming(SQUARE, True, "test", slope_needed=False) is None
    with pytest.raises(AxiomError):
        require_conforming(LN2_POWER, True, "test", slope_needed=False)


def test_growth_accepts_arrays():
    t = np.array([0.0, 1.0, 2.0])
    assert np.allclose(LOGLINEAR.g(t), t * np.log(np.e + t))
    assert np.allclose(IDENTITY.g_prime(t), 1.0)
