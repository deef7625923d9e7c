"""
Description: Test distribution functions, weak norms, the decay classifier and the predicted regimes

"""
import math

import numpy as np
import pytest

from levelset_decay.errors import (
    ApplicabilityError,
    DomainError,
    InsufficientDataError,
    ParameterError,
)
from levelset_decay.growth import IDENTITY, LOGLINEAR
from levelset_decay.levelsets import (
    Bounded,
    DistributionProfile,
    ExpIntegrable,
    RegimeKind,
    RegimeSpec,
    Unclassified,
    WeakLebesgue,
    classify_decay,
    distribution_function,
    holder_check,
    pde_recursion_params,
    predicted_regime,
    tail,
    truncate,
    weak_holder_constant,
    weak_quasi_norm,
)
from levelset_decay.models import Variant


def test_distribution_function_counts():
    prof = distribution_function([0.0, 1.0, 2.0, 3.0, -4.0], 0.5, [0.0, 1.5, 3.5, 10.0])
    assert list(prof.measures) == [2.0, 1.5, 0.5, 0.0]
    assert prof.total_measure == 2.5
    assert prof.cell_volume == 0.5


def test_distribution_function_is_strict():
    # |{|u| > k}| excludes cells equal to k
    prof = distribution_function(np.ones(10), 1.0, [0.5, 1.0])
    assert list(prof.measures) == [10.0, 0.0]


@pytest.mark.parametrize("bad", [[], [1.0, math.nan], [math.inf]])
def test_distribution_function_domain(bad):
    with pytest.raises(DomainError):
        distribution_function(bad, 1.0, [0.5])


def test_distribution_function_parameters():
    with pytest.raises(ParameterError):
        distribution_function([1.0], 0.0, [0.5])
    with pytest.raises(ParameterError):
        distribution_function([1.0], 1.0, [])


def test_profile_validation():
    with pytest.raises(ParameterError):
        DistributionProfile(np.array([1.0, 2.0]), np.array([0.5, 0.7]), 1.0)
    with pytest.raises(ParameterError):
        DistributionProfile(np.array([2.0, 1.0]), np.array([0.5, 0.2]), 1.0)
    with pytest.raises(ParameterError):
        DistributionProfile(np.array([1.0, 2.0]), np.array([2.0, 1.0]), 1.0)


def test_profile_rows_and_positive_part():
    prof = DistributionProfile(np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.25, 0.0]), 1.0)
    assert prof.to_rows() == [(1.0, 0.5, None), (2.0, 0.25, None), (3.0, 0.0, None)]
    assert prof.to_rows([1.0, 2.0, 3.0])[1] == (2.0, 0.25, 2.0)
    assert len(prof.positive_part()) == 2
    with pytest.raises(ParameterError):
        prof.to_rows([1.0])


def test_weak_quasi_norm():
    prof = DistributionProfile(np.array([1.0, 2.0, 4.0]), np.array([1.0, 0.25, 0.0625]), 1.0)
    assert weak_quasi_norm(prof, 2.0) == pytest.approx(1.0)
    assert weak_quasi_norm(prof, 1.0) == pytest.approx(1.0)
    assert weak_quasi_norm(prof, 2.0, k_min=2.0) == pytest.approx(1.0)
    assert weak_quasi_norm(prof, 2.0, k_min=5.0) == 0.0
    assert weak_quasi_norm(prof, 1.0, gf=LOGLINEAR) > weak_quasi_norm(prof, 1.0)
    with pytest.raises(ParameterError):
        weak_quasi_norm(prof, 0.0)


def test_classify_bounded_at_level_three():
    levels = np.linspace(1.0, 5.0, 9)
    prof = DistributionProfile(levels, np.maximum(3.0 - levels, 0.0), 2.0)
    result = classify_decay(prof)
    assert isinstance(result, Bounded)
    assert result.level == 3.0


def test_classify_exponential():
    levels = np.linspace(1.0, 20.0, 40)
    prof = DistributionProfile(levels, np.exp(-levels), 1.0)
    result = classify_decay(prof)
    assert isinstance(result, ExpIntegrable)
    assert result.rho == pytest.approx(1.0, rel=0.05)
    assert result.lam == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("rho", [0.25, 0.5, 1.0])
def test_classify_stretched_exponential(rho):
    levels = np.geomspace(1.0, 50.0, 40)
    prof = DistributionProfile(levels, np.exp(-np.power(levels, rho)), 1.0)
    result = classify_decay(prof)
    assert isinstance(result, ExpIntegrable)
    assert result.rho == pytest.approx(rho, rel=1e-6)
    assert result.lam == pytest.approx(1.0, rel=1e-6)


def test_tighter_power_fit_beats_a_passing_exponential_fit():
    # ln(1 + ln k) is close enough to linear in ln k on [1, e^0.5] for the
    # exponential fit to pass, but 1/k is an exact power law
    levels = np.geomspace(1.0, math.exp(0.5), 12)
    x, y = np.log(levels), np.log1p(np.log(levels))
    slope, intercept = np.polyfit(x, y, 1)
    assert 0 < slope <= 1.05
    assert np.max(np.abs(y - slope * x - intercept)) <= 0.1 * np.ptp(y)
    prof = DistributionProfile(levels, 1.0 / levels, 1.0)
    result = classify_decay(prof)
    assert isinstance(result, WeakLebesgue)
    assert result.exponent == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("rho", [2.0, 5.0, 12.0])
def test_classify_weak_lebesgue_composed_with_g(rho):
    levels = np.geomspace(2.0, 1e3, 40)
    measures = np.power(LOGLINEAR.g(levels), -rho)
    prof = DistributionProfile(levels, measures, 1.0)
    result = classify_decay(prof, gf=LOGLINEAR)
    assert isinstance(result, WeakLebesgue)
    assert result.exponent == pytest.approx(rho, rel=0.05)
    assert result.composed_with_g
    assert result.quasi_norm == pytest.approx(1.0, rel=1e-9)


def test_classify_weak_lebesgue_plain():
    levels = np.geomspace(1.0, 1e3, 30)
    prof = DistributionProfile(levels, 3.0 * levels ** -2.0, 3.0)
    result = classify_decay(prof, gf=IDENTITY)
    assert isinstance(result, WeakLebesgue)
    assert result.exponent == pytest.approx(2.0, rel=1e-6)
    assert not result.composed_with_g
    assert result.quasi_norm == pytest.approx(3.0)


def test_classify_unclassified():
    levels = np.linspace(1.0, 40.0, 40)
    measures = np.where(levels < 20.0, 1.0 - 1e-3 * levels, 1e-6 * (41.0 - levels))
    prof = DistributionProfile(levels, measures, 1.0)
    result = classify_decay(prof)
    assert isinstance(result, Unclassified)
    assert "exp_fit" in result.diagnostics


def test_classify_needs_levels():
    levels = np.arange(1.0, 6.0)
    prof = DistributionProfile(levels, np.exp(-levels), 1.0)
    with pytest.raises(InsufficientDataError):
        classify_decay(prof)


def test_classify_drops_sparse_levels():
    values = np.concatenate([np.full(100, 1.0), [5.0, 6.0]])
    prof = distribution_function(values, 1.0, np.linspace(0.1, 5.5, 20))
    with pytest.raises(InsufficientDataError):
        classify_decay(prof)


def test_predicted_regime_variational():
    assert isinstance(predicted_regime(RegimeSpec(4, 2.0, 3.0), RegimeKind.VARIATIONAL), Bounded)
    weak = predicted_regime(RegimeSpec(4, 2.0, 1.5), "variational")
    assert isinstance(weak, WeakLebesgue)
    assert weak.exponent == pytest.approx(12.0)
    critical = predicted_regime(RegimeSpec(4, 2.0, 2.0), "variational")
    assert isinstance(critical, ExpIntegrable)
    assert critical.rho == 1.0


def test_predicted_regime_pde():
    weak = predicted_regime(RegimeSpec(3, 2.0, 1.4, 0.25), RegimeKind.DEGENERATE_PDE)
    assert isinstance(weak, WeakLebesgue)
    assert weak.exponent == pytest.approx(15.75)
    assert weak.open
    critical = predicted_regime(RegimeSpec(3, 2.0, 1.5, 0.25), "pde")
    assert isinstance(critical, ExpIntegrable)
    assert critical.rho == pytest.approx(0.75)
    assert critical.open
    assert isinstance(predicted_regime(RegimeSpec(3, 2.0, 4.0, 0.25), "pde"), Bounded)


@pytest.mark.parametrize(
    "spec, kind",
    [
        (RegimeSpec(4, 4.0, 3.0), "variational"),
        (RegimeSpec(4, 2.0, 1.0), "variational"),
        (RegimeSpec(2, 2.0, 4.0), "pde"),
        (RegimeSpec(3, 2.0, 1.2), "pde"),
        (RegimeSpec(3, 2.0, 4.0, 1.0), "pde"),
    ],
)
def test_predicted_regime_guards(spec, kind):
    with pytest.raises(ApplicabilityError):
        predicted_regime(spec, kind)


def test_truncate_and_tail():
    u = np.array([-3.0, 1.0, 5.0])
    assert list(truncate(u, 2.0)) == [-2.0, 1.0, 2.0]
    assert list(tail(u, 2.0)) == [-1.0, 0.0, 3.0]
    assert np.array_equal(truncate(u, 2.0) + tail(u, 2.0), u)
    with pytest.raises(ParameterError):
        truncate(u, -1.0)


def test_weak_holder_constant():
    assert weak_holder_constant(2.0, 4.0) == pytest.approx(4.0)
    with pytest.raises(ParameterError):
        weak_holder_constant(1.0, 1.0)
    with pytest.raises(ParameterError):
        weak_holder_constant(2.0, -1.0)


def test_holder_check_random_fields():
    rng = np.random.default_rng(5)
    for m in (1.5, 2.0, 4.0):
        values = rng.pareto(3.0, size=2000)
        report = holder_check(values, 1e-3, m)
        assert report.passed
        assert report.sets_checked == 2000


def test_holder_check_fails_with_small_gamma():
    report = holder_check(np.ones(50), 1.0, 2.0, gamma=1e-6)
    assert not report.passed
    assert report.to_dict()["passed"] is False


def test_pde_recursion_params():
    p = pde_recursion_params(3, 4.0, 0.25)
    assert p.variant is Variant.SECOND_GENERALIZED
    assert p.alpha == pytest.approx(3.0)
    assert p.beta == pytest.approx(2.25)
    assert p.theta == 0.25
    assert p.gf is LOGLINEAR
    low = pde_recursion_params(3, 1.4, 0.25)
    assert low.beta < 1
    m_star_star = 3 * 1.4 / (3 - 2 * 1.4)
    assert low.alpha * (1 - low.theta) / (1 - low.beta) == pytest.approx(m_star_star * 0.75)


def test_pde_recursion_params_guards():
    with pytest.raises(ApplicabilityError):
        pde_recursion_params(2, 4.0, 0.0)
    with pytest.raises(ApplicabilityError):
        pde_recursion_params(3, 1.0, 0.0)
