"""
Description: Test the level grids, the extremal envelope and the admissibility and dominance checks

"""
import numpy as np
import pytest

from levelset_decay.envelope import (
    GEOMETRIC,
    PROOF_I,
    PROOF_II,
    PROOF_III,
    EnvelopeProfile,
    LevelGrid,
    build_grid,
    check_admissible,
    check_dominance,
    extremal_envelope,
    halving_ladder,
    refine_grid,
    vanishing_chain,
)
from levelset_decay.errors import CapacityError, ParameterError, RangeError
from levelset_decay.growth import IDENTITY, LOGLINEAR, power
from levelset_decay.lemmas import classical_bound, compute_bound
from levelset_decay.models import LemmaParams, PowerEnvelope, StretchedExp, Vanishes, Variant
from levelset_decay.runner import default_k_max


def params(variant, **kw):
    values = {"c": 1.0, "alpha": 1.0, "beta": 2.0, "k0": 1.0, "phi0": 1.0}
    values.update(kw)
    return LemmaParams(Variant.parse(variant), **values)


def grid_of(levels):
    return LevelGrid(np.array(levels, dtype=float), tuple([GEOMETRIC] * len(levels)))


def envelope_for(p, n_geometric=64):
    b = compute_bound(p)
    grid = build_grid(p, default_k_max(b, p.k0), n_geometric, bound_hint=b)
    return b, extremal_envelope(p, grid)


VARIANTS = ["classical", "power", "first", "second"]

# (beta range, theta range per variant, growth functions per variant)
BRANCHES = {
    "vanishing": (
        (1.2, 3.0),
        {"power": (0.0, 0.8), "first": (0.0, 0.6), "second": (0.0, 0.6)},
        {"first": (IDENTITY, LOGLINEAR, power(1.5)), "second": (IDENTITY, LOGLINEAR, power(1.5))},
    ),
    "stretched": (
        (1.0, 1.0),
        {"power": (0.0, 0.8), "first": (0.0, 0.5), "second": (0.0, 0.4)},
        {"first": (IDENTITY, LOGLINEAR), "second": (IDENTITY, LOGLINEAR, power(1.5))},
    ),
    "power": (
        (0.2, 0.8),
        {"power": (0.0, 0.8), "first": (0.0, 0.5), "second": (0.0, 0.3)},
        {"first": (IDENTITY, LOGLINEAR), "second": (IDENTITY, LOGLINEAR, power(1.5))},
    ),
}


def random_params(rng, variant, branch, i):
    betas, thetas, growths = BRANCHES[branch]
    low_k0 = 0.0 if variant == "classical" and branch != "power" else 0.5
    kw = {
        "c": rng.uniform(0.5, 2.0),
        "alpha": rng.uniform(0.5, 3.0),
        "beta": rng.uniform(*betas),
        "k0": rng.uniform(low_k0, 2.0),
        "phi0": rng.uniform(0.5, 2.0),
    }
    if variant != "classical":
        kw["theta"] = rng.uniform(*thetas[variant])
    if variant in growths:
        kw["gf"] = growths[variant][i % len(growths[variant])]
    return params(variant, **kw)


def test_envelope_three_levels():
    prof = extremal_envelope(params("classical"), grid_of([1.0, 2.0, 5.0]))
    assert list(prof.values) == [1.0, 1.0, 0.25]
    assert prof.value_at(3.0) == 1.0
    assert prof.value_at(7.0) == 0.25
    with pytest.raises(RangeError):
        prof.value_at(0.5)


def test_envelope_is_admissible():
    p = params("classical")
    prof = extremal_envelope(p, grid_of([1.0, 2.0, 5.0]))
    report = check_admissible(prof, p)
    assert report.admissible
    assert report.pairs_checked == 3


def test_raised_profile_is_not_admissible():
    p = params("classical")
    prof = EnvelopeProfile(grid_of([1.0, 2.0, 5.0]), np.array([1.0, 1.0, 0.5]), 1.0)
    report = check_admissible(prof, p)
    assert not report.admissible
    assert report.worst_pair == (5.0, 1.0)
    assert report.worst_residual == pytest.approx(1.0)


def test_check_admissible_rejects_unknown_pairs():
    p = params("classical")
    prof = extremal_envelope(p, grid_of([1.0, 2.0, 5.0]))
    with pytest.raises(ParameterError):
        check_admissible(prof, p, pairs="some")


def test_envelope_needs_grid_at_k0():
    with pytest.raises(ParameterError):
        extremal_envelope(params("classical"), grid_of([2.0, 3.0]))


def test_envelope_capacity():
    with pytest.raises(CapacityError):
        extremal_envelope(params("classical"), grid_of(np.arange(1.0, 12.0)), max_levels=10)


def test_level_grid_validation():
    with pytest.raises(ParameterError):
        grid_of([1.0, 1.0, 2.0])
    with pytest.raises(ParameterError):
        LevelGrid(np.array([1.0, 2.0]), (GEOMETRIC,))
    with pytest.raises(ParameterError):
        grid_of([])


def test_profile_must_be_non_increasing():
    with pytest.raises(ParameterError):
        EnvelopeProfile(grid_of([1.0, 2.0]), np.array([1.0, 2.0]), 1.0)


def test_build_grid_merges_proof_levels():
    p = params("classical")
    b = classical_bound(p)
    grid = build_grid(p, 10.0, 64, bound_hint=b)
    assert grid.levels[0] == p.k0
    assert grid.levels[-1] == 10.0
    assert np.all(np.diff(grid.levels) > 0)
    assert b.level in grid.levels
    assert PROOF_I in grid.provenance
    assert GEOMETRIC in grid.provenance


def test_build_grid_proof_tags_per_branch():
    p = params("classical", beta=1.0)
    grid = build_grid(p, 20.0, 32, bound_hint=classical_bound(p))
    assert PROOF_II in grid.provenance
    p = params("classical", beta=0.5)
    grid = build_grid(p, 100.0, 32, bound_hint=classical_bound(p))
    assert PROOF_III in grid.provenance
    assert 64.0 in grid.levels


def test_halving_ladder_contains_every_half():
    ladder = halving_ladder(1.0, 2.0 ** 10, 40)
    rungs = set(ladder.tolist())
    assert ladder[0] == 1.0
    assert ladder[-1] == 2.0 ** 10
    assert np.all(np.diff(ladder) > 0)
    assert all(k / 2 in rungs for k in ladder if k >= 2.0)


def test_power_envelope_grid_is_a_ladder():
    p = params("classical", beta=0.5)
    grid = build_grid(p, 100.0, 32, bound_hint=classical_bound(p))
    assert set(grid.provenance) == {PROOF_III, GEOMETRIC}
    assert grid.levels[-1] == 100.0
    assert grid.provenance[-1] == GEOMETRIC
    rungs = set(grid.levels[:-1].tolist())
    assert all(k / 2 in rungs for k in rungs if k >= 2.0)


def test_build_grid_errors():
    p = params("classical")
    with pytest.raises(RangeError):
        build_grid(p, 1.0)
    with pytest.raises(ParameterError):
        build_grid(p, 10.0, n_geometric=8)


def test_refine_grid_keeps_levels():
    grid = build_grid(params("classical"), 10.0, 16)
    fine = refine_grid(grid)
    assert len(fine) == 2 * len(grid) - 1
    assert set(grid.levels) <= set(fine.levels)


def test_dominance_classical_vanishing():
    b, prof = envelope_for(params("classical"))
    report = check_dominance(b, prof, IDENTITY)
    assert isinstance(b, Vanishes)
    assert report.passed
    assert report.vanish_value <= 1e-10


def test_dominance_classical_stretched_exponential():
    p = params("classical", beta=1.0, k0=0.0)
    b, prof = envelope_for(p)
    report = check_dominance(b, prof, IDENTITY)
    assert report.passed
    assert report.worst_ratio <= 1.0 + 1e-12


def test_dominance_classical_power_envelope():
    b, prof = envelope_for(params("classical", beta=0.5))
    report = check_dominance(b, prof, IDENTITY)
    assert report.passed
    assert report.worst_ratio <= 1.0


@pytest.mark.parametrize(
    "p",
    [
        params("power", beta=1.0, theta=0.5),
        params("first", beta=2.0),
        params("first", beta=1.0, theta=0.25, gf=LOGLINEAR),
        params("second", beta=2.0, theta=0.5),
    ],
)
def test_dominance_generalized_examples(p):
    b, prof = envelope_for(p)
    assert check_dominance(b, prof, p.gf).passed


@pytest.mark.parametrize("alpha, beta", [(0.5, 2.0), (0.685, 2.03)])
def test_dominance_vanishing_with_slow_alpha(alpha, beta):
    p = params("classical", alpha=alpha, beta=beta)
    b, prof = envelope_for(p)
    report = check_dominance(b, prof, IDENTITY, params=p)
    assert report.passed
    assert report.vanish_value <= 1e-10


def test_classical_vanishing_level_is_exact_for_the_chain():
    p = params("classical", alpha=0.5)
    b = classical_bound(p)
    assert b.level == 5.0
    assert vanishing_chain(p, b) <= 1e-10
    assert vanishing_chain(p, b, max_steps=0) == pytest.approx(0.5)


def test_vanishing_chain_edges():
    p = params("classical")
    b = classical_bound(p)
    assert vanishing_chain(params("classical", phi0=0.0), b) == 0.0
    with pytest.raises(RangeError):
        vanishing_chain(p, Vanishes(0.5, p.k0))
    prof = extremal_envelope(p, grid_of([1.0, 2.0, 5.0]))
    assert vanishing_chain(p, b, prof, max_steps=0) == pytest.approx(0.25)


def test_vanishing_level_beyond_the_grid():
    p = params("classical")
    b = classical_bound(p)
    prof = extremal_envelope(p, build_grid(p, 3.0, 32))
    report = check_dominance(b, prof, IDENTITY)
    assert not report.passed
    assert report.failures == [b.level]
    assert "vanishing level" in report.diagnostic
    assert report.to_dict()["diagnostic"] == report.diagnostic
    chained = check_dominance(b, prof, IDENTITY, params=p)
    assert chained.passed
    assert chained.diagnostic is None


@pytest.mark.parametrize("variant", VARIANTS)
def test_dominance_sweep_vanishing(variant):
    rng = np.random.default_rng(11)
    failed = []
    for i in range(50):
        p = random_params(rng, variant, "vanishing", i)
        b, prof = envelope_for(p, n_geometric=16)
        assert isinstance(b, Vanishes)
        report = check_dominance(b, prof, p.gf, params=p)
        if not (report.passed and report.vanish_value <= 1e-10 * p.phi0):
            failed.append(p)
    assert failed == []


@pytest.mark.parametrize("variant", VARIANTS)
def test_dominance_sweep_stretched_exponential(variant):
    rng = np.random.default_rng(12)
    failed = []
    for i in range(100):
        p = random_params(rng, variant, "stretched", i)
        b, prof = envelope_for(p)
        assert isinstance(b, StretchedExp)
        if not check_dominance(b, prof, p.gf, slack=0.05).passed:
            failed.append(p)
    assert failed == []


@pytest.mark.parametrize("variant", VARIANTS)
def test_dominance_sweep_power_envelope(variant):
    rng = np.random.default_rng(13)
    failed = []
    for i in range(100):
        p = random_params(rng, variant, "power", i)
        b, prof = envelope_for(p)
        assert isinstance(b, PowerEnvelope)
        if not check_dominance(b, prof, p.gf, slack=0.05).passed:
            failed.append(p)
    assert failed == []


@pytest.mark.parametrize("branch", sorted(BRANCHES))
@pytest.mark.parametrize("variant", VARIANTS)
def test_refined_grid_never_raises_the_envelope(variant, branch):
    rng = np.random.default_rng(17)
    for i in range(3):
        p = random_params(rng, variant, branch, i)
        b = compute_bound(p)
        grid = build_grid(p, default_k_max(b, p.k0), 32, bound_hint=b)
        coarse = extremal_envelope(p, grid)
        fine = extremal_envelope(p, refine_grid(grid))
        at_coarse = np.array([fine.value_at(k) for k in coarse.levels])
        assert np.all(at_coarse <= coarse.values * (1 + 1e-12))
        before = check_dominance(b, coarse, p.gf)
        after = check_dominance(b, fine, p.gf, levels=coarse.levels)
        assert after.worst_ratio <= before.worst_ratio * (1 + 1e-12)


def test_dominance_detects_a_wrong_bound():
    p = params("classical", beta=1.0, k0=0.0)
    b, prof = envelope_for(p)
    tight = type(b)(b.phi0, b.k0, b.tau / 10.0, b.power)
    assert not check_dominance(tight, prof, IDENTITY).passed


def test_refined_envelope_stays_below_coarse():
    p = params("classical", beta=0.5)
    b = classical_bound(p)
    coarse_grid = build_grid(p, 1e3, 32, bound_hint=b)
    coarse = extremal_envelope(p, coarse_grid)
    fine = extremal_envelope(p, refine_grid(coarse_grid))
    at_coarse = np.array([fine.value_at(k) for k in coarse.levels])
    assert np.all(at_coarse <= coarse.values * (1 + 1e-12))
    assert check_dominance(b, fine, IDENTITY, levels=coarse.levels).passed


def test_dominance_rows_and_slack():
    b, prof = envelope_for(params("classical", beta=0.5))
    report = check_dominance(b, prof, IDENTITY)
    rows = report.rows()
    assert len(rows) == len(prof.levels)
    assert all(len(r) == 4 for r in rows)
    with pytest.raises(ParameterError):
        check_dominance(b, prof, IDENTITY, slack=-1.0)


def test_sampled_profile():
    prof = EnvelopeProfile.sampled([1.0, 2.0, 4.0], lambda k: 1.0 / k)
    assert prof.phi0 == 1.0
    assert list(prof.values) == [1.0, 0.5, 0.25]
