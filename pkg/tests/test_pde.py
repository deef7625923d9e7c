"""
Description: Test the degenerate Dirichlet solver, the singular source and the regime analysis

"""
import math

import numpy as np
import pytest
import scipy.sparse.linalg as sp_la  # type: ignore

from levelset_decay.errors import (
    ApplicabilityError,
    CapacityError,
    ConvergenceError,
    DomainError,
    ParameterError,
)
from levelset_decay.levelsets import Bounded, WeakLebesgue
from levelset_decay.pde import (
    PdeProblem,
    PdeSolution,
    SourceSpec,
    analyze_solution,
    assemble,
    build_source,
    coefficient_a,
    core_window,
    problem_from_config,
    read_solution,
    solve_picard,
    source_quasi_norm,
    write_solution,
)


def radial(m, resolution=33, theta=0.25):
    return PdeProblem(n=3, resolution=resolution, theta_deg=theta, source=SourceSpec("radial", m_target=m))


def constant(value=1.0, resolution=9, theta=0.0):
    return PdeProblem(n=3, resolution=resolution, theta_deg=theta, source=SourceSpec("constant", value=value))


def test_coefficient_a():
    assert coefficient_a(1.0, 1.0, 1.0) == pytest.approx(0.38069, abs=1e-5)
    assert coefficient_a(0.0, 2.0, 0.5) == pytest.approx(2.0)
    assert coefficient_a(-1.0, 1.0, 1.0) == coefficient_a(1.0, 1.0, 1.0)
    values = coefficient_a(np.array([0.0, 1.0, 10.0]), 1.0, 0.25)
    assert np.all(np.diff(values) < 0)


def test_problem_validation():
    with pytest.raises(ParameterError):
        PdeProblem(resolution=10)
    with pytest.raises(ParameterError):
        PdeProblem(n=2)
    with pytest.raises(ParameterError):
        PdeProblem(a_low=2.0, a_high=1.0)
    with pytest.raises(ParameterError):
        PdeProblem(averaging="geometric")
    with pytest.raises(ParameterError):
        PdeProblem(source=SourceSpec("radial", m_target=4.0, center=(0.5, 0.5)))
    with pytest.raises(CapacityError):
        PdeProblem(resolution=129)
    with pytest.raises(ParameterError):
        SourceSpec("radial")
    with pytest.raises(ParameterError):
        SourceSpec("point")


def test_problem_geometry():
    prob = constant(resolution=9)
    assert prob.h == 0.1
    assert prob.shape == (9, 9, 9)
    assert prob.cells == 729
    assert prob.cell_volume == pytest.approx(1e-3)


def test_build_source():
    assert np.all(build_source(PdeProblem(resolution=9)) == 0.0)
    assert np.all(build_source(constant(2.5)) == 2.5)
    prob = radial(4.0, resolution=9)
    f = build_source(prob)
    assert f.shape == prob.shape
    assert f.max() == pytest.approx((prob.h / 2) ** -0.75)
    assert f[4, 4, 4] == f.max()
    with pytest.raises(ApplicabilityError):
        build_source(radial(1.2, resolution=9))


def test_source_quasi_norm_matches_ball_volume():
    prob = radial(4.0, resolution=33)
    assert source_quasi_norm(prob) == pytest.approx(4.0 * math.pi / 3.0, rel=0.15)
    with pytest.raises(ParameterError):
        source_quasi_norm(constant())


def test_assemble_is_symmetric_positive():
    prob = constant(theta=0.25)
    rng = np.random.default_rng(1)
    s = rng.uniform(0.0, 2.0, prob.cells)
    A, b, lo, hi = assemble(prob, s, build_source(prob))
    assert A.shape == (729, 729)
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()
    assert np.all(A.diagonal() > 0)
    assert b.shape == (729,)
    assert 0 < lo <= hi <= 1.0 + 1e-12


def test_averaging_agrees_without_degeneracy():
    prob = constant(theta=0.0)
    harmonic = PdeProblem(3, 9, theta_deg=0.0, source=prob.source, averaging="harmonic")
    s = np.linspace(0.0, 5.0, prob.cells)
    A_a, _, _, _ = assemble(prob, s, build_source(prob))
    A_h, _, lo, hi = assemble(harmonic, s, build_source(harmonic))
    assert abs(A_a - A_h).max() <= 1e-12 * abs(A_a).max()
    assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)


def test_zero_source_gives_zero_field():
    prob = PdeProblem(resolution=9)
    sol = solve_picard(prob)
    assert np.all(sol.field == 0.0)
    assert sol.picard_iterations == 1
    report = analyze_solution(sol, prob)
    assert isinstance(report.measured, Bounded)
    assert report.measured.level == 0.0
    assert report.agreement


def test_poisson_matches_direct_solve():
    prob = constant(resolution=9, theta=0.0)
    sol = solve_picard(prob, picard_tol=1e-10, linear_tol=1e-12)
    A, b, _, _ = assemble(prob, np.zeros(prob.cells), build_source(prob))
    exact = sp_la.spsolve(A.tocsc(), b)
    assert np.allclose(sol.field.ravel(), exact, rtol=1e-6, atol=1e-9 * exact.max())
    assert sol.final_update_norm <= 1e-10


def test_solution_is_symmetric():
    prob = constant(resolution=11, theta=0.25)
    sol = solve_picard(prob)
    u = sol.field
    tol = 1e-8 * np.abs(u).max()
    for axis in range(3):
        assert np.allclose(u, np.flip(u, axis=axis), atol=tol)
    assert np.allclose(u, np.transpose(u, (1, 0, 2)), atol=tol)


def test_face_coefficients_stay_in_band():
    prob = constant(value=50.0, resolution=9, theta=0.5)
    sol = solve_picard(prob)
    assert sol.face_max <= prob.a_low * (1 + 1e-12)
    assert sol.face_min >= coefficient_a(sol.s_max, prob.a_low, prob.theta_deg) * (1 - 1e-12)
    assert sol.s_max > 0


def test_linear_scaling_without_degeneracy():
    one = solve_picard(constant(1.0, theta=0.0), picard_tol=1e-11, linear_tol=1e-12)
    two = solve_picard(constant(2.0, theta=0.0), picard_tol=1e-11, linear_tol=1e-12)
    assert np.allclose(two.field, 2.0 * one.field, rtol=1e-6)


def test_picard_reports_history_on_failure():
    prob = constant(resolution=9, theta=0.25)
    with pytest.raises(ConvergenceError) as excinfo:
        solve_picard(prob, max_picard=1)
    assert len(excinfo.value.history) == 1


def test_picard_parameter_errors():
    prob = constant()
    with pytest.raises(ParameterError):
        solve_picard(prob, omega=1.5)
    with pytest.raises(ParameterError):
        solve_picard(prob, max_picard=0)
    with pytest.raises(ParameterError):
        solve_picard(prob, picard_tol=0.0)


def test_bounded_regime_for_integrable_source():
    coarse = solve_picard(radial(4.0, resolution=17))
    prob = radial(4.0, resolution=33)
    fine = solve_picard(prob)
    assert fine.final_update_norm <= 1e-8
    report = analyze_solution(fine, prob)
    assert isinstance(report.predicted, Bounded)
    assert isinstance(report.measured, Bounded)
    assert report.agreement
    top_coarse = np.abs(coarse.field).max()
    top_fine = np.abs(fine.field).max()
    assert abs(top_fine - top_coarse) <= 0.1 * top_fine


def test_weak_regime_prediction_for_singular_source():
    prob = radial(1.4, resolution=33)
    sol = solve_picard(prob)
    report = analyze_solution(sol, prob)
    assert isinstance(report.predicted, WeakLebesgue)
    assert report.predicted.exponent == pytest.approx(15.75)
    assert report.predicted.open
    assert report.profile is not None
    data = report.to_dict()
    assert set(data) == {"measured", "predicted", "agreement", "exponent_comparison"}
    assert isinstance(report.measured, WeakLebesgue)
    assert report.measured.composed_with_g
    assert report.measured.residual <= 0.1
    assert report.measured.exponent < 15.75
    assert report.agreement
    assert report.exponent_comparison["bound"] == pytest.approx(15.75)
    assert report.exponent_comparison["below_bound"]


def test_core_window():
    assert core_window(np.ones((17, 17, 17))) is None
    x = np.linspace(-1.0, 1.0, 33)
    r = np.sqrt(sum(np.square(c) for c in np.meshgrid(x, x, x, indexing="ij")))
    u = np.log(2.0 / np.maximum(r, 1e-3))
    assert core_window(u[::2, ::2, ::2]) is None
    lo, hi = core_window(u)
    assert 0 < lo < hi
    assert np.count_nonzero(u > hi) <= 256
    assert np.count_nonzero(u >= lo) >= u.size // 16


def test_constant_source_is_bounded():
    prob = constant(resolution=9, theta=0.25)
    report = analyze_solution(solve_picard(prob), prob)
    assert isinstance(report.measured, Bounded)
    assert report.agreement


def test_solution_file_round_trip(tmp_path):
    values = np.arange(27, dtype=float).reshape(3, 3, 3) / 7.0
    path = str(tmp_path / "u.bin")
    write_solution(path, values, 3)
    back = read_solution(path)
    assert back.shape == (3, 3, 3)
    assert np.array_equal(back, values)
    with open(path, "rb") as fh:
        header = np.frombuffer(fh.read(16), dtype="<i8")
    assert list(header) == [3, 3]


def test_solution_file_errors(tmp_path):
    with pytest.raises(DomainError):
        write_solution(str(tmp_path / "bad.bin"), np.arange(10.0), 3)
    short = tmp_path / "short.bin"
    short.write_bytes(b"\x00" * 8)
    with pytest.raises(DomainError):
        read_solution(str(short))
    wrong = tmp_path / "wrong.bin"
    wrong.write_bytes(np.array([3, 4], dtype="<i8").tobytes() + np.zeros(27).tobytes())
    with pytest.raises(DomainError):
        read_solution(str(wrong))


def test_analyze_read_back_solution(tmp_path):
    prob = constant(resolution=9, theta=0.25)
    sol = solve_picard(prob)
    path = str(tmp_path / "u.bin")
    write_solution(path, sol.field, 3)
    again = PdeSolution(read_solution(path), 0, math.nan, math.nan)
    assert analyze_solution(again, prob).to_dict() == analyze_solution(sol, prob).to_dict()


def test_problem_from_config():
    prob = problem_from_config({"resolution": 9, "a_low": 2.0, "source": {"kind": "radial", "m_target": 4}})
    assert prob.a_high == 2.0
    assert prob.n == 3
    assert prob.source.m_target == 4.0
    assert problem_from_config({}).source.kind == "zero"
