"""Finite-difference solver for -div(a(u) Du) = f with zero Dirichlet data.

The domain is the unit cube in n dimensions, sampled at N interior nodes per
axis with spacing h = 1/(N + 1). The coefficient
a(s) = a_low / ((1 + |s|)^theta ln^theta(e + |s|)) degenerates as |s| grows,
so the problem is solved by damped Picard iteration on frozen coefficients.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, List, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sp  # type: ignore
import scipy.sparse.linalg as sp_la  # type: ignore

from .errors import (
    ApplicabilityError,
    CapacityError,
    ConvergenceError,
    DomainError,
    NumericError,
    ParameterError,
)
from .growth import IDENTITY, LOGLINEAR
from .levelsets import (
    Bounded,
    ClassifierConfig,
    DecayClass,
    DistributionProfile,
    ExpIntegrable,
    RegimeKind,
    RegimeSpec,
    WeakLebesgue,
    classify_decay,
    distribution_function,
    predicted_regime,
    weak_quasi_norm,
)

logger = logging.getLogger(__name__)

MAX_CELLS = 2_000_000
AVERAGING = ("arithmetic", "harmonic")
SOURCE_KINDS = ("zero", "constant", "radial")
CORE_FRACTION = 1.0 / 16.0
CORE_MIN_CELLS = 256


@dataclass(frozen=True)
class SourceSpec:
    kind: str = "zero"
    value: float = 0.0
    m_target: Optional[float] = None
    center: Optional[Tuple[float, ...]] = None
    cap: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ParameterError(f"unknown source kind '{self.kind}'")
        if self.kind == "radial" and self.m_target is None:
            raise ParameterError("a radial source requires m_target")
        if self.cap is not None and not self.cap > 0:
            raise ParameterError(f"cap must be > 0, got {self.cap}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "m_target": self.m_target,
            "center": None if self.center is None else list(self.center),
            "cap": self.cap,
        }


@dataclass(frozen=True)
class PdeProblem:
    n: int = 3
    resolution: int = 33
    a_low: float = 1.0
    a_high: float = 1.0
    theta_deg: float = 0.0
    source: SourceSpec = SourceSpec()
    averaging: str = "arithmetic"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ParameterError(f"n must be an integer >= 3, got {self.n}")
        if int(self.resolution) != self.resolution or self.resolution < 9 or self.resolution % 2 == 0:
            raise ParameterError(f"resolution must be an odd integer >= 9, got {self.resolution}")
        if not 0 < self.a_low <= self.a_high:
            raise ParameterError(f"need 0 < a_low <= a_high, got {self.a_low}, {self.a_high}")
        if not (math.isfinite(self.theta_deg) and self.theta_deg >= 0):
            raise ParameterError(f"theta_deg must be finite and >= 0, got {self.theta_deg}")
        if self.averaging not in AVERAGING:
            raise ParameterError(f"averaging must be one of {AVERAGING}, got '{self.averaging}'")
        if self.source.center is not None and len(self.source.center) != self.n:
            raise ParameterError("source center needs one coordinate per dimension")
        if self.cells > MAX_CELLS:
            raise CapacityError(f"{self.cells} cells exceed the solver capacity of {MAX_CELLS}")

    @property
    def h(self) -> float:
        return 1.0 / (self.resolution + 1)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.resolution,) * self.n

    @property
    def cells(self) -> int:
        return self.resolution ** self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "resolution": self.resolution,
            "a_low": self.a_low,
            "a_high": self.a_high,
            "theta_deg": self.theta_deg,
            "averaging": self.averaging,
            "source": self.source.to_dict(),
        }


@dataclass
class PdeSolution:
    field: np.ndarray
    picard_iterations: int
    final_update_norm: float
    linear_residual: float
    history: List[float] = dataclasses.field(default_factory=list)
    face_min: float = math.inf
    face_max: float = 0.0
    s_max: float = 0.0

    def to_dict(self) -> dict:
        return {
            "picard_iterations": self.picard_iterations,
            "final_update_norm": self.final_update_norm,
            "linear_residual": self.linear_residual,
            "max_abs": float(np.max(np.abs(self.field))),
            "face_min": self.face_min,
            "face_max": self.face_max,
            "history": list(self.history),
        }


def coefficient_a(s, a_low: float, theta_deg: float):
    """a_low / ((1 + |s|)^theta ln^theta(e + |s|)); equals a_low at s = 0."""
    s = np.abs(np.asarray(s, dtype=float))
    value = a_low / np.power((1.0 + s) * np.log(np.e + s), theta_deg)
    return float(value) if value.ndim == 0 else value


def node_coordinates(prob: PdeProblem) -> List[np.ndarray]:
    axis = (np.arange(prob.resolution) + 1.0) * prob.h
    return np.meshgrid(*([axis] * prob.n), indexing="ij")


def build_source(prob: PdeProblem) -> np.ndarray:
    """Sample f at the nodes; the radial source is |x - center|^(-n/m) capped."""
    src = prob.source
    if src.kind == "zero":
        return np.zeros(prob.shape)
    if src.kind == "constant":
        return np.full(prob.shape, float(src.value))
    lower = 2.0 * prob.n / (prob.n + 2.0)
    if not src.m_target > lower:
        raise ApplicabilityError(f"m_target must exceed (2*)' = {lower:g}, got {src.m_target}")
    center = src.center if src.center is not None else (0.5,) * prob.n
    coords = node_coordinates(prob)
    r = np.sqrt(sum((x - c) ** 2 for x, c in zip(coords, center)))
    exponent = prob.n / src.m_target
    cap = src.cap if src.cap is not None else (prob.h / 2.0) ** -exponent
    with np.errstate(divide="ignore"):
        f = np.where(r > 0, np.power(r, -exponent), np.inf)
    return np.minimum(f, cap)


def source_quasi_norm(prob: PdeProblem, f: Optional[np.ndarray] = None, n_levels: int = 64) -> float:
    """Weak-L^m quasi-norm of the radial source over radii from 4 cells to 1/2."""
    src = prob.source
    if src.kind != "radial":
        raise ParameterError("the source quasi-norm is defined for radial sources")
    if f is None:
        f = build_source(prob)
    exponent = prob.n / src.m_target
    lo, hi = 0.5 ** -exponent, (4.0 * prob.h) ** -exponent
    levels = np.geomspace(lo, hi, n_levels)
    prof = distribution_function(f, prob.cell_volume, levels)
    return weak_quasi_norm(prof, src.m_target)


def _face_coefficients(prob: PdeProblem, s_lo, s_hi) -> np.ndarray:
    if prob.averaging == "arithmetic":
        return coefficient_a(0.5 * (s_lo + s_hi), prob.a_low, prob.theta_deg)
    a_lo = coefficient_a(s_lo, prob.a_low, prob.theta_deg)
    a_hi = coefficient_a(s_hi, prob.a_low, prob.theta_deg)
    return 2.0 * a_lo * a_hi / (a_lo + a_hi)


def assemble(prob: PdeProblem, s: np.ndarray, f: np.ndarray) -> Tuple[sp.csr_matrix, np.ndarray, float, float]:
    """Frozen-coefficient (2n+1)-point system A u = f in CSR form.

    Returns the matrix, the right-hand side and the smallest and largest
    face coefficient used. Boundary faces see s = 0 in the outer cell.
    """
    s = np.asarray(s, dtype=float).reshape(prob.shape)
    idx = np.arange(prob.cells).reshape(prob.shape)
    inv_h2 = 1.0 / prob.h ** 2
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    data: List[np.ndarray] = []
    diag = np.zeros(prob.cells)
    face_min, face_max = math.inf, 0.0
    N = prob.resolution
    for axis in range(prob.n):
        lower = [slice(None)] * prob.n
        upper = [slice(None)] * prob.n
        lower[axis] = slice(0, N - 1)
        upper[axis] = slice(1, N)
        i_lo, i_hi = idx[tuple(lower)].ravel(), idx[tuple(upper)].ravel()
        a_f = _face_coefficients(prob, s[tuple(lower)].ravel(), s[tuple(upper)].ravel()) * inv_h2
        rows += [i_lo, i_hi]
        cols += [i_hi, i_lo]
        data += [-a_f, -a_f]
        np.add.at(diag, i_lo, a_f)
        np.add.at(diag, i_hi, a_f)
        face_min, face_max = min(face_min, a_f.min()), max(face_max, a_f.max())

        for edge in (0, N - 1):
            side = [slice(None)] * prob.n
            side[axis] = edge
            cells = idx[tuple(side)].ravel()
            a_b = _face_coefficients(prob, s[tuple(side)].ravel(), 0.0) * inv_h2
            np.add.at(diag, cells, a_b)
            face_min, face_max = min(face_min, a_b.min()), max(face_max, a_b.max())

    all_cells = np.arange(prob.cells)
    rows.append(all_cells)
    cols.append(all_cells)
    data.append(diag)
    A = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(prob.cells, prob.cells),
    ).tocsr()
    b = np.asarray(f, dtype=float).ravel().copy()
    return A, b, float(face_min / inv_h2), float(face_max / inv_h2)


def solve_linear(A: sp.csr_matrix, b: np.ndarray, linear_tol: float, x0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """Jacobi-preconditioned CG to relative residual <= linear_tol."""
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0:
        return np.zeros_like(b), 0.0
    M = sp.diags(1.0 / A.diagonal())
    x, info = sp_la.cg(A, b, x0=x0, rtol=linear_tol, atol=0.0, maxiter=10 * A.shape[0], M=M)
    if info != 0:
        raise NumericError(f"conjugate gradients stopped without converging (info={info})")
    residual = float(np.linalg.norm(b - A @ x)) / b_norm
    return x, residual


def solve_picard(
    prob: PdeProblem,
    picard_tol: float = 1e-8,
    linear_tol: float = 1e-10,
    max_picard: int = 200,
    omega: float = 0.7,
    f: Optional[np.ndarray] = None,
) -> PdeSolution:
    """Damped fixed-point iteration u <- (1 - omega) u + omega A(u)^-1 f from u = 0.

    omega is halved (at most five times) whenever the max-norm update grows.
    """
    if not (picard_tol > 0 and linear_tol > 0):
        raise ParameterError("tolerances must be > 0")
    if max_picard < 1:
        raise ParameterError("max_picard must be >= 1")
    if not 0 < omega <= 1:
        raise ParameterError(f"omega must lie in (0, 1], got {omega}")
    if f is None:
        f = build_source(prob)
    u = np.zeros(prob.cells)
    history: List[float] = []
    halvings = 0
    face_min, face_max, s_max = math.inf, 0.0, 0.0
    residual = 0.0
    for iteration in range(1, max_picard + 1):
        s_max = max(s_max, float(np.max(np.abs(u))))
        A, b, lo, hi = assemble(prob, u, f)
        face_min, face_max = min(face_min, lo), max(face_max, hi)
        v, residual = solve_linear(A, b, linear_tol, x0=u)
        new = (1.0 - omega) * u + omega * v
        update = float(np.max(np.abs(new - u)))
        history.append(update)
        logger.debug("picard %d: update %.3e (omega %.3g)", iteration, update, omega)
        u = new
        if update <= picard_tol:
            return PdeSolution(
                u.reshape(prob.shape), iteration, update, residual, history, face_min, face_max, s_max
            )
        if len(history) > 1 and update > history[-2] and halvings < 5:
            omega /= 2.0
            halvings += 1
            logger.warning("picard update grew to %.3e, damping lowered to %.3g", update, omega)
    raise ConvergenceError(
        f"Picard iteration did not reach {picard_tol:g} in {max_picard} steps", history
    )


@dataclass
class AnalysisReport:
    measured: DecayClass
    predicted: DecayClass
    agreement: bool
    profile: Optional[DistributionProfile]
    exponent_comparison: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "measured": self.measured.to_dict(),
            "predicted": self.predicted.to_dict(),
            "agreement": self.agreement,
            "exponent_comparison": self.exponent_comparison,
        }


def predicted_for(prob: PdeProblem) -> DecayClass:
    src = prob.source
    if src.kind != "radial":
        # bounded data lies in every L^m
        return Bounded(None)
    return predicted_regime(RegimeSpec(prob.n, 2.0, src.m_target, prob.theta_deg), RegimeKind.DEGENERATE_PDE)


def _compare(measured: DecayClass, predicted: DecayClass) -> Optional[dict]:
    if isinstance(measured, WeakLebesgue) and isinstance(predicted, WeakLebesgue):
        bound, value = predicted.exponent, measured.exponent
    elif isinstance(measured, ExpIntegrable) and isinstance(predicted, ExpIntegrable):
        bound, value = predicted.rho, measured.rho
    else:
        return None
    return {
        "measured": value,
        "bound": bound,
        "open": predicted.open,
        "below_bound": value < bound,
        "relative_difference": (value - bound) / bound,
    }


def core_window(u: np.ndarray) -> Optional[Tuple[float, float]]:
    """Levels exceeded by CORE_FRACTION of the cells down to CORE_MIN_CELLS cells.

    None when the grid is too coarse for the window to span a factor of eight
    in cell counts.
    """
    cells = u.size
    if cells * CORE_FRACTION < 8 * CORE_MIN_CELLS:
        return None
    ordered = np.sort(u, axis=None)[::-1]
    lo = float(ordered[int(cells * CORE_FRACTION)])
    hi = float(ordered[CORE_MIN_CELLS])
    return (lo, hi) if 0 < lo < hi else None


def analyze_solution(
    sol: PdeSolution, prob: PdeProblem, cfg: ClassifierConfig = ClassifierConfig(), n_levels: int = 64
) -> AnalysisReport:
    """Classify |u| on log-spaced levels against the predicted regime.

    A Bounded prediction is checked on levels from the 10th percentile of |u|
    to its maximum. Otherwise the singular core is fitted: levels from the
    one exceeded on a CORE_FRACTION share of the cells to the one exceeded on
    CORE_MIN_CELLS cells, where the boundary layer and the lattice staircase
    around the peak are both out of the way (with g(t) = t ln(e + t) when a
    weak class is predicted). Grids too coarse for that window fall back to
    the positive part of the full range.
    """
    predicted = predicted_for(prob)
    u = np.abs(np.asarray(sol.field, dtype=float))
    if u.size == 0:
        raise DomainError("the solution field is empty")
    top = float(u.max())
    if top == 0:
        return AnalysisReport(Bounded(0.0), predicted, True, None)
    p10 = float(np.percentile(u, 10))
    if p10 <= 0:
        p10 = float(u[u > 0].min())
    if p10 >= top:
        return AnalysisReport(Bounded(top), predicted, isinstance(predicted, Bounded), None)
    gf = LOGLINEAR if isinstance(predicted, WeakLebesgue) else IDENTITY
    window = None if isinstance(predicted, Bounded) else core_window(u)
    if window is not None:
        prof = distribution_function(u, prob.cell_volume, np.geomspace(*window, n_levels))
        logger.debug("fitting the core window [%.6g, %.6g]", *window)
        measured = classify_decay(prof, gf, cfg)
    else:
        levels = np.geomspace(p10, top, n_levels)
        levels[-1] = top
        prof = distribution_function(u, prob.cell_volume, levels)
        if isinstance(predicted, Bounded):
            measured = classify_decay(prof, gf, cfg)
        else:
            measured = classify_decay(prof.positive_part(), gf, cfg)
    agreement = measured.tag == predicted.tag
    logger.debug("measured %s, predicted %s", measured.tag, predicted.tag)
    return AnalysisReport(measured, predicted, agreement, prof, _compare(measured, predicted))


def write_solution(path: str, values: np.ndarray, n: int) -> None:
    """Header of two little-endian int64 (n, resolution), then float64 row-major."""
    arr = np.ascontiguousarray(values, dtype="<f8")
    resolution = arr.shape[0] if arr.ndim > 1 else round(arr.size ** (1.0 / n))
    if arr.size != resolution ** n:
        raise DomainError(f"{arr.size} values do not form a {n}-dimensional cube")
    with open(path, "wb") as fh:
        fh.write(np.array([n, resolution], dtype="<i8").tobytes())
        fh.write(arr.tobytes(order="C"))


def read_solution(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise DomainError(f"{path} is too short for a solution header")
    n, resolution = (int(v) for v in np.frombuffer(raw[:16], dtype="<i8"))
    values = np.frombuffer(raw[16:], dtype="<f8")
    if n < 1 or resolution < 1 or values.size != resolution ** n:
        raise DomainError(f"{path}: header ({n}, {resolution}) does not match {values.size} values")
    return values.reshape((resolution,) * n).copy()


def problem_from_config(data: Mapping[str, Any]) -> PdeProblem:
    src = dict(data.get("source") or {"kind": "zero"})
    center = src.get("center")
    source = SourceSpec(
        kind=src.get("kind", "zero"),
        value=float(src.get("value", 0.0)),
        m_target=None if src.get("m_target") is None else float(src["m_target"]),
        center=None if center is None else tuple(float(c) for c in center),
        cap=None if src.get("cap") is None else float(src["cap"]),
    )
    a_low = float(data.get("a_low", 1.0))
    return PdeProblem(
        n=int(data.get("n", 3)),
        resolution=int(data.get("resolution", 33)),
        a_low=a_low,
        a_high=float(data.get("a_high", a_low)),
        theta_deg=float(data.get("theta_deg", 0.0)),
        source=source,
        averaging=data.get("averaging", "arithmetic"),
    )
