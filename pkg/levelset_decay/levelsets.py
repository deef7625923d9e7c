"""Distribution functions of discrete fields and their decay classes.

phi(k) = |{x : |u(x)| > k}| is sampled on a level sequence; the profile is
then classified as bounded, exponentially integrable or weak-Lebesgue, and
compared with the regime the regularity theorems predict.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ApplicabilityError, DomainError, InsufficientDataError, ParameterError
from .growth import IDENTITY, LOGLINEAR, GrowthFunction
from .models import LemmaParams, Variant

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistributionProfile:
    levels: np.ndarray
    measures: np.ndarray
    total_measure: float
    cell_volume: Optional[float] = None

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        measures = np.asarray(self.measures, dtype=float)
        if levels.ndim != 1 or levels.shape != measures.shape:
            raise ParameterError("levels and measures must be 1-d and of equal length")
        if np.any(np.diff(levels) <= 0):
            raise ParameterError("levels must be strictly increasing")
        if np.any(measures < 0) or np.any(np.diff(measures) > 0):
            raise ParameterError("measures must be non-negative and non-increasing")
        if np.any(measures > self.total_measure * (1 + 1e-12)):
            raise ParameterError("a measure exceeds the total measure")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "measures", measures)

    def __len__(self) -> int:
        return int(self.levels.size)

    def positive_part(self) -> "DistributionProfile":
        keep = self.measures > 0
        return DistributionProfile(self.levels[keep], self.measures[keep], self.total_measure, self.cell_volume)

    def to_rows(self, bound: Optional[Sequence[float]] = None) -> List[Tuple[float, float, Optional[float]]]:
        if bound is not None and len(bound) != len(self):
            raise ParameterError("one bound value per level is required")
        return [
            (float(k), float(phi), None if bound is None else float(bound[j]))
            for j, (k, phi) in enumerate(zip(self.levels, self.measures))
        ]


def _as_field(values: Any) -> np.ndarray:
    arr = np.abs(np.asarray(values, dtype=float)).ravel()
    if arr.size == 0:
        raise DomainError("the field is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError("the field contains non-finite values")
    return arr


def distribution_function(values: Any, cell_volume: float, levels: Sequence[float]) -> DistributionProfile:
    """measures[j] = cell_volume * #{i : |values[i]| > levels[j]}."""
    if not (math.isfinite(cell_volume) and cell_volume > 0):
        raise ParameterError(f"cell_volume must be finite and > 0, got {cell_volume}")
    arr = np.sort(_as_field(values))
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0:
        raise ParameterError("at least one level is required")
    counts = arr.size - np.searchsorted(arr, levels, side="right")
    return DistributionProfile(levels, cell_volume * counts, cell_volume * arr.size, cell_volume)


def weak_quasi_norm(
    prof: DistributionProfile,
    m: float,
    gf: Optional[GrowthFunction] = None,
    k_min: Optional[float] = None,
    k_max: Optional[float] = None,
) -> float:
    """Grid estimate of sup k^m |{|u| > k}| (or with g(k)^m when gf is given)."""
    if not m > 0:
        raise ParameterError(f"m must be > 0, got {m}")
    levels, measures = prof.levels, prof.measures
    keep = np.ones(levels.size, dtype=bool)
    if k_min is not None:
        keep &= levels >= k_min
    if k_max is not None:
        keep &= levels <= k_max
    levels, measures = levels[keep], measures[keep]
    if levels.size == 0:
        return 0.0
    base = np.asarray(gf.g(levels), dtype=float) if gf is not None else levels
    with np.errstate(invalid="ignore"):
        values = np.where(measures > 0, np.power(np.abs(base), m) * measures, 0.0)
    return float(values.max())


@dataclass(frozen=True)
class ClassifierConfig:
    max_residual: float = 0.1
    min_levels: int = 8
    min_cells: int = 4
    rho_max: float = 1.05


@dataclass(frozen=True)
class Bounded:
    level: Optional[float]

    tag = "Bounded"

    def to_dict(self) -> dict:
        return {"tag": self.tag, "level": self.level}


@dataclass(frozen=True)
class ExpIntegrable:
    lam: Optional[float]
    rho: float
    open: bool = False
    residual: Optional[float] = None

    tag = "ExpIntegrable"

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "lambda": self.lam,
            "rho": self.rho,
            "open": self.open,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class WeakLebesgue:
    exponent: float
    quasi_norm: Optional[float]
    composed_with_g: bool
    open: bool = False
    residual: Optional[float] = None

    tag = "WeakLebesgue"

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "exponent": self.exponent,
            "quasi_norm": self.quasi_norm,
            "composed_with_g": self.composed_with_g,
            "open": self.open,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class Unclassified:
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    tag = "Unclassified"

    def to_dict(self) -> dict:
        return {"tag": self.tag, "diagnostics": dict(self.diagnostics)}


DecayClass = Union[Bounded, ExpIntegrable, WeakLebesgue, Unclassified]


def _fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """Least-squares line; residual is max |y - fit| relative to the spread of y."""
    slope, intercept = np.polyfit(x, y, 1)
    spread = float(np.ptp(y))
    worst = float(np.max(np.abs(y - (slope * x + intercept))))
    residual = worst / spread if spread > 0 else 0.0
    return float(slope), float(intercept), residual


def classify_decay(
    prof: DistributionProfile, gf: GrowthFunction = IDENTITY, cfg: ClassifierConfig = ClassifierConfig()
) -> DecayClass:
    """Strongest supported class: Bounded, then ExpIntegrable, then WeakLebesgue.

    The exponential fit is ln(1 - ln(phi/phi0)) = ln(lambda) + rho ln k, the
    shape of phi(k) = phi0 exp(1 - lambda k^rho); the weak fit is
    ln phi = const - rho ln g(k). An exponential fit only wins when the power
    fit is not tighter. Levels below min_cells cells are not fitted.
    """
    zero = np.flatnonzero(prof.measures == 0)
    if zero.size:
        return Bounded(float(prof.levels[zero[0]]))

    usable = (prof.levels > 0) & (prof.measures > 0)
    if prof.cell_volume is not None:
        usable &= prof.measures >= cfg.min_cells * prof.cell_volume
    levels, measures = prof.levels[usable], prof.measures[usable]
    if levels.size < cfg.min_levels:
        raise InsufficientDataError(
            f"{levels.size} usable levels, at least {cfg.min_levels} are required"
        )

    log_k = np.log(levels)
    log_phi = np.log(measures)
    exp_y = np.log(1.0 - (log_phi - log_phi[0]))
    rho, intercept, exp_res = _fit(log_k, exp_y)

    with np.errstate(divide="ignore"):
        log_g = np.log(np.asarray(gf.g(levels), dtype=float))
    finite = np.isfinite(log_g)
    if np.count_nonzero(finite) >= 2:
        slope, _, wl_res = _fit(log_g[finite], log_phi[finite])
    else:
        slope, wl_res = math.nan, math.inf
    diagnostics = {
        "exp_fit": {"rho": rho, "lambda": math.exp(intercept), "residual": exp_res},
        "power_fit": {"exponent": -slope, "residual": wl_res},
        "levels_fitted": int(levels.size),
    }
    logger.debug("classifier fits: %s", diagnostics)

    if exp_res <= cfg.max_residual and 0 < rho <= cfg.rho_max and exp_res <= wl_res:
        return ExpIntegrable(math.exp(intercept), min(rho, 1.0), residual=exp_res)
    if wl_res <= cfg.max_residual and slope < 0:
        exponent = -slope
        quasi = weak_quasi_norm(prof, exponent, gf, k_min=float(levels[0]), k_max=float(levels[-1]))
        return WeakLebesgue(exponent, quasi, gf.name != IDENTITY.name, residual=wl_res)
    return Unclassified(diagnostics)


class RegimeKind(str, Enum):
    VARIATIONAL = "variational"
    DEGENERATE_PDE = "pde"


@dataclass(frozen=True)
class RegimeSpec:
    n: int
    p: float
    sigma_or_m: float
    theta_deg: float = 0.0

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p, "sigma_or_m": self.sigma_or_m, "theta_deg": self.theta_deg}


def predicted_regime(spec: RegimeSpec, kind: Union[RegimeKind, str]) -> DecayClass:
    """Theorem-assigned class from the data exponent against its critical value.

    Open ranges (rho < 1 - theta, exponent < m**(1 - theta)) come back as the
    supremal value with open=True.
    """
    kind = RegimeKind(kind)
    n, s = spec.n, spec.sigma_or_m
    if kind is RegimeKind.VARIATIONAL:
        if not 1 < spec.p < n:
            raise ApplicabilityError(f"p must lie in (1, n) = (1, {n}), got {spec.p}")
        if not s > 1:
            raise ApplicabilityError(f"sigma must be > 1, got {s}")
        critical = n / spec.p
        if math.isclose(s, critical, rel_tol=1e-12):
            return ExpIntegrable(None, 1.0)
        if s > critical:
            return Bounded(None)
        return WeakLebesgue(n * spec.p * s / (n - spec.p * s), None, True)

    theta = spec.theta_deg
    if n <= 2:
        raise ApplicabilityError(f"the degenerate problem needs n > 2, got {n}")
    if not 0 <= theta < 1:
        raise ApplicabilityError(f"theta_deg must lie in [0, 1), got {theta}")
    lower = 2.0 * n / (n + 2.0)
    if not s > lower:
        raise ApplicabilityError(f"m must exceed (2*)' = {lower:g}, got {s}")
    critical = n / 2.0
    if math.isclose(s, critical, rel_tol=1e-12):
        return ExpIntegrable(None, 1.0 - theta, open=True)
    if s > critical:
        return Bounded(None)
    m_star_star = n * s / (n - 2.0 * s)
    return WeakLebesgue(m_star_star * (1.0 - theta), None, True, open=True)


def truncate(values: Any, k: float) -> np.ndarray:
    """T_k(u): u clipped to [-k, k]."""
    if not k >= 0:
        raise ParameterError(f"truncation level must be >= 0, got {k}")
    return np.clip(np.asarray(values, dtype=float), -k, k)


def tail(values: Any, k: float) -> np.ndarray:
    """G_k(u) = u - T_k(u)."""
    arr = np.asarray(values, dtype=float)
    return arr - truncate(arr, k)


def weak_holder_constant(m: float, gamma: float) -> float:
    """B with int_E |f| <= B |E|^(1 - 1/m) whenever |{|f| > t}| <= gamma t^-m."""
    if not m > 1:
        raise ParameterError(f"m must be > 1, got {m}")
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    return m / (m - 1.0) * gamma ** (1.0 / m)


@dataclass
class HolderReport:
    m: float
    gamma: float
    constant: float
    worst_ratio: float
    sets_checked: int

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1.0 + 1e-12

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "gamma": self.gamma,
            "constant": self.constant,
            "worst_ratio": self.worst_ratio,
            "sets_checked": self.sets_checked,
            "passed": self.passed,
        }


def holder_check(values: Any, cell_volume: float, m: float, gamma: Optional[float] = None) -> HolderReport:
    """Check int_E |f| <= B |E|^(1 - 1/m) on the sets of the largest cells.

    Those sets maximise int_E |f| for their measure. Without gamma the exact
    discrete weak norm max_v v^m |{|f| >= v}| is used.
    """
    arr = np.sort(_as_field(values))[::-1]
    measures = cell_volume * np.arange(1, arr.size + 1)
    if gamma is None:
        gamma = float(np.max(np.power(arr, m) * measures))
    constant = weak_holder_constant(m, gamma)
    integrals = cell_volume * np.cumsum(arr)
    bounds = constant * np.power(measures, 1.0 - 1.0 / m)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(integrals > 0, integrals / bounds, 0.0)
    return HolderReport(float(m), float(gamma), constant, float(ratios.max()), int(arr.size))


def pde_recursion_params(n: int, m: float, theta_deg: float, c: float = 1.0, phi0: float = 1.0) -> LemmaParams:
    """Recursion obeyed by the level sets of the degenerate problem.

    alpha = n/(n-2), beta = n(m-1)/((n-2)m), weight c g(h)^(theta alpha)/(h-k)^alpha
    with g(t) = t ln(e + t); beta > 1 exactly when m > n/2.
    """
    if n <= 2:
        raise ApplicabilityError(f"the degenerate problem needs n > 2, got {n}")
    if not m > 2.0 * n / (n + 2.0):
        raise ApplicabilityError(f"m must exceed (2*)' = {2.0 * n / (n + 2.0):g}, got {m}")
    alpha = n / (n - 2.0)
    beta = n * (m - 1.0) / ((n - 2.0) * m)
    return LemmaParams(Variant.SECOND_GENERALIZED, c, alpha, beta, 1.0, phi0, theta_deg, LOGLINEAR)
