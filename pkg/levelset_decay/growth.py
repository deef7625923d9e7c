"""Growth functions g and numerical checks of the growth assumptions.

A conforming g is C^1, convex and non-decreasing on [0, inf) with g(0) = 0,
satisfies the doubling bound g(lambda t) <= lambda^mu g(t) for lambda > 1, and
has g'(0+) > 0. All callables accept floats or numpy arrays.
"""
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from .errors import AxiomError, DomainError, ParameterError
from .utilities import log_grid

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class GrowthFunction:
    name: str
    g: Callable[[Any], Any]
    g_prime: Callable[[Any], Any]
    mu: float
    g_prime_at_zero: float
    conforming: bool = True
    notes: str = ""
    convex: bool = True

    def __call__(self, t):
        return self.g(t)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mu": self.mu,
            "g_prime_at_zero": self.g_prime_at_zero,
            "conforming": self.conforming,
        }


def _identity(t):
    return np.asarray(t, dtype=float) * 1.0


def _one(t):
    return np.ones_like(np.asarray(t, dtype=float))


def _loglinear(t):
    t = np.asarray(t, dtype=float)
    return t * np.log(np.e + t)


def _loglinear_prime(t):
    t = np.asarray(t, dtype=float)
    return np.log(np.e + t) + t / (np.e + t)


def _power(t, p):
    return np.power(np.asarray(t, dtype=float), p)


def _power_prime(t, p):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return p * np.power(t, p - 1.0)


IDENTITY = GrowthFunction("identity", _identity, _one, mu=1.0, g_prime_at_zero=1.0)

LOGLINEAR = GrowthFunction(
    "loglinear", _loglinear, _loglinear_prime, mu=2.0, g_prime_at_zero=1.0
)

# t^{ln 2} is concave: kept only as the beta = 1 witness.
LN2_POWER = GrowthFunction(
    "ln2-power",
    functools.partial(_power, p=LN2),
    functools.partial(_power_prime, p=LN2),
    mu=1.0,
    g_prime_at_zero=math.inf,
    conforming=False,
    notes="concave, violates convexity",
    convex=False,
)

# t^2 has g'(0+) = 0: kept only as the beta > 1 witness.
SQUARE = GrowthFunction(
    "square",
    functools.partial(_power, p=2.0),
    functools.partial(_power_prime, p=2.0),
    mu=2.0,
    g_prime_at_zero=0.0,
    conforming=False,
    notes="g'(0+) = 0",
)


def power(p: float) -> GrowthFunction:
    """t^p with mu = p.

    For p > 1 the slope at 0 vanishes: the function is flagged non-conforming
    and strict mode accepts it only in bounds that do not use g'(0+) > 0.
    """
    if not math.isfinite(p) or p < 1.0:
        raise ParameterError(f"power growth needs finite p >= 1, got {p}")
    if p == 1.0:
        return IDENTITY
    return GrowthFunction(
        f"power-{p:g}",
        functools.partial(_power, p=float(p)),
        functools.partial(_power_prime, p=float(p)),
        mu=float(p),
        g_prime_at_zero=0.0,
        conforming=False,
        notes="g'(0+) = 0",
    )


def growth_from_config(spec: Any) -> GrowthFunction:
    """Resolve {"kind": ..., "p": ...} (or a bare kind string) to a GrowthFunction."""
    if isinstance(spec, GrowthFunction):
        return spec
    if spec is None:
        return IDENTITY
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "identity":
        return IDENTITY
    if kind == "loglinear":
        return LOGLINEAR
    if kind == "power":
        if "p" not in spec:
            raise ParameterError("power growth requires 'p'")
        return power(float(spec["p"]))
    if kind == "ln2-power":
        return LN2_POWER
    if kind == "square":
        return SQUARE
    raise ParameterError(f"unknown growth kind '{kind}'")


def eval_growth(gf: GrowthFunction, t: float) -> float:
    if isinstance(t, bool) or not isinstance(t, (int, float, np.integer, np.floating)):
        raise DomainError(f"growth argument must be a real number, got {t!r}")
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"growth argument must be finite and >= 0, got {t}")
    if t == 0:
        return 0.0
    return float(gf.g(float(t)))


@dataclass(frozen=True)
class AxiomCheck:
    passed: bool
    worst_violation: float
    witness: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "witness": list(self.witness),
        }


@dataclass
class AxiomReport:
    name: str
    mu: float
    t_max: float
    sample_count: int
    tol: float
    checks: Dict[str, AxiomCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> Tuple[str, ...]:
        return tuple(k for k, c in self.checks.items() if not c.passed)

    def to_dict(self) -> dict:
        return {
            "growth": self.name,
            "mu": self.mu,
            "t_max": self.t_max,
            "sample_count": self.sample_count,
            "tol": self.tol,
            "passed": self.passed,
            "checks": {k: c.to_dict() for k, c in self.checks.items()},
        }


def _worst(violations: np.ndarray, witnesses, tol: float) -> AxiomCheck:
    if violations.size == 0:
        return AxiomCheck(True, 0.0)
    violations = np.where(np.isnan(violations), np.inf, violations)
    idx = int(np.argmax(violations))
    worst = float(violations[idx])
    witness = tuple(float(np.ravel(w)[idx]) for w in witnesses)
    return AxiomCheck(worst <= tol, max(worst, 0.0), witness)


def verify_axioms(
    gf: GrowthFunction, t_max: float, sample_count: int = 10_000, tol: float = 1e-12
) -> AxiomReport:
    """Sample the growth assumptions on log-spaced lattices of (0, t_max].

    Violations are relative and reported, never raised. Pair checks (doubling
    and the two-point derivative inequality) use a sqrt(n) x sqrt(n) lattice.
    """
    if not t_max > 0:
        raise ParameterError("t_max must be positive")
    if sample_count < 3:
        raise ParameterError("sample_count must be at least 3")

    report = AxiomReport(gf.name, gf.mu, float(t_max), int(sample_count), float(tol))
    t = log_grid(t_max * 1e-6, t_max, sample_count)
    with np.errstate(all="ignore"):
        g = np.asarray(gf.g(t), dtype=float)
        gp = np.asarray(gf.g_prime(t), dtype=float)

        g0 = float(gf.g(0.0))
        report.checks["zero"] = AxiomCheck(g0 == 0.0, abs(g0), (0.0,))

        nonpositive = np.where(g > 0, 0.0, 1.0)
        report.checks["positivity"] = _worst(nonpositive, (t,), tol)

        scale = np.maximum(np.abs(g[:-1]), np.finfo(float).tiny)
        drops = (g[:-1] - g[1:]) / scale
        report.checks["monotonicity"] = _worst(drops, (t[1:],), tol)

        slopes = np.diff(g) / np.diff(t)
        slope_scale = np.maximum(np.abs(slopes[:-1]), np.finfo(float).tiny)
        bends = (slopes[:-1] - slopes[1:]) / slope_scale
        report.checks["convexity"] = _worst(bends, (t[1:-1],), tol)

        side = max(int(math.isqrt(sample_count)), 2)
        lam = log_grid(1.0 + 1e-3, max(t_max, 1.0 + 2e-3), side)
        ts = log_grid(t_max * 1e-6, t_max, side)
        L, T = np.meshgrid(lam, ts, indexing="ij")
        lhs = np.asarray(gf.g(L * T), dtype=float)
        rhs = np.power(L, gf.mu) * np.asarray(gf.g(T), dtype=float)
        doubling = (lhs - rhs) / np.maximum(rhs, np.finfo(float).tiny)
        report.checks["doubling"] = _worst(doubling.ravel(), (L, T), tol)

        gp0 = gf.g_prime_at_zero
        report.checks["derivative_at_zero"] = AxiomCheck(
            gp0 > 0, 0.0 if gp0 > 0 else 1.0, (0.0,)
        )

        euler = (gp * t - gf.mu * g) / np.maximum(g, np.finfo(float).tiny)
        report.checks["derivative_growth"] = _worst(euler, (t,), tol)

        T1, T2 = np.meshgrid(ts, ts, indexing="ij")
        g1 = np.asarray(gf.g_prime(T1), dtype=float)
        g2 = np.asarray(gf.g_prime(T2), dtype=float)
        lhs = g1 * T2
        rhs = g1 * T1 + g2 * T2
        pair = (lhs - rhs) / (1.0 + lhs)
        report.checks["derivative_pair"] = _worst(pair.ravel(), (T1, T2), tol)

    if not report.passed:
        logger.debug("growth %s fails %s", gf.name, ", ".join(report.failed()))
    return report


def estimate_mu(gf: GrowthFunction, t_max: float, sample_count: int = 10_000) -> float:
    """Lattice sup of ln(g(lambda t)/g(t)) / ln(lambda); diagnostic only."""
    side = max(int(math.isqrt(sample_count)), 2)
    lam = log_grid(1.0 + 1e-3, max(t_max, 1.0 + 2e-3), side)
    ts = log_grid(t_max * 1e-6, t_max, side)
    L, T = np.meshgrid(lam, ts, indexing="ij")
    with np.errstate(all="ignore"):
        ratio = np.log(np.asarray(gf.g(L * T)) / np.asarray(gf.g(T))) / np.log(L)
    ratio = ratio[np.isfinite(ratio)]
    return float(ratio.max()) if ratio.size else math.nan


def require_conforming(
    gf: GrowthFunction, strict: bool, who: str, slope_needed: bool = True
) -> Optional[str]:
    """Strict mode refuses flagged witnesses; permissive mode returns a note.

    With slope_needed=False a convex g whose only defect is g'(0+) = 0 passes.
    """
    if gf.conforming or (not slope_needed and gf.convex):
        return None
    message = f"{who}: growth function '{gf.name}' is non-conforming ({gf.notes})"
    if strict:
        raise AxiomError(message)
    logger.warning(message)
    return message
