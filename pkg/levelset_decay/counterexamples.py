"""Doubling-form equivalence and the two witnesses where it breaks down.

For 0 < beta < 1 the doubling hypothesis phi(2k) <= c~ / g(k)^alpha phi(k)^beta
implies the full hypothesis with an explicit constant. For beta = 1 and
beta > 1 the explicit witnesses below satisfy a doubling hypothesis but not
the conclusion the full hypothesis would force.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath  # type: ignore
import numpy as np
from scipy import optimize  # type: ignore

from .envelope import PROOF_III, EnvelopeProfile, LevelGrid, check_admissible
from .errors import DomainError, NumericError, ParameterError
from .growth import LN2, LN2_POWER, SQUARE, GrowthFunction, require_conforming, verify_axioms
from .utilities import log_grid

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1e-3, 1e-2, 1e-1, 1.0)
PROBE_LIMIT = 1e6
PROBE_THRESHOLD = 1e6


@dataclass(frozen=True)
class DoublingParams:
    c_tilde: float
    alpha: float
    beta: float
    k0: float
    gf: GrowthFunction
    phi0: float

    def __post_init__(self):
        for name in ("c_tilde", "alpha", "beta", "k0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {value}")
        if not (math.isfinite(self.phi0) and self.phi0 >= 0):
            raise ParameterError(f"phi0 must be finite and >= 0, got {self.phi0}")

    def weight(self, h, k):
        """Doubling weight c~/g(k)^alpha; only meaningful for h = 2k."""
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore"):
            return self.c_tilde / np.power(self.gf.g(k), self.alpha)

    def to_dict(self) -> dict:
        return {
            "c_tilde": self.c_tilde,
            "alpha": self.alpha,
            "beta": self.beta,
            "k0": self.k0,
            "phi0": self.phi0,
            "growth": self.gf.to_dict(),
        }


def equivalence_forward(c: float) -> float:
    """Taking h = 2k in the full hypothesis gives the doubling form with c~ = c."""
    if not (math.isfinite(c) and c > 0):
        raise ParameterError(f"c must be finite and > 0, got {c}")
    return float(c)


def equivalence_backward_constant(dp: DoublingParams, strict: bool = True) -> float:
    """c = max{c~ 4^(mu alpha), c_bar^(1 - beta)} for 0 < beta < 1.

    c_bar = 2^(mu alpha (2-beta)/(1-beta)^2) (c1^(1/(1-beta)) + g(k0)^(alpha/(1-beta)) phi0)
    with c1 = c~ 4^(mu alpha), the constant of the h >= 2k case.
    """
    if not 0 < dp.beta < 1:
        raise ParameterError(f"the backward constant needs 0 < beta < 1, got {dp.beta}")
    require_conforming(dp.gf, strict, "equivalence_backward_constant", slope_needed=False)
    mu, a, b = dp.gf.mu, dp.alpha, dp.beta
    c1 = dp.c_tilde * 4.0 ** (mu * a)
    gk0 = float(dp.gf.g(dp.k0))
    c_bar = 2.0 ** (mu * a * (2.0 - b) / (1.0 - b) ** 2) * (
        c1 ** (1.0 / (1.0 - b)) + gk0 ** (a / (1.0 - b)) * dp.phi0
    )
    c = max(c1, c_bar ** (1.0 - b))
    logger.debug("backward constant: c1=%g c_bar=%g c=%g", c1, c_bar, c)
    return c


def _doubling_levels(k0: float, per_octave: int, octaves: int) -> np.ndarray:
    base = k0 * np.power(2.0, np.arange(per_octave) / per_octave)
    # powers of two keep levels[j + per_octave] == 2 levels[j] bit for bit
    rows = [base * 2.0 ** o for o in range(octaves)]
    return np.concatenate(rows + [np.array([k0 * 2.0 ** octaves])])


def doubling_envelope(dp: DoublingParams, per_octave: int = 8, octaves: int = 12) -> EnvelopeProfile:
    """Largest non-increasing grid function obeying the doubling hypothesis.

    Levels are k0 2^(j/per_octave), closed under doubling, so every level above
    the first octave has its half on the grid.
    """
    if per_octave < 1 or octaves < 1:
        raise ParameterError("per_octave and octaves must be >= 1")
    levels = _doubling_levels(dp.k0, per_octave, octaves)
    values = np.empty(levels.size)
    values[0] = dp.phi0
    for j in range(1, levels.size):
        values[j] = values[j - 1]
        i = j - per_octave
        if i >= 0:
            w = float(dp.weight(levels[j], levels[i]))
            prod = 0.0 if values[i] == 0 else w * values[i] ** dp.beta
            values[j] = min(values[j], prod)
    grid = LevelGrid(levels, tuple([PROOF_III] * levels.size))
    return EnvelopeProfile(grid, values, dp.phi0)


@dataclass
class EquivalenceReport:
    c: float
    pairs_checked: int
    violations: int
    worst_ratio: float
    worst_pair: Tuple[float, float]
    doubling_residual: float
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.doubling_residual <= 0

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "pairs_checked": self.pairs_checked,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "worst_pair": list(self.worst_pair),
            "doubling_residual": self.doubling_residual,
            "passed": self.passed,
            "notes": self.notes,
        }

    def to_text(self) -> str:
        status = "holds" if self.passed else "FAILS"
        return "\n".join(
            [
                f"full hypothesis with c = {self.c:.12g} {status}",
                f"pairs checked: {self.pairs_checked}, violations: {self.violations}",
                f"worst phi(h) / (c/g(h-k)^alpha phi(k)^beta): {self.worst_ratio:.6g}"
                f" at (h, k) = ({self.worst_pair[0]:.6g}, {self.worst_pair[1]:.6g})",
                f"doubling residual of the envelope: {self.doubling_residual:.3g}",
            ]
            + self.notes
        )


def verify_equivalence(
    dp: DoublingParams,
    c: Optional[float] = None,
    n_pairs: int = 10_000,
    seed: int = 0,
    per_octave: int = 8,
    octaves: int = 12,
    strict: bool = True,
) -> EquivalenceReport:
    """Check the full hypothesis for the doubling-extremal envelope on random pairs.

    Pairs k0 <= k < h <= k_max are drawn log-uniformly with
    numpy.random.default_rng(seed); phi between grid levels is the step
    extension of the envelope.
    """
    if n_pairs < 1:
        raise ParameterError("n_pairs must be >= 1")
    if c is None:
        c = equivalence_backward_constant(dp, strict=strict)
    prof = doubling_envelope(dp, per_octave, octaves)
    admissible = check_admissible(prof, dp, pairs="doubling")

    rng = np.random.default_rng(seed)
    lo, hi = math.log(dp.k0), math.log(float(prof.levels[-1]))
    draws = np.exp(rng.uniform(lo, hi, size=(n_pairs, 2)))
    k = np.minimum(draws[:, 0], draws[:, 1])
    h = np.maximum(draws[:, 0], draws[:, 1])
    keep = h > k
    k, h = k[keep], h[keep]

    idx_h = np.searchsorted(prof.levels, h, side="right") - 1
    idx_k = np.searchsorted(prof.levels, k, side="right") - 1
    phi_h = prof.values[idx_h]
    phi_k = prof.values[idx_k]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        rhs = c / np.power(dp.gf.g(h - k), dp.alpha) * np.power(phi_k, dp.beta)
        ratio = np.where(phi_h == 0, 0.0, phi_h / rhs)
    violations = int(np.count_nonzero(ratio > 1.0))
    worst = int(np.argmax(ratio)) if ratio.size else 0
    report = EquivalenceReport(
        c=float(c),
        pairs_checked=int(k.size),
        violations=violations,
        worst_ratio=float(ratio[worst]) if ratio.size else 0.0,
        worst_pair=(float(h[worst]), float(k[worst])) if ratio.size else (math.nan, math.nan),
        doubling_residual=admissible.worst_residual,
    )
    if violations:
        logger.warning("full hypothesis fails at %d of %d pairs", violations, k.size)
    return report


@dataclass
class BetaOneReport:
    k_values: List[float]
    residuals: List[float]
    probes: Dict[float, Tuple[float, float]]
    threshold: float
    growth_failures: Tuple[str, ...]

    @property
    def identity_holds(self) -> bool:
        return max(self.residuals, default=0.0) <= 1e-15

    @property
    def unbounded(self) -> bool:
        log_threshold = math.log(self.threshold)
        return all(log_value > log_threshold for _, log_value in self.probes.values())

    def to_dict(self) -> dict:
        return {
            "witness": "phi(k) = exp(-(ln k)^2)",
            "c_tilde": 2.0 ** -LN2,
            "alpha": 2.0,
            "beta": 1.0,
            "growth": LN2_POWER.to_dict(),
            "growth_failures": list(self.growth_failures),
            "max_relative_residual": max(self.residuals, default=0.0),
            "identity_holds": self.identity_holds,
            "probes": [
                {"lambda": lam, "k": k, "log_value": log_value}
                for lam, (k, log_value) in self.probes.items()
            ],
            "unbounded": self.unbounded,
        }

    def to_text(self) -> str:
        lines = [
            "witness phi(k) = exp(-(ln k)^2), c~ = 2^(-ln 2), g(k) = k^(ln 2), alpha = 2",
            f"identity residual (max relative over {len(self.k_values)} levels):"
            f" {max(self.residuals, default=0.0):.3g}",
            f"growth function fails: {', '.join(self.growth_failures) or 'nothing'}",
        ]
        for lam, (k, log_value) in self.probes.items():
            lines.append(f"lambda = {lam:g}: exp(lambda k - (ln k)^2) = exp({log_value:.6g}) at k = {k:.6g}")
        lines.append(
            "no exponential envelope phi0 exp(1 - lambda (k - k0)) can hold"
            if self.unbounded
            else "probe stayed bounded"
        )
        return "\n".join(lines)


def _beta_one_residual(k: float) -> float:
    with mpmath.workdps(50):
        k = mpmath.mpf(k)
        ln2 = mpmath.log(2)
        phi_k = mpmath.exp(-mpmath.log(k) ** 2)
        lhs = mpmath.exp(-mpmath.log(2 * k) ** 2)
        rhs = mpmath.power(2, -ln2) * mpmath.power(k, -2 * ln2) * phi_k
        return float(abs(lhs - rhs) / lhs)


def witness_beta_one(
    k_values: Sequence[float],
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
    k_limit: float = PROBE_LIMIT,
    threshold: float = PROBE_THRESHOLD,
) -> BetaOneReport:
    """phi(2k) = 2^(-ln 2) (k^(ln 2))^(-2) phi(k) exactly, yet phi is not exponential.

    Probes maximise lambda k - (ln k)^2 over a log grid of [1, k_limit]; values
    are reported in log form since they overflow binary64.
    """
    ks = [float(k) for k in k_values]
    for k in ks:
        if not (math.isfinite(k) and k >= 1):
            raise DomainError(f"the beta = 1 witness is defined for k >= 1, got {k}")
    residuals = [_beta_one_residual(k) for k in ks]

    grid = log_grid(1.0, k_limit, 4001)
    probes: Dict[float, Tuple[float, float]] = {}
    for lam in lambdas:
        if not lam > 0:
            raise ParameterError(f"probe lambda must be > 0, got {lam}")
        exponent = lam * grid - np.log(grid) ** 2
        j = int(np.argmax(exponent))
        probes[float(lam)] = (float(grid[j]), float(exponent[j]))

    axioms = verify_axioms(LN2_POWER, 1e3, sample_count=2500)
    return BetaOneReport(ks, residuals, probes, threshold, axioms.failed())


@dataclass
class BetaGtOneReport:
    alpha: float
    k0: int
    k0_real: Optional[float]
    fails_below: bool
    monotone_from: float
    levels: List[float]
    log_residuals: List[float]
    positive: bool

    @property
    def doubling_holds(self) -> bool:
        return max(self.log_residuals, default=0.0) <= 0

    def to_dict(self) -> dict:
        return {
            "witness": "phi(k) = exp(-k)",
            "alpha": self.alpha,
            "beta": 1.5,
            "c_tilde": 1.0,
            "growth": SQUARE.to_dict(),
            "k0": self.k0,
            "k0_real": self.k0_real,
            "fails_below": self.fails_below,
            "monotone_from": self.monotone_from,
            "levels_checked": len(self.levels),
            "max_log_residual": max(self.log_residuals, default=0.0),
            "doubling_holds": self.doubling_holds,
            "phi_positive": self.positive,
        }

    def to_text(self) -> str:
        lines = [
            f"witness phi(k) = exp(-k), c~ = 1, g(k) = k^2, beta = 3/2, alpha = {self.alpha:g}",
            f"k0(alpha) = {self.k0}" + (f" (real root {self.k0_real:.12g})" if self.k0_real else ""),
            f"k^(2 alpha) > exp(k/2) at k0 - 1: {'yes' if self.fails_below else 'no'}",
            f"k/2 - 2 alpha ln k increasing beyond k = {self.monotone_from:g}",
            f"doubling inequality on {len(self.levels)} levels:"
            f" {'holds' if self.doubling_holds else 'FAILS'}",
            f"phi > 0 at every probed level: {'yes' if self.positive else 'no'}"
            " (no finite vanishing level)",
        ]
        return "\n".join(lines)


def _gap(k: float, alpha: float) -> float:
    """k/2 - 2 alpha ln k; k^(2 alpha) <= exp(k/2) iff this is >= 0."""
    return k / 2.0 - 2.0 * alpha * math.log(k)


def witness_beta_gt_one(
    alpha: float, refine: bool = False, k_max: float = 1e3, n_levels: int = 100
) -> BetaGtOneReport:
    """phi(k) = exp(-k) obeys phi(2k) <= (1/k^2)^alpha phi(k)^(3/2) for k >= k0(alpha).

    k0(alpha) is the smallest integer >= 1 beyond which k^(2 alpha) <= exp(k/2).
    The gap k/2 - 2 alpha ln k has its minimum at 4 alpha and increases after it.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise ParameterError(f"alpha must be finite and > 0, got {alpha}")
    turn = 4.0 * alpha
    k0_real: Optional[float] = None
    if _gap(turn, alpha) >= 0:
        k0 = 1
    else:
        hi = 2.0 * turn
        doublings = 0
        while _gap(hi, alpha) <= 0:
            hi *= 2.0
            doublings += 1
            if doublings > 1000:
                raise NumericError("no upper bracket for the k0 root")
        root = optimize.brentq(_gap, turn, hi, args=(alpha,), xtol=1e-14, rtol=4 * np.finfo(float).eps)
        k0 = max(1, math.ceil(root))
        while _gap(k0, alpha) < 0:
            k0 += 1
        while k0 - 1 >= max(turn, 1.0) and _gap(k0 - 1, alpha) >= 0:
            k0 -= 1
        if refine:
            k0_real = float(root)
    fails_below = k0 > 1 and _gap(k0 - 1, alpha) < 0
    logger.debug("k0(%g) = %d", alpha, k0)

    top = max(k_max, 2.0 * k0)
    levels = np.linspace(float(k0), top, n_levels)
    # ln phi(2k) - ln((1/k^2)^alpha phi(k)^(3/2)) = -(k/2 - 2 alpha ln k)
    log_residuals = [-_gap(float(k), alpha) for k in levels]
    positive = all(mpmath.exp(-mpmath.mpf(float(k))) > 0 for k in levels)
    return BetaGtOneReport(
        alpha=float(alpha),
        k0=int(k0),
        k0_real=k0_real,
        fails_below=fails_below,
        monotone_from=turn,
        levels=[float(k) for k in levels],
        log_residuals=log_residuals,
        positive=positive,
    )
