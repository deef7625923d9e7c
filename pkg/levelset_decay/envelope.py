"""Extremal envelope oracle.

The extremal envelope is the pointwise-largest non-increasing grid function
with values[0] = phi0 that satisfies every grid pair of the recursion
hypothesis. Bounds are tested by comparing against it.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

import mpmath  # type: ignore
import numpy as np

from .errors import CapacityError, NumericError, ParameterError, RangeError
from .growth import GrowthFunction
from .models import DecayBound, LemmaParams, PowerEnvelope, StretchedExp, Vanishes, Variant
from .utilities import log_grid

logger = logging.getLogger(__name__)

MAX_LEVELS = 20_000
GEOMETRIC = "geometric"
PROOF_I = "proof-sequence-i"
PROOF_II = "proof-sequence-ii"
PROOF_III = "proof-sequence-iii"
DEDUP_RTOL = 1e-12
CHAIN_STEPS = 600


@dataclass(frozen=True)
class LevelGrid:
    levels: np.ndarray
    provenance: Tuple[str, ...]

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        if levels.ndim != 1 or levels.size == 0:
            raise ParameterError("a level grid needs at least one level")
        if not np.all(np.isfinite(levels)):
            raise ParameterError("grid levels must be finite")
        if np.any(np.diff(levels) <= 0):
            raise ParameterError("grid levels must be strictly increasing")
        if len(self.provenance) != levels.size:
            raise ParameterError("one provenance tag per level is required")
        object.__setattr__(self, "levels", levels)

    @property
    def k0(self) -> float:
        return float(self.levels[0])

    def __len__(self) -> int:
        return int(self.levels.size)


def _proof_levels(p: LemmaParams, k_max: float, hint: DecayBound) -> List[Tuple[float, str]]:
    out: List[Tuple[float, str]] = []
    if isinstance(hint, Vanishes):
        top = hint.level
        if p.variant is Variant.CLASSICAL:
            span = top - p.k0
            out = [(p.k0 + span * (1.0 - 2.0 ** -i), PROOF_I) for i in range(41)]
        else:
            out = [(top * (1.0 - 2.0 ** (-i - 1)), PROOF_I) for i in range(41)]
        out.append((top, PROOF_I))
    elif isinstance(hint, StretchedExp):
        s = 0
        while s < 100_000:
            level = hint.k0 + hint.tau * s ** (1.0 / hint.power)
            if level > k_max:
                break
            out.append((level, PROOF_II))
            s += 1
    return [(k, tag) for k, tag in out if p.k0 <= k <= k_max]


def halving_ladder(k0: float, k_max: float, n_levels: int) -> np.ndarray:
    """Levels k0 2^(j/m) up to k_max, m chosen so about n_levels fit.

    Every level at or above 2 k0 has its half on the ladder, which is the
    step the power-envelope proof applies at each level.
    """
    octaves = math.log2(k_max / k0)
    per_octave = max(2, int(math.ceil((n_levels - 1) / max(octaves, 1.0))))
    base = k0 * np.power(2.0, np.arange(per_octave) / per_octave)
    # powers of two keep ladder[j + per_octave] == 2 ladder[j] bit for bit
    rungs = np.concatenate([base * 2.0 ** o for o in range(int(math.floor(octaves)) + 1)])
    return rungs[rungs <= k_max]


def build_grid(
    p: LemmaParams,
    k_max: float,
    n_geometric: int = 64,
    bound_hint: Optional[DecayBound] = None,
) -> LevelGrid:
    """Geometric levels on [k0, k_max] merged with the proof's own level sequence.

    Proof levels always survive deduplication; a geometric level within a
    relative 1e-12 of a kept level is dropped. A power-envelope hint replaces
    the geometric levels by a halving ladder of the same size, with k_max
    appended when it is not a rung.
    """
    k0 = p.k0
    if not k_max > k0:
        raise RangeError(f"k_max = {k_max} must exceed k0 = {k0}")
    if n_geometric < 16:
        raise ParameterError(f"n_geometric must be >= 16, got {n_geometric}")
    if isinstance(bound_hint, PowerEnvelope) and k0 > 0:
        ladder = halving_ladder(k0, k_max, n_geometric)
        tagged = [(float(k), PROOF_III) for k in ladder]
        if ladder[-1] < k_max:
            tagged.append((float(k_max), GEOMETRIC))
    else:
        if k0 > 0:
            base = log_grid(k0, k_max, n_geometric)
        else:
            base = np.linspace(k0, k_max, n_geometric)
        tagged = [(float(k), GEOMETRIC) for k in base]
        if bound_hint is not None:
            tagged.extend(_proof_levels(p, k_max, bound_hint))

    # proof tags sort ahead of geometric ones at equal levels
    tagged.sort(key=lambda kt: (kt[0], kt[1] == GEOMETRIC))
    proof = np.array(sorted({k for k, tag in tagged if tag != GEOMETRIC}))
    levels: List[float] = []
    tags: List[str] = []
    for k, tag in tagged:
        if levels and k == levels[-1]:
            continue
        if tag == GEOMETRIC:
            if levels and k - levels[-1] <= DEDUP_RTOL * abs(k):
                continue
            if proof.size:
                j = int(np.searchsorted(proof, k))
                near = [proof[i] for i in (j - 1, j) if 0 <= i < proof.size]
                if any(abs(k - q) <= DEDUP_RTOL * abs(k) for q in near):
                    continue
        levels.append(k)
        tags.append(tag)
    logger.debug("grid with %d levels (%d from proof sequences)", len(levels), proof.size)
    return LevelGrid(np.array(levels), tuple(tags))


def refine_grid(grid: LevelGrid) -> LevelGrid:
    """Insert a midpoint between consecutive levels, keeping old levels intact."""
    levels = grid.levels
    lo, hi = levels[:-1], levels[1:]
    if np.all(levels > 0):
        mids = np.sqrt(lo) * np.sqrt(hi)
    else:
        mids = 0.5 * (lo + hi)
    keep = (mids > lo) & (mids < hi)
    merged = np.concatenate([levels, mids[keep]])
    tags = list(grid.provenance) + [GEOMETRIC] * int(keep.sum())
    order = np.argsort(merged, kind="stable")
    return LevelGrid(merged[order], tuple(tags[i] for i in order))


@dataclass
class EnvelopeProfile:
    grid: LevelGrid
    values: np.ndarray
    phi0: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.levels.shape:
            raise ParameterError("one value per grid level is required")
        if np.any(values < 0) or np.any(np.diff(values) > 0):
            raise ParameterError("profile values must be non-negative and non-increasing")
        self.values = values

    @property
    def levels(self) -> np.ndarray:
        return self.grid.levels

    def value_at(self, k: float) -> float:
        """Step extension: the value at the largest grid level <= k."""
        if k < self.levels[0]:
            raise RangeError(f"level {k} is below the grid start {self.levels[0]}")
        j = int(np.searchsorted(self.levels, k, side="right")) - 1
        return float(self.values[j])

    @classmethod
    def sampled(cls, levels: Sequence[float], fn, tag: str = GEOMETRIC) -> "EnvelopeProfile":
        levels = np.asarray(levels, dtype=float)
        values = np.asarray(fn(levels), dtype=float)
        grid = LevelGrid(levels, tuple([tag] * levels.size))
        return cls(grid, values, float(values[0]))


def _row_products(weight, levels: np.ndarray, powered: np.ndarray, j: int) -> np.ndarray:
    w = np.asarray(weight(levels[j], levels[:j]), dtype=float)
    if np.any(np.isnan(w)) or np.any(w < 0):
        raise NumericError(f"invalid recursion weight at level {levels[j]!r}")
    with np.errstate(invalid="ignore", over="ignore"):
        prod = w * powered[:j]
    return np.where(powered[:j] == 0, 0.0, prod)


def extremal_envelope(p: LemmaParams, grid: LevelGrid, max_levels: int = MAX_LEVELS) -> EnvelopeProfile:
    """values[j] = min(values[j-1], min_i W(levels[j], levels[i]) values[i]^beta)."""
    n = len(grid)
    if n > max_levels:
        raise CapacityError(f"{n} levels exceed the envelope capacity of {max_levels}")
    if grid.levels[0] != p.k0:
        raise ParameterError("grid must start at k0")
    levels = grid.levels
    values = np.empty(n)
    powered = np.empty(n)
    values[0] = p.phi0
    powered[0] = values[0] ** p.beta
    for j in range(1, n):
        prod = _row_products(p.weight, levels, powered, j)
        values[j] = min(values[j - 1], float(prod.min()))
        powered[j] = values[j] ** p.beta
    return EnvelopeProfile(grid, values, p.phi0)


@dataclass
class AdmissibilityReport:
    worst_residual: float
    worst_pair: Tuple[float, float]
    pairs_checked: int

    @property
    def admissible(self) -> bool:
        return self.worst_residual <= 0

    def to_dict(self) -> dict:
        return {
            "worst_residual": self.worst_residual,
            "worst_pair": list(self.worst_pair),
            "pairs_checked": self.pairs_checked,
        }


def check_admissible(
    prof: EnvelopeProfile, p: Any, pairs: str = "all", floor: float = 1e-300
) -> AdmissibilityReport:
    """Worst relative excess (values[j] - W values[i]^beta) / max(W values[i]^beta, floor).

    `p` is any recursion record with `weight(h, k)` and `beta`. With
    pairs="doubling" only pairs with h = 2k (to 1e-12) are checked.
    """
    levels, values = prof.levels, prof.values
    powered = np.array([v ** p.beta for v in values])
    worst, worst_pair, count = -math.inf, (math.nan, math.nan), 0
    if pairs == "doubling":
        for i, k in enumerate(levels):
            j = int(np.searchsorted(levels, 2 * k))
            for jj in (j - 1, j):
                if 0 <= jj < levels.size and jj > i and math.isclose(levels[jj], 2 * k, rel_tol=1e-12):
                    w = float(p.weight(levels[jj], k))
                    prod = 0.0 if powered[i] == 0 else w * powered[i]
                    res = (values[jj] - prod) / max(prod, floor)
                    count += 1
                    if res > worst:
                        worst, worst_pair = res, (float(levels[jj]), float(k))
                    break
    elif pairs == "all":
        for j in range(1, levels.size):
            prod = _row_products(p.weight, levels, powered, j)
            res = (values[j] - prod) / np.maximum(prod, floor)
            i = int(np.argmax(res))
            count += j
            if res[i] > worst:
                worst, worst_pair = float(res[i]), (float(levels[j]), float(levels[i]))
    else:
        raise ParameterError(f"pairs must be 'all' or 'doubling', got '{pairs}'")
    return AdmissibilityReport(float(worst), worst_pair, count)


def _chain_weight(p: LemmaParams, h, gap):
    """W(h, h - gap) in mpmath; g itself is evaluated in double precision."""
    ta = mpmath.mpf(p.theta) * p.alpha
    if p.variant is Variant.FIRST_GENERALIZED:
        denom = mpmath.mpf(float(p.gf.g(float(gap))))
    else:
        denom = gap
    if denom <= 0:
        return mpmath.inf
    w = mpmath.mpf(p.c) / denom ** p.alpha
    if p.variant in (Variant.POWER_WEIGHTED, Variant.FIRST_GENERALIZED):
        w *= h ** ta
    elif p.variant is Variant.SECOND_GENERALIZED:
        w *= mpmath.mpf(float(p.gf.g(float(h)))) ** ta
    return w


def vanishing_chain(
    p: LemmaParams,
    b: Vanishes,
    prof: Optional[EnvelopeProfile] = None,
    vanish_tol: float = 1e-10,
    max_steps: int = CHAIN_STEPS,
) -> float:
    """Upper bound for the envelope at a vanishing threshold, taken along the proof chain.

    The chain levels are level - span 2^-i, starting from k0 (classical) or
    from half the threshold. Gaps are carried exactly, so the chain keeps
    going where its levels collapse onto the threshold in double precision.
    Each step applies the recursion to the previous chain level, and every
    chain level also bounds the threshold directly; the smallest of those is
    returned, stopping early once it is <= vanish_tol phi0. With `prof` the
    chain starts from the envelope value there instead of phi0.
    """
    if p.phi0 == 0:
        return 0.0
    top = b.level
    start = p.k0 if p.variant is Variant.CLASSICAL else 0.5 * top
    if not top > start:
        raise RangeError(f"vanishing level {top} must exceed the chain start {start}")
    value = p.phi0
    if prof is not None and start >= prof.levels[0]:
        value = min(value, prof.value_at(start))
    if value == 0:
        return 0.0
    # errors grow like beta^i along the chain
    dps = 30 + int(math.ceil(max_steps * math.log10(max(p.beta, 2.0))))
    with mpmath.workdps(dps):
        threshold = mpmath.mpf(top)
        span = threshold - mpmath.mpf(start)
        target = mpmath.mpf(vanish_tol) * p.phi0
        v = mpmath.mpf(value)
        best = mpmath.inf
        steps = 0
        for steps in range(max_steps + 1):
            gap = mpmath.ldexp(span, -steps)
            best = min(best, _chain_weight(p, threshold, gap) * v ** p.beta)
            if best <= target or steps == max_steps:
                break
            half = gap / 2
            v = min(v, _chain_weight(p, threshold - half, half) * v ** p.beta)
        logger.debug("vanishing chain: %d steps, bound %s", steps, mpmath.nstr(best, 6))
        return float(best)


@dataclass
class DominanceReport:
    passed: bool
    worst_ratio: float
    worst_level: float
    failures: List[float] = field(default_factory=list)
    vanish_value: Optional[float] = None
    entries: List[Tuple[float, float, float, float]] = field(default_factory=list)
    diagnostic: Optional[str] = None

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return list(self.entries)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_ratio": self.worst_ratio,
            "worst_level": self.worst_level,
            "failures": self.failures,
            "vanish_value": self.vanish_value,
            "diagnostic": self.diagnostic,
        }


def check_dominance(
    b: DecayBound,
    prof: EnvelopeProfile,
    gf: GrowthFunction,
    slack: float = 0.05,
    vanish_tol: float = 1e-10,
    levels: Optional[Sequence[float]] = None,
    params: Optional[LemmaParams] = None,
) -> DominanceReport:
    """Compare the envelope with a bound at every grid level in its range.

    Power and stretched-exponential bounds pass when envelope <= (1+slack)
    bound. A vanishing bound passes when the envelope at the threshold is
    <= vanish_tol phi0, read at the first grid level at or above it and, with
    `params`, along the exact proof chain (the smaller value counts). It
    fails when neither is available. Its ratio column is envelope/phi0.
    Restricting `levels` compares at a subset of grid levels.
    """
    if slack < 0:
        raise ParameterError("slack must be >= 0")
    grid_levels = prof.levels
    chosen = grid_levels if levels is None else np.asarray(levels, dtype=float)
    entries: List[Tuple[float, float, float, float]] = []
    failures: List[float] = []
    worst, worst_level = 0.0, math.nan
    vanish_value = None
    diagnostic = None
    phi0 = prof.phi0

    if isinstance(b, Vanishes):
        readings = []
        above = chosen[chosen >= b.level]
        if above.size:
            readings.append(prof.value_at(float(above[0])))
        if params is not None:
            readings.append(vanishing_chain(params, b, prof, vanish_tol))
        if readings:
            vanish_value = min(readings)
            if vanish_value > vanish_tol * phi0:
                failures.append(float(b.level))
        else:
            diagnostic = f"no compared level reaches the vanishing level {b.level!r}"
            failures.append(float(b.level))
        for k in chosen:
            env = prof.value_at(float(k))
            bound = b.eval(gf, float(k))
            ratio = (env / phi0 if phi0 > 0 else 0.0) if k >= b.level else 0.0
            entries.append((float(k), env, bound, ratio))
            if ratio > worst:
                worst, worst_level = ratio, float(k)
        return DominanceReport(
            not failures, worst, worst_level, failures, vanish_value, entries, diagnostic
        )

    for k in chosen:
        if k < b.k0:
            continue
        env = prof.value_at(float(k))
        bound = b.eval(gf, float(k))
        if bound > 0:
            ratio = env / bound
        else:
            ratio = 0.0 if env == 0 else math.inf
        entries.append((float(k), env, bound, ratio))
        if ratio > worst:
            worst, worst_level = ratio, float(k)
        if ratio > 1 + slack:
            failures.append(float(k))
    return DominanceReport(not failures, worst, worst_level, failures, vanish_value, entries)
