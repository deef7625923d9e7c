"""Decay bounds for the four recursion variants and the Giusti iteration.

Every bound function selects its branch from beta alone (> 1, == 1, < 1),
checks the branch guards numerically and returns one of the three bound
shapes from models. Notes on the returned bound record which formula was
used and any numerically certified choice.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import mpmath  # type: ignore
import numpy as np
from scipy import optimize  # type: ignore

from .envelope import build_grid, extremal_envelope
from .errors import ApplicabilityError, NumericError, ParameterError
from .growth import GrowthFunction, require_conforming
from .models import (
    DecayBound,
    LemmaParams,
    PowerEnvelope,
    StretchedExp,
    Vanishes,
    Variant,
)
from .utilities import log_grid, tail_decades

logger = logging.getLogger(__name__)

# Suprema over [k0, inf) are taken on [k0, SUP_SPAN * k0] and certified by a
# strictly decreasing tail over the following five decades.
SUP_SPAN = 1e6
SUP_SAMPLES = 601
# Vanishing levels found numerically are pushed this far past the threshold
# at which the proof chain only just closes.
LEVEL_MARGIN = 1e-12


def _exp2(exponent: float) -> float:
    try:
        return 2.0 ** exponent
    except OverflowError:
        raise NumericError(f"2^{exponent:g} overflows a double") from None


def _pow(base: float, exponent: float) -> float:
    if base == 0.0:
        return 1.0 if exponent == 0 else 0.0
    try:
        return base ** exponent
    except OverflowError:
        raise NumericError(f"{base:g}^{exponent:g} overflows a double") from None


def _require_variant(p: LemmaParams, variant: Variant, who: str) -> None:
    if p.variant is not variant:
        raise ParameterError(f"{who} needs variant '{variant.value}', got '{p.variant.value}'")


def _tail_decreasing(fn: Callable[[np.ndarray], np.ndarray], start: float) -> bool:
    samples = tail_decades(start)
    with np.errstate(all="ignore"):
        values = np.asarray(fn(samples), dtype=float)
    return bool(np.all(np.isfinite(values)) and np.all(np.diff(values) < 0))


def _smallest_satisfying(
    pred: Callable[[float], bool], start: float, rtol: float = 1e-12
) -> float:
    """Smallest x >= start with pred(x), assuming pred holds from some point on.

    Doubles from start until pred holds, then bisects keeping pred(hi) true.
    """
    if pred(start):
        return start
    lo, hi = start, 2.0 * start if start > 0 else 1.0
    doublings = 0
    while not pred(hi):
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > 2000 or not math.isfinite(hi):
            raise NumericError(f"no satisfying value found above {start:g}")
    logger.debug("bisection bracket [%r, %r]", lo, hi)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _grid_max(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float) -> float:
    """Maximum of fn on [lo, hi]: log-grid argmax refined by a bounded search."""
    grid = log_grid(lo, hi, SUP_SAMPLES)
    with np.errstate(all="ignore"):
        values = np.asarray(fn(grid), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ApplicabilityError("supremum is not finite on the sampled range")
    idx = int(np.argmax(values))
    best = float(values[idx])
    a = grid[max(idx - 1, 0)]
    b = grid[min(idx + 1, grid.size - 1)]
    if b > a:
        res = optimize.minimize_scalar(
            lambda x: -float(fn(np.asarray(x))),
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-12 * b},
        )
        if res.success and math.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


def classical_bound(p: LemmaParams) -> DecayBound:
    """Classical Stampacchia bound for phi(h) <= c/(h-k)^alpha phi(k)^beta."""
    _require_variant(p, Variant.CLASSICAL, "classical_bound")
    c, a, b, k0, phi0 = p.c, p.alpha, p.beta, p.k0, p.phi0
    if b > 1:
        # the proof chain sits exactly on this threshold, so it is rounded up
        with mpmath.workdps(50):
            mb = mpmath.mpf(b)
            exact = mpmath.mpf(k0) + (
                c * mpmath.mpf(phi0) ** (mb - 1) * mpmath.mpf(2) ** (a * mb / (mb - 1))
            ) ** (1 / mpmath.mpf(a))
            level = float(exact)
            if mpmath.mpf(level) < exact:
                level = math.nextafter(level, math.inf)
        if not math.isfinite(level):
            raise NumericError(f"the vanishing level overflows a double for {p}")
        return Vanishes(
            level, k0, ("classical-i: d^alpha = c phi0^(beta-1) 2^(alpha beta/(beta-1))",)
        )
    if b == 1:
        tau = (c * math.e) ** (1.0 / a)
        return StretchedExp(phi0, k0, tau, 1.0, ("classical-ii: tau = (c e)^(1/alpha)",))
    if k0 <= 0:
        raise ParameterError("the 0 < beta < 1 branch needs k0 > 0")
    rate = a / (1 - b)
    constant = _exp2(a / (1 - b) ** 2) * (
        _pow(c, 1 / (1 - b)) + _pow(2 * k0, rate) * phi0
    )
    return PowerEnvelope(
        constant,
        rate,
        False,
        k0,
        ("classical-iii: 2^(alpha/(1-beta)^2) {c^(1/(1-beta)) + (2k0)^(alpha/(1-beta)) phi0}",),
    )


def gzm_bound(p: LemmaParams) -> DecayBound:
    """Bound for the power-weighted recursion c h^(theta alpha)/(h-k)^alpha."""
    _require_variant(p, Variant.POWER_WEIGHTED, "gzm_bound")
    c, a, b, t, k0, phi0 = p.c, p.alpha, p.beta, p.theta, p.k0, p.phi0
    if t >= 1:
        raise ApplicabilityError(f"power-weighted bounds need theta < 1, got {t}")
    s = (1 - t) * a
    if b > 1:
        candidate = (
            _pow(c, 1 / s)
            * _pow(phi0, (b - 1) / s)
            * _exp2((b + t + 1 / (b - 1)) / ((1 - t) * b))
        )
        L = max(2 * k0, candidate * (1 + LEVEL_MARGIN))
        return Vanishes(2 * L, k0, (f"power-i: L = {L!r}",))
    if b == 1:
        tau = max(
            k0,
            _pow(c * math.e * _exp2(t * a), 1 / s),
            _pow(c * math.e * _exp2((2 - t) * t * a / (1 - t)) * (1 - t) ** a, 1 / s),
        )
        return StretchedExp(phi0, k0, tau, 1 - t, ("power-ii: tau = max of three",))
    scale = _exp2(s / (1 - b) ** 2)
    head = _pow(2 * k0, s / (1 - b)) * phi0
    c2 = scale * (_pow(c * _exp2(t * a), 1 / (1 - b)) + head)
    c1 = max(_pow(4.0, s) * c * _exp2(t * a), _pow(c2, 1 - b))
    constant = scale * (_pow(c1 * _exp2(t * a), 1 / (1 - b)) + head)
    return PowerEnvelope(
        constant, a * (1 - t) / (1 - b), False, k0, (f"power-iii: c1 = {c1!r}, c2 = {c2!r}",)
    )


def first_gen_bound(
    p: LemmaParams, tau_hint: Optional[float] = None, strict: bool = True
) -> DecayBound:
    """Bound for the recursion c h^(theta alpha)/g^alpha(h-k)."""
    _require_variant(p, Variant.FIRST_GENERALIZED, "first_gen_bound")
    gf = p.gf
    notes: List[str] = []
    note = require_conforming(gf, strict, "first_gen_bound", slope_needed=p.beta <= 1)
    if note:
        notes.append(note)
    c, a, b, t, k0, phi0, mu = p.c, p.alpha, p.beta, p.theta, p.k0, p.phi0, gf.mu

    if not _tail_decreasing(lambda L: np.power(L, t) / gf.g(L), SUP_SPAN * k0):
        raise ApplicabilityError(
            f"L^theta/g(L) does not decrease to 0 for theta = {t} and g = {gf.name}"
        )

    if b > 1:
        if phi0 == 0:
            L = 2 * k0
        else:
            target = (
                _pow(c, 1 / a)
                * _pow(phi0, (b - 1) / a)
                * _exp2((mu * b + t + mu / (b - 1)) / b)
            )
            L = _smallest_satisfying(
                lambda x: float(gf.g(x)) / x ** t >= target, 2 * k0
            ) * (1 + LEVEL_MARGIN)
        notes.append(f"first-i: L = {L!r} (smallest with g(L)/L^theta above target)")
        return Vanishes(2 * L, k0, tuple(notes))

    if b == 1:
        if t >= 1:
            raise ApplicabilityError(f"the beta = 1 branch needs theta < 1, got {t}")
        gp0 = gf.g_prime_at_zero
        if not gp0 > 0:
            raise ApplicabilityError(f"the beta = 1 branch needs g'(0+) > 0 for {gf.name}")
        floor = _pow(
            (c * math.e) ** (1 / a) * _exp2((2 - t) * t / (1 - t)) * (1 - t) / gp0,
            1 / (1 - t),
        )
        if tau_hint is not None:
            if not (math.isfinite(tau_hint) and tau_hint > 0):
                raise ParameterError(f"tau_hint must be finite and > 0, got {tau_hint}")
            tau = max(tau_hint, k0, floor)
            notes.append(f"first-ii: tau from hint {tau_hint!r}, not certified")
            return StretchedExp(phi0, k0, tau, 1 - t, tuple(notes))
        base = max(k0, floor)
        tau = _smallest_satisfying(
            lambda x: c * (k0 + x) ** (t * a) / float(gf.g(x)) ** a <= 1 / math.e, base
        )
        bound = StretchedExp(phi0, k0, tau, 1 - t)
        grid = build_grid(p, k0 + 2 * tau, 32, bound)
        prof = extremal_envelope(p, grid)
        reached = prof.value_at(k0 + tau)
        if reached > phi0 / math.e * (1 + 1e-12):
            raise NumericError(f"envelope at k0 + tau is {reached!r} > phi0/e")
        notes.append(f"first-ii: tau = {tau!r}, phi(k0 + tau) <= phi0/e certified on envelope")
        return StretchedExp(phi0, k0, tau, 1 - t, tuple(notes))

    if t >= 1:
        raise ApplicabilityError(f"the 0 < beta < 1 branch needs theta < 1, got {t}")
    gp0 = gf.g_prime_at_zero
    if t > 0 and not gp0 > 0:
        raise ApplicabilityError(f"g'(0+) = 0 for {gf.name} makes the constant infinite")
    s = (1 - t) * a
    lead = c * _exp2(t * a) / _pow(gp0, t * a)
    constant = _exp2(mu * s * (2 - b) / (1 - b) ** 2) * (
        _pow(lead, 1 / (1 - b)) + _pow(float(gf.g(k0)), s / (1 - b)) * phi0
    )
    notes.append("first-iii: constant in g")
    return PowerEnvelope(constant, s / (1 - b), True, k0, tuple(notes))


def _second_gen_m(gf: GrowthFunction, theta: float, theta_tilde: float) -> float:
    """sup over s >= 1 of g^theta(s^q)/s^(q-1) with q = theta_tilde/(theta_tilde-theta)."""
    if theta == 0:
        return 1.0
    q = theta_tilde / (theta_tilde - theta)

    def fn(s):
        s = np.asarray(s, dtype=float)
        return np.exp(theta * np.log(gf.g(np.power(s, q))) - (q - 1) * np.log(s))

    if not _tail_decreasing(fn, SUP_SPAN):
        raise ApplicabilityError("g^theta(s^q)/s^(q-1) is not decreasing in the tail")
    return _grid_max(fn, 1.0, SUP_SPAN)


def second_gen_bound(
    p: LemmaParams,
    theta_tilde: Optional[float] = None,
    eps0: Optional[float] = None,
    strict: bool = True,
) -> DecayBound:
    """Bound for the recursion c g^(theta alpha)(h)/(h-k)^alpha."""
    _require_variant(p, Variant.SECOND_GENERALIZED, "second_gen_bound")
    gf = p.gf
    notes: List[str] = []
    note = require_conforming(gf, strict, "second_gen_bound", slope_needed=False)
    if note:
        notes.append(note)
    c, a, b, t, k0, phi0, mu = p.c, p.alpha, p.beta, p.theta, p.k0, p.phi0, gf.mu

    if b > 1:
        if t >= 1:
            raise ApplicabilityError(f"the beta > 1 branch needs theta < 1, got {t}")
        if not _tail_decreasing(lambda L: np.power(gf.g(L), t) / L, SUP_SPAN * k0):
            raise ApplicabilityError(f"g^theta(L)/L does not decrease to 0 for {gf.name}")
        if phi0 == 0:
            L = 2 * k0
        else:
            target = (
                _pow(c, -1 / a)
                * _exp2(-(mu * t + b + 1 / (b - 1)) / b)
                * _pow(phi0, (1 - b) / a)
            )
            L = _smallest_satisfying(
                lambda x: float(gf.g(x)) ** t / x <= target, 2 * k0
            ) * (1 + LEVEL_MARGIN)
        notes.append(f"second-i: L = {L!r}")
        return Vanishes(2 * L, k0, tuple(notes))

    if b == 1:
        if mu * t >= 1:
            raise ApplicabilityError(f"the beta = 1 branch needs mu theta < 1, got {mu * t}")
        if theta_tilde is None:
            # mu theta_tilde <= 1 keeps g^(theta alpha) inside the chain's gap growth
            theta_tilde = min((t + 1 / mu) / 2, math.nextafter(1.0, 0.0))
        if not theta_tilde > t:
            raise ParameterError(f"theta_tilde must exceed theta = {t}, got {theta_tilde}")
        if not _tail_decreasing(
            lambda L: np.power(gf.g(L), theta_tilde) / L, SUP_SPAN * k0
        ):
            raise ApplicabilityError(
                f"g^theta_tilde(L)/L does not decrease to 0 for theta_tilde = {theta_tilde}"
            )
        q = theta_tilde / (theta_tilde - t)
        m = _second_gen_m(gf, t, theta_tilde)
        tau_b = _pow(
            math.e * c * _pow(_exp2(q + 1), mu * t * a) * _pow(m, a) / _pow(q, a),
            1 / ((1 - mu * t) * a),
        ) * (1 + 1e-12)
        base = max(k0, 0.5, tau_b)
        tau = _smallest_satisfying(
            lambda x: c * float(gf.g(k0 + x)) ** (t * a) / x ** a <= 1 / math.e, base
        )
        notes.append(f"second-ii: theta_tilde = {theta_tilde!r}, M = {m!r}, tau = {tau!r}")
        return StretchedExp(phi0, k0, tau, 1 - t / theta_tilde, tuple(notes))

    if t >= 1:
        raise ApplicabilityError(f"the 0 < beta < 1 branch needs theta < 1, got {t}")
    if eps0 is None:
        eps0 = (1 - t) / 2
    if not 0 < eps0 < 1 - t:
        raise ParameterError(f"eps0 must lie in (0, {1 - t}), got {eps0}")
    gamma = 1 - t - eps0

    def ratio(k):
        k = np.asarray(k, dtype=float)
        return gf.g_prime(k) / np.power(gf.g(k), gamma)

    if not _tail_decreasing(ratio, SUP_SPAN * k0):
        raise ApplicabilityError(
            f"g'/g^(1-theta-eps0) does not decrease to 0 for eps0 = {eps0}"
        )
    peak = _grid_max(ratio, k0, SUP_SPAN * k0)
    big_t = c * _exp2(mu * t * a) * _pow(peak, a)
    rate = eps0 * a / (1 - b)
    constant = _exp2(mu * eps0 * a * (2 - b) / (1 - b) ** 2) * (
        _pow(big_t, 1 / (1 - b)) + phi0 * _pow(float(gf.g(k0)), rate)
    )
    notes.append(f"second-iii: eps0 = {eps0!r}, T = {big_t!r}")
    return PowerEnvelope(constant, rate, True, k0, tuple(notes))


def compute_bound(
    p: LemmaParams,
    tau_hint: Optional[float] = None,
    theta_tilde: Optional[float] = None,
    eps0: Optional[float] = None,
    strict: bool = True,
) -> DecayBound:
    if p.variant is Variant.CLASSICAL:
        return classical_bound(p)
    if p.variant is Variant.POWER_WEIGHTED:
        return gzm_bound(p)
    if p.variant is Variant.FIRST_GENERALIZED:
        return first_gen_bound(p, tau_hint=tau_hint, strict=strict)
    return second_gen_bound(p, theta_tilde=theta_tilde, eps0=eps0, strict=strict)


def eval_bound(b: DecayBound, gf: GrowthFunction, k: float) -> float:
    return b.eval(gf, float(k))


def _check_giusti(C: float, B: float, beta: float) -> None:
    if not (math.isfinite(C) and C > 0):
        raise ParameterError(f"C must be finite and > 0, got {C}")
    if not (math.isfinite(B) and B > 1):
        raise ParameterError(f"B must be finite and > 1, got {B}")
    if not (math.isfinite(beta) and beta > 1):
        raise ParameterError(f"beta must be finite and > 1, got {beta}")


def _working_dps(beta: float, n: int) -> int:
    # relative error grows like beta^i along the orbit
    return 30 + int(math.ceil(n * math.log10(max(beta, 2.0))))


def _mp_threshold(C, B, beta):
    C, B, beta = mpmath.mpf(C), mpmath.mpf(B), mpmath.mpf(beta)
    return C ** (-1 / (beta - 1)) * B ** (-1 / (beta - 1) ** 2)


def giusti_threshold(C: float, B: float, beta: float) -> float:
    """C^(-1/(beta-1)) B^(-1/(beta-1)^2), rounded down to the nearest double."""
    _check_giusti(C, B, beta)
    with mpmath.workdps(50):
        exact = _mp_threshold(C, B, beta)
        value = float(exact)
        if mpmath.mpf(value) > exact:
            value = math.nextafter(value, 0.0)
    return value


def _mp_orbit(C, B, beta, x0, n):
    C, B, beta = mpmath.mpf(C), mpmath.mpf(B), mpmath.mpf(beta)
    xs = [mpmath.mpf(x0)]
    for i in range(n - 1):
        xs.append(C * B ** i * xs[-1] ** beta)
    return xs


def giusti_iterate(C: float, B: float, beta: float, x0: float, n: int) -> List[float]:
    """x_0, ..., x_(n-1) with x_(i+1) = C B^i x_i^beta, evaluated in extended precision."""
    _check_giusti(C, B, beta)
    if not (math.isfinite(x0) and x0 >= 0):
        raise ParameterError(f"x0 must be finite and >= 0, got {x0}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    with mpmath.workdps(_working_dps(beta, n)):
        return [float(x) for x in _mp_orbit(C, B, beta, x0, n)]


@dataclass
class GiustiReport:
    values: List[float]
    threshold: float
    meets_threshold: bool
    decay_held: bool
    worst_ratio: float
    notes: Tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "values": self.values,
            "threshold": self.threshold,
            "meets_threshold": self.meets_threshold,
            "decay_held": self.decay_held,
            "worst_ratio": self.worst_ratio,
        }


def giusti_certificate(
    C: float, B: float, beta: float, x0: float, n: int, rtol: float = 1e-9
) -> GiustiReport:
    """Check x_i <= B^(-i/(beta-1)) x0 along the orbit, comparing in extended precision."""
    values = giusti_iterate(C, B, beta, x0, n)
    with mpmath.workdps(_working_dps(beta, n)):
        xs = _mp_orbit(C, B, beta, x0, n)
        thr = _mp_threshold(C, B, beta)
        mB, mbeta = mpmath.mpf(B), mpmath.mpf(beta)
        worst = mpmath.mpf(0)
        for i, x in enumerate(xs):
            allowed = mB ** (-mpmath.mpf(i) / (mbeta - 1)) * xs[0]
            if allowed > 0:
                worst = max(worst, x / allowed)
            elif x > 0:
                worst = mpmath.inf
        meets = xs[0] <= thr * (1 + mpmath.mpf(rtol))
        held = worst <= 1 + mpmath.mpf(rtol)
        return GiustiReport(values, float(thr), bool(meets), bool(held), float(worst))
