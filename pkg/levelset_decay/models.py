"""Recursion hypotheses and the decay bounds concluded from them."""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Tuple, Union

import numpy as np

from .errors import ParameterError, RangeError
from .growth import IDENTITY, GrowthFunction, growth_from_config


class Variant(str, Enum):
    CLASSICAL = "classical"
    POWER_WEIGHTED = "power"
    FIRST_GENERALIZED = "first"
    SECOND_GENERALIZED = "second"

    @classmethod
    def parse(cls, value: Union[str, "Variant"]) -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "classical": cls.CLASSICAL,
            "power": cls.POWER_WEIGHTED,
            "powerweighted": cls.POWER_WEIGHTED,
            "gzm": cls.POWER_WEIGHTED,
            "first": cls.FIRST_GENERALIZED,
            "firstgeneralized": cls.FIRST_GENERALIZED,
            "second": cls.SECOND_GENERALIZED,
            "secondgeneralized": cls.SECOND_GENERALIZED,
        }
        if key not in aliases:
            raise ParameterError(f"unknown variant '{value}'")
        return aliases[key]


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class LemmaParams:
    """One recursion hypothesis phi(h) <= W(h, k) phi(k)^beta for h > k >= k0.

    The weight W depends on the variant:
    classical c/(h-k)^a, power c h^(ta)/(h-k)^a, first c h^(ta)/g(h-k)^a,
    second c g(h)^(ta)/(h-k)^a.
    """

    variant: Variant
    c: float
    alpha: float
    beta: float
    k0: float
    phi0: float
    theta: float = 0.0
    gf: GrowthFunction = IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        for name in ("c", "alpha", "beta"):
            _positive(name, getattr(self, name))
        if not (math.isfinite(self.theta) and self.theta >= 0):
            raise ParameterError(f"theta must be finite and >= 0, got {self.theta}")
        if not (math.isfinite(self.phi0) and self.phi0 >= 0):
            raise ParameterError(f"phi0 must be finite and >= 0, got {self.phi0}")
        if not math.isfinite(self.k0):
            raise ParameterError(f"k0 must be finite, got {self.k0}")
        if self.variant is not Variant.CLASSICAL and self.k0 <= 0:
            raise ParameterError(f"k0 must be > 0 for the {self.variant.value} variant")
        if self.variant is Variant.CLASSICAL and self.theta != 0:
            raise ParameterError("theta must be 0 for the classical variant")

    def weight(self, h, k):
        h = np.asarray(h, dtype=float)
        k = np.asarray(k, dtype=float)
        gap = h - k
        ta = self.theta * self.alpha
        with np.errstate(divide="ignore", over="ignore"):
            if self.variant is Variant.CLASSICAL:
                return self.c / np.power(gap, self.alpha)
            if self.variant is Variant.POWER_WEIGHTED:
                return self.c * np.power(h, ta) / np.power(gap, self.alpha)
            if self.variant is Variant.FIRST_GENERALIZED:
                return self.c * np.power(h, ta) / np.power(self.gf.g(gap), self.alpha)
            return self.c * np.power(self.gf.g(h), ta) / np.power(gap, self.alpha)

    def replace(self, **changes) -> "LemmaParams":
        values = {
            "variant": self.variant,
            "c": self.c,
            "alpha": self.alpha,
            "beta": self.beta,
            "k0": self.k0,
            "phi0": self.phi0,
            "theta": self.theta,
            "gf": self.gf,
        }
        values.update(changes)
        return LemmaParams(**values)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "c": self.c,
            "alpha": self.alpha,
            "beta": self.beta,
            "theta": self.theta,
            "k0": self.k0,
            "phi0": self.phi0,
            "growth": self.gf.to_dict(),
        }

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "LemmaParams":
        return cls(
            variant=Variant.parse(data["variant"]),
            c=float(data["c"]),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            k0=float(data["k0"]),
            phi0=float(data["phi0"]),
            theta=float(data.get("theta", 0.0)),
            gf=growth_from_config(data.get("growth")),
        )


@dataclass(frozen=True)
class Vanishes:
    """phi(k) = 0 for k >= level; no information below the level."""

    level: float
    k0: float
    notes: Tuple[str, ...] = field(default=())

    tag = "Vanishes"

    def eval(self, gf: GrowthFunction, k: float) -> float:
        return 0.0 if k >= self.level else math.inf

    def to_dict(self) -> dict:
        return {"tag": self.tag, "level": self.level, "k0": self.k0, "notes": list(self.notes)}


@dataclass(frozen=True)
class StretchedExp:
    """phi(k) <= phi0 exp(1 - ((k - k0)/tau)^power) for k >= k0."""

    phi0: float
    k0: float
    tau: float
    power: float
    notes: Tuple[str, ...] = field(default=())

    tag = "StretchedExp"

    def eval(self, gf: GrowthFunction, k: float) -> float:
        if k < self.k0:
            raise RangeError(f"level {k} is below k0 = {self.k0}")
        return self.phi0 * math.exp(1.0 - ((k - self.k0) / self.tau) ** self.power)

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "phi0": self.phi0,
            "k0": self.k0,
            "tau": self.tau,
            "power": self.power,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class PowerEnvelope:
    """phi(k) <= constant (1/g(k))^rate, or constant (1/k)^rate, for k >= k0."""

    constant: float
    rate: float
    in_g: bool
    k0: float = 0.0
    notes: Tuple[str, ...] = field(default=())

    tag = "PowerEnvelope"

    def eval(self, gf: GrowthFunction, k: float) -> float:
        if k < self.k0:
            raise RangeError(f"level {k} is below k0 = {self.k0}")
        base = float(gf.g(k)) if self.in_g else float(k)
        if base <= 0:
            return math.inf
        if self.constant == 0:
            return 0.0
        exponent = math.log(self.constant) - self.rate * math.log(base)
        return math.exp(exponent) if exponent < 709.0 else math.inf

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "constant": self.constant,
            "rate": self.rate,
            "in_g": self.in_g,
            "k0": self.k0,
            "notes": list(self.notes),
        }


DecayBound = Union[Vanishes, StretchedExp, PowerEnvelope]
