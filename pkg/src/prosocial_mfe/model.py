"""Model parameters and the menu of feedback schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Quadratic cost curvature ``alpha`` and reputation weight ``beta``."""

    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be positive and finite, got {self.alpha}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ParameterError(f"beta must be nonnegative and finite, got {self.beta}")


@dataclass(frozen=True)
class TypeA:
    """Full revelation: the society observes every action."""

    name = "type-a"


@dataclass(frozen=True)
class TypeB:
    """One threshold: the society observes whether ``a >= theta``."""

    theta: float
    name = "type-b"

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ParameterError(f"theta must be positive and finite, got {self.theta}")


@dataclass(frozen=True)
class TypeBm:
    """Several thresholds; the society observes the bin index of each action.

    ``thetas`` holds the finite thresholds only; the last bin is open above.
    """

    thetas: tuple[float, ...]
    name = "type-bm"

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        object.__setattr__(self, "thetas", thetas)
        if not thetas:
            raise ParameterError("type-bm needs at least one threshold")
        if thetas[0] <= 0 or any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise ParameterError(f"thresholds must be positive and strictly increasing, got {thetas}")
        if not all(math.isfinite(t) for t in thetas):
            raise ParameterError("thresholds must be finite")


FeedbackScheme = Union[TypeA, TypeB, TypeBm]
