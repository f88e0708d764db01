"""Symbolic coefficient-field presets with exact derivatives.

The leading-term formulas need values, log-gradients and log-Laplacians of
the positive coefficient functions h_i at the blowup points, and the cell
quadrature needs values at arbitrary points. Restricting h to named presets
keeps the derivative data exact instead of numerically differentiated.
Frequencies are integer vectors so the fields are periodic on the unit
torus. ``value`` broadcasts over leading axes of x; the derivative methods
take a single point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

_TWO_PI = 2.0 * math.pi


class CoefficientField:
    """Interface: positive field with exact log-derivatives."""

    def value(self, x):
        raise NotImplementedError

    def grad_log(self, x) -> np.ndarray:
        raise NotImplementedError

    def lap_log(self, x) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantField(CoefficientField):
    """h(x) = c with c > 0."""

    constant: float = 1.0

    def __post_init__(self):
        if not (self.constant > 0.0 and np.isfinite(self.constant)):
            raise InputError(f"constant field must be positive, got {self.constant}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.constant) if x.ndim > 1 else self.constant

    def grad_log(self, x) -> np.ndarray:
        return np.zeros(2)

    def lap_log(self, x) -> float:
        return 0.0

    def describe(self) -> dict:
        return {"type": "constant", "value": self.constant}


@dataclass(frozen=True)
class SinusoidalField(CoefficientField):
    """h(x) = base + amplitude * sin(2 pi k . x + phase), integer k."""

    amplitude: float
    frequency: tuple[int, int]
    phase: float = 0.0
    base: float = 1.0

    def __post_init__(self):
        k = self.frequency
        if len(k) != 2 or any(int(c) != c for c in k):
            raise InputError(f"frequency must be an integer 2-vector, got {k}")
        object.__setattr__(self, "frequency", (int(k[0]), int(k[1])))
        if self.base - abs(self.amplitude) <= 0.0:
            raise InputError(
                "sinusoidal field must stay positive: need base > |amplitude|"
            )

    def _angle(self, x):
        x = np.asarray(x, dtype=float)
        return (
            _TWO_PI
            * (self.frequency[0] * x[..., 0] + self.frequency[1] * x[..., 1])
            + self.phase
        )

    def value(self, x):
        return self.base + self.amplitude * np.sin(self._angle(x))

    def _grad_h(self, x) -> np.ndarray:
        return (
            _TWO_PI
            * self.amplitude
            * math.cos(float(self._angle(x)))
            * np.array(self.frequency, dtype=float)
        )

    def grad_log(self, x) -> np.ndarray:
        return self._grad_h(x) / float(self.value(x))

    def lap_log(self, x) -> float:
        k2 = float(self.frequency[0] ** 2 + self.frequency[1] ** 2)
        h = float(self.value(x))
        lap_h = -(_TWO_PI**2) * k2 * self.amplitude * math.sin(float(self._angle(x)))
        grad_h = self._grad_h(x)
        return lap_h / h - float(grad_h @ grad_h) / h**2

    def describe(self) -> dict:
        return {
            "type": "sinusoidal",
            "amplitude": self.amplitude,
            "frequency": list(self.frequency),
            "phase": self.phase,
            "base": self.base,
        }


def field_from_config(data: dict) -> CoefficientField:
    """Build a field from its CLI description (type + parameters)."""
    if not isinstance(data, dict) or "type" not in data:
        raise InputError("field description must be an object with a 'type' key")
    kind = data["type"]
    if kind == "constant":
        return ConstantField(constant=float(data.get("value", 1.0)))
    if kind == "sinusoidal":
        return SinusoidalField(
            amplitude=float(data["amplitude"]),
            frequency=tuple(data["frequency"]),
            phase=float(data.get("phase", 0.0)),
            base=float(data.get("base", 1.0)),
        )
    raise InputError(f"unknown field type {kind!r}")
