"""Twice-differentiable bump functions used to localize laws to the window.

The shoulders are quintic smoothstep ramps s(u) = 6u^5 - 15u^4 + 10u^3, which
give closed-form derivative norms:

    sup|phi|   = 1
    sup|phi'|  = 1.875 / w            (at the shoulder midpoint)
    sup|phi''| = (10/sqrt(3)) / w^2   (Lipschitz constant of phi')

for shoulder width w.  These constants feed the bound bookkeeping, so they
are stored on the object rather than re-estimated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import LocalWindow

_SUPPORT_MARGIN = 1e-6
_SMOOTHSTEP_D2_MAX = 10.0 / math.sqrt(3.0)  # sup |s''| on [0,1]


def _smoothstep(u):
    # clip: the polynomial can exceed [0, 1] by one ulp near the joins
    return np.clip(u * u * u * (10.0 + u * (-15.0 + 6.0 * u)), 0.0, 1.0)


def _smoothstep_d1(u):
    return 30.0 * u * u * (1.0 - u) ** 2


def _smoothstep_d2(u):
    return 60.0 * u * (2.0 * u - 1.0) * (u - 1.0)


@dataclass(frozen=True)
class CutoffFunction:
    """A C^2 bump: 0 outside (a, b), 1 on [plateau_lo, plateau_hi], smoothstep
    shoulders of width `shoulder_width` in between.

    The plateau bounds are stored explicitly (not derived from a and the
    width) so that membership tests at the nominal plateau edges are exact
    under floating point.
    """

    a: float
    b: float
    shoulder_width: float
    plateau_lo: float
    plateau_hi: float

    def __post_init__(self):
        if not (self.a < self.plateau_lo <= self.plateau_hi < self.b):
            raise ConfigError("need a < plateau_lo <= plateau_hi < b")
        if self.shoulder_width <= 0.0:
            raise ConfigError("shoulder width must be positive")

    # analytically known C^2 data
    @property
    def c0(self) -> float:
        return 1.0

    @property
    def c1(self) -> float:
        return 1.875 / self.shoulder_width

    @property
    def lip1(self) -> float:
        return _SMOOTHSTEP_D2_MAX / self.shoulder_width**2

    @property
    def c2_norm(self) -> float:
        """sup|phi| + sup|phi'| + Lipschitz constant of phi'."""
        return self.c0 + self.c1 + self.lip1

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    @property
    def plateau(self) -> tuple[float, float]:
        return (self.plateau_lo, self.plateau_hi)

    @property
    def sup_norm(self) -> float:
        return 1.0

    def _pieces(self, x):
        arr = np.asarray(x, dtype=float)
        left = (arr > self.a) & (arr < self.plateau_lo)
        right = (arr > self.plateau_hi) & (arr < self.b)
        mid = (arr >= self.plateau_lo) & (arr <= self.plateau_hi)
        return arr, left, mid, right

    def __call__(self, x):
        arr, left, mid, right = self._pieces(x)
        out = np.zeros_like(arr)
        out[mid] = 1.0
        out[left] = _smoothstep((arr[left] - self.a) / self.shoulder_width)
        out[right] = _smoothstep((self.b - arr[right]) / self.shoulder_width)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        arr, left, mid, right = self._pieces(x)
        out = np.zeros_like(arr)
        w = self.shoulder_width
        out[left] = _smoothstep_d1((arr[left] - self.a) / w) / w
        out[right] = -_smoothstep_d1((self.b - arr[right]) / w) / w
        return float(out) if out.ndim == 0 else out

    def second_derivative(self, x):
        arr, left, mid, right = self._pieces(x)
        out = np.zeros_like(arr)
        w = self.shoulder_width
        out[left] = _smoothstep_d2((arr[left] - self.a) / w) / w**2
        out[right] = _smoothstep_d2((self.b - arr[right]) / w) / w**2
        return float(out) if out.ndim == 0 else out


def make_bump(w: LocalWindow, shoulder_fraction: float) -> CutoffFunction:
    """Bump supported strictly inside the ball of radius delta - delta0 around xi.

    The support is shrunk by a relative 1e-6 margin so that floating-point
    evaluation at the nominal endpoints is exactly zero, and the shoulders
    take the requested fraction of the support length.
    """
    if not (0.0 < shoulder_fraction < 0.5):
        raise ConfigError("shoulder_fraction must lie in (0, 1/2)")
    half = (w.delta - w.delta0) * (1.0 - _SUPPORT_MARGIN)
    a, b = w.xi - half, w.xi + half
    width = shoulder_fraction * (b - a)
    return CutoffFunction(a=a, b=b, shoulder_width=width,
                          plateau_lo=a + width, plateau_hi=b - width)


def make_plateau_sequence(k: int) -> CutoffFunction:
    """The k-th member of the global plateau family: 1 on [-k, k], support
    inside (-(k+1), k+1), C^2 norm independent of k (fixed shoulder width)."""
    if k < 1:
        raise ConfigError("k must be a positive integer")
    width = 1.0 - _SUPPORT_MARGIN
    return CutoffFunction(a=-float(k) - width, b=float(k) + width,
                          shoulder_width=width,
                          plateau_lo=-float(k), plateau_hi=float(k))


@dataclass(frozen=True)
class ComposedCutoff:
    """phi composed with the inverse coordinate change, supported on its image."""

    phi: CutoffFunction
    transform: object  # LampertiMap; kept loose to avoid an import cycle

    def __call__(self, y):
        return self.phi(self.transform.inverse_many(y))

    @property
    def support(self) -> tuple[float, float]:
        ha = self.transform.forward(self.phi.a)
        hb = self.transform.forward(self.phi.b)
        return (min(ha, hb), max(ha, hb))

    @property
    def sup_norm(self) -> float:
        return self.phi.sup_norm


def compose_with_inverse(phi: CutoffFunction, transform) -> ComposedCutoff:
    """phi o H^{-1}; requires supp(phi) inside the transform's invertible box."""
    lo, hi = transform.box
    if not (lo <= phi.a and phi.b <= hi):
        raise ConfigError("cutoff support exceeds the invertible box of the transform")
    return ComposedCutoff(phi=phi, transform=transform)
