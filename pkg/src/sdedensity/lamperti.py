"""Coordinate change that turns the SDE into one with unit diffusion.

H(x) is the antiderivative of 1/sigma_cont anchored at the left window edge.
Outside the window sigma_cont is constant, so H continues linearly in closed
form; inside, cumulative integrals are tabulated on a dense knot grid aligned
with the piece breakpoints, and the residual sub-cell integral is evaluated
with a fixed Gauss-Legendre rule (closed forms for constant and affine
pieces).  The map is strictly monotone and bi-Lipschitz because the diffusion
is bounded away from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericsError, RangeError, ValidationError
from .model import Affine, Constant, LocalWindow, PiecewiseFunction, SigmaStar, weak_derivative

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _cell_integral(piece, a, b):
    """Integral of 1/piece over [a, b]; exact for constant/affine."""
    if isinstance(piece, Constant):
        return (b - a) / piece.value
    if isinstance(piece, Affine):
        if piece.slope == 0.0:
            return (b - a) / piece.intercept
        va = piece.intercept + piece.slope * a
        vb = piece.intercept + piece.slope * b
        return math.log(vb / va) / piece.slope
    nodes = a + (b - a) * 0.5 * (_GL_NODES + 1.0)
    vals = piece(nodes)
    return float((b - a) * 0.5 * np.sum(_GL_WEIGHTS / vals))


def _cell_integral_many(piece, a, x):
    """Vectorized integral of 1/piece from a (array) to x (array), same cell."""
    if isinstance(piece, Constant):
        return (x - a) / piece.value
    if isinstance(piece, Affine):
        if piece.slope == 0.0:
            return (x - a) / piece.intercept
        va = piece.intercept + piece.slope * a
        vx = piece.intercept + piece.slope * x
        return np.log(vx / va) / piece.slope
    half = (x - a) * 0.5
    nodes = a[:, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
    return half * np.sum(_GL_WEIGHTS[None, :] / piece(nodes), axis=1)


@dataclass(eq=False)
class LampertiMap:
    """Strictly monotone antiderivative of 1/sigma_cont with a fast inverse."""

    sigma_star: SigmaStar
    anchor: float
    quad_tolerance: float
    box: tuple[float, float]
    knots_x: np.ndarray = field(repr=False)
    knots_h: np.ndarray = field(repr=False)
    cell_piece: np.ndarray = field(repr=False)  # piece index per knot cell
    h_lo: float = 0.0  # H at window left edge (= 0 by anchoring)
    h_hi: float = 0.0  # H at window right edge

    # -- forward -------------------------------------------------------------

    def forward_many(self, x) -> np.ndarray:
        """H(x) for an array of points anywhere on the line."""
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        out = np.empty_like(flat)
        w = self.sigma_star.window
        left = flat < w.lo
        right = flat > w.hi
        mid = ~(left | right)
        if np.any(left):
            out[left] = (flat[left] - w.lo) / self.sigma_star.left_value
        if np.any(right):
            out[right] = self.h_hi + (flat[right] - w.hi) / self.sigma_star.right_value
        if np.any(mid):
            xm = flat[mid]
            idx = np.searchsorted(self.knots_x, xm, side="right") - 1
            idx = np.clip(idx, 0, len(self.knots_x) - 2)
            res = np.empty_like(xm)
            pieces = self.sigma_star.base.pieces
            cp = self.cell_piece[idx]
            for pi in np.unique(cp):
                m = cp == pi
                res[m] = _cell_integral_many(pieces[pi], self.knots_x[idx[m]], xm[m])
            out[mid] = self.knots_h[idx] + res
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def forward(self, x: float) -> float:
        return float(self.forward_many(float(x)))

    def derivative(self, x):
        """H'(x) = 1/sigma_cont(x)."""
        return 1.0 / self.sigma_star(x)

    # -- inverse -------------------------------------------------------------

    @property
    def increasing(self) -> bool:
        return self.sigma_star.left_value > 0.0

    @property
    def h_range(self) -> tuple[float, float]:
        lo, hi = self.box
        a, b = self.forward(lo), self.forward(hi)
        return (min(a, b), max(a, b))

    def inverse_many(self, y) -> np.ndarray:
        """x with H(x) = y, for y inside the image of the configured box."""
        arr = np.asarray(y, dtype=float)
        flat = np.atleast_1d(arr).ravel().copy()
        r_lo, r_hi = self.h_range
        tol = self.quad_tolerance
        span = max(abs(r_lo), abs(r_hi), 1.0)
        if np.any(flat < r_lo - 1e-12 * span) or np.any(flat > r_hi + 1e-12 * span):
            bad = flat[(flat < r_lo - 1e-12 * span) | (flat > r_hi + 1e-12 * span)][0]
            raise RangeError(f"y={bad!r} outside the invertible range [{r_lo}, {r_hi}]")
        sgn = 1.0 if self.increasing else -1.0
        w = self.sigma_star.window
        out = np.empty_like(flat)

        # linear closed forms outside the window (exact inverses)
        hw_lo, hw_hi = sorted((self.h_lo, self.h_hi))
        left = flat < hw_lo
        right = flat > hw_hi
        mid = ~(left | right)
        if self.increasing:
            out[left] = w.lo + flat[left] * self.sigma_star.left_value
            out[right] = w.hi + (flat[right] - self.h_hi) * self.sigma_star.right_value
        else:
            out[left] = w.hi + (flat[left] - self.h_hi) * self.sigma_star.right_value
            out[right] = w.lo + flat[right] * self.sigma_star.left_value

        if np.any(mid):
            ym = flat[mid]
            kh = sgn * self.knots_h
            j = np.searchsorted(kh, sgn * ym, side="right") - 1
            j = np.clip(j, 0, len(self.knots_x) - 2)
            lo_b = self.knots_x[j].copy()
            hi_b = self.knots_x[j + 1].copy()
            x = 0.5 * (lo_b + hi_b)
            for _ in range(80):
                res = self.forward_many(x) - ym
                if np.all(np.abs(res) <= tol):
                    break
                pos = res * sgn > 0
                hi_b = np.where(pos, x, hi_b)
                lo_b = np.where(pos, lo_b, x)
                step = x - res * self.sigma_star(x)
                inside = (step > lo_b) & (step < hi_b)
                x = np.where(inside, step, 0.5 * (lo_b + hi_b))
            else:
                raise NumericsError("inverse iteration failed to reach tolerance")
            out[mid] = x
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def inverse(self, y: float) -> float:
        return float(self.inverse_many(float(y)))


def build_lamperti_map(
    s: SigmaStar,
    quad_tolerance: float = 1e-10,
    n_knots: int = 4096,
    box: tuple[float, float] | None = None,
) -> LampertiMap:
    """Tabulate H on the window and wire up the closed-form continuations."""
    w = s.window
    if box is None:
        box = (w.xi - 3.0 * w.delta, w.xi + 3.0 * w.delta)
    if not (box[0] <= w.lo and w.hi <= box[1]):
        raise ValidationError("invertible box must contain the window")

    base = s.base
    knots = np.unique(np.concatenate([
        np.linspace(w.lo, w.hi, n_knots),
        np.asarray([bp for bp in base.breakpoints if w.lo <= bp <= w.hi]),
        np.asarray(sorted(k for p in base.pieces for k in p.kinks(w.lo, w.hi))),
    ]))
    mids = 0.5 * (knots[:-1] + knots[1:])
    cell_piece = base._indices(mids).astype(np.int64)

    cell_vals = np.empty(len(knots) - 1)
    for i in range(len(knots) - 1):
        cell_vals[i] = _cell_integral(base.pieces[cell_piece[i]], knots[i], knots[i + 1])
    if not np.all(np.isfinite(cell_vals)):
        j = int(np.argwhere(~np.isfinite(cell_vals))[0])
        raise NumericsError(
            f"quadrature of 1/sigma_cont failed on cell [{knots[j]}, {knots[j+1]}]"
        )
    knots_h = np.concatenate([[0.0], np.cumsum(cell_vals)])

    m = LampertiMap(
        sigma_star=s,
        anchor=w.lo,
        quad_tolerance=quad_tolerance,
        box=(float(box[0]), float(box[1])),
        knots_x=knots,
        knots_h=knots_h,
        cell_piece=cell_piece,
        h_lo=0.0,
        h_hi=float(knots_h[-1]),
    )
    diffs = np.diff(knots_h)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValidationError("transform is not strictly monotone; check sigma's sign")
    return m


@dataclass(frozen=True)
class ImageWindow:
    """The window seen in transformed coordinates: H(B_delta(xi)) = B_{delta_h}(xi_h)."""

    xi_h: float
    delta_h: float

    @property
    def lo(self) -> float:
        return self.xi_h - self.delta_h

    @property
    def hi(self) -> float:
        return self.xi_h + self.delta_h


def image_window(m: LampertiMap, w: LocalWindow) -> ImageWindow:
    a = m.forward(w.lo)
    b = m.forward(w.hi)
    return ImageWindow(xi_h=0.5 * (a + b), delta_h=0.5 * abs(b - a))


def transform_coefficients(mu: PiecewiseFunction, s: SigmaStar, m: LampertiMap,
                           sigma: PiecewiseFunction | None = None):
    """Drift and diffusion of the transformed process Y = H(X).

    Returns (mu_h, sigma_h) as vectorized callables of the new coordinate.
    When the original diffusion is omitted it is taken equal to its
    continuation, which is exact on the window (where sigma_h is 1).
    """
    sig = sigma if sigma is not None else s.base
    dstar = weak_derivative(s)

    def mu_h(y):
        x = m.inverse_many(y)
        sx = s(x)
        return mu(x) / sx - (sig(x) ** 2) * dstar(x) / (2.0 * sx * sx)

    def sigma_h(y):
        x = m.inverse_many(y)
        return sig(x) / s(x)

    return mu_h, sigma_h
