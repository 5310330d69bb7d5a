"""Piecewise coefficient models for scalar SDEs.

The drift and the diffusion are declared as piecewise closed-form functions
(constant, affine, polynomial, sinusoid, power of a distance).  On top of
those this module builds the localization window, the constant continuation
of the diffusion outside the window, its almost-everywhere derivative (zero
at kinks), and the drift functional

    g = mu / sigma_cont - d(sigma_cont)/2

that drives the remainder term of the Fourier bound.

Evaluation convention at a breakpoint: the piece to the *right* applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError

_DERIV_MATCH_TOL = 1e-9


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


# ---------------------------------------------------------------------------
# piece kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """A closed-form function defined on one interval of a piecewise model."""

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def sup_abs(self, a: float, b: float) -> float:
        """Exact sup of |f| over [a, b]."""
        raise NotImplementedError

    def sup_abs_derivative(self, a: float, b: float) -> float:
        """Upper bound for sup |f'| over [a, b]; may be inf."""
        raise NotImplementedError

    def kinks(self, a: float, b: float) -> tuple[float, ...]:
        """Interior points of (a, b) where the classical derivative fails."""
        return ()


@dataclass(frozen=True)
class Constant(Piece):
    value: float

    def __call__(self, x):
        arr, scalar = _as_array(x)
        out = np.full_like(arr, self.value)
        return _ret(out, scalar)

    def derivative(self, x):
        arr, scalar = _as_array(x)
        return _ret(np.zeros_like(arr), scalar)

    def sup_abs(self, a, b):
        return abs(self.value)

    def sup_abs_derivative(self, a, b):
        return 0.0


@dataclass(frozen=True)
class Affine(Piece):
    intercept: float
    slope: float

    def __call__(self, x):
        arr, scalar = _as_array(x)
        return _ret(self.intercept + self.slope * arr, scalar)

    def derivative(self, x):
        arr, scalar = _as_array(x)
        return _ret(np.full_like(arr, self.slope), scalar)

    def sup_abs(self, a, b):
        return max(abs(self.intercept + self.slope * a), abs(self.intercept + self.slope * b))

    def sup_abs_derivative(self, a, b):
        return abs(self.slope)


@dataclass(frozen=True)
class Polynomial(Piece):
    coeffs: tuple[float, ...]  # ascending degree

    def _poly(self):
        return np.polynomial.Polynomial(self.coeffs)

    def __call__(self, x):
        arr, scalar = _as_array(x)
        return _ret(self._poly()(arr), scalar)

    def derivative(self, x):
        arr, scalar = _as_array(x)
        return _ret(self._poly().deriv()(arr), scalar)

    @staticmethod
    def _sup_on(poly, a, b):
        pts = [a, b]
        der = poly.deriv()
        if der.degree() >= 1:
            roots = der.roots()
            pts.extend(float(r.real) for r in roots if abs(r.imag) < 1e-12 and a < r.real < b)
        elif der.degree() == 0 and der.coef[0] == 0.0:
            pass
        return max(abs(float(poly(p))) for p in pts)

    def sup_abs(self, a, b):
        return self._sup_on(self._poly(), a, b)

    def sup_abs_derivative(self, a, b):
        der = self._poly().deriv()
        if der.degree() == 0:
            return abs(float(der.coef[0]))
        return self._sup_on(der, a, b)


@dataclass(frozen=True)
class Sinusoid(Piece):
    """offset + amplitude * sin(frequency * x + phase)"""

    offset: float
    amplitude: float
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, x):
        arr, scalar = _as_array(x)
        return _ret(self.offset + self.amplitude * np.sin(self.frequency * arr + self.phase), scalar)

    def derivative(self, x):
        arr, scalar = _as_array(x)
        return _ret(self.amplitude * self.frequency * np.cos(self.frequency * arr + self.phase), scalar)

    def _critical(self, a, b):
        # sin' = 0 at frequency*x + phase = pi/2 + k*pi
        if self.frequency == 0.0:
            return []
        k_lo = math.floor((self.frequency * a + self.phase - math.pi / 2) / math.pi)
        k_hi = math.ceil((self.frequency * b + self.phase - math.pi / 2) / math.pi)
        lo, hi = (a, b) if a <= b else (b, a)
        pts = []
        for k in range(k_lo - 1, k_hi + 2):
            x = (math.pi / 2 + k * math.pi - self.phase) / self.frequency
            if lo < x < hi:
                pts.append(x)
        return pts

    def sup_abs(self, a, b):
        pts = [a, b] + self._critical(a, b)
        return max(abs(float(self(p))) for p in pts)

    def sup_abs_derivative(self, a, b):
        return abs(self.amplitude * self.frequency)


@dataclass(frozen=True)
class HolderPower(Piece):
    """scale * |x - center| ** exponent (exponent > 0)"""

    scale: float
    center: float
    exponent: float

    def __post_init__(self):
        if self.exponent <= 0:
            raise ConfigError("power piece requires a positive exponent")

    def __call__(self, x):
        arr, scalar = _as_array(x)
        return _ret(self.scale * np.abs(arr - self.center) ** self.exponent, scalar)

    def derivative(self, x):
        arr, scalar = _as_array(x)
        d = arr - self.center
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.scale * self.exponent * np.sign(d) * np.abs(d) ** (self.exponent - 1.0)
        out = np.where(d == 0.0, 0.0, out)
        return _ret(out, scalar)

    def sup_abs(self, a, b):
        m = max(abs(a - self.center), abs(b - self.center))
        return abs(self.scale) * m ** self.exponent

    def sup_abs_derivative(self, a, b):
        dmax = max(abs(a - self.center), abs(b - self.center))
        dmin = min(abs(a - self.center), abs(b - self.center))
        if a <= self.center <= b:
            dmin = 0.0
        c = abs(self.scale) * self.exponent
        if self.exponent >= 1.0:
            return c * dmax ** (self.exponent - 1.0)
        if dmin == 0.0:
            return float("inf")
        return c * dmin ** (self.exponent - 1.0)

    def kinks(self, a, b):
        if self.exponent < 1.0 + _DERIV_MATCH_TOL and a < self.center < b:
            return (self.center,)
        return ()


# ---------------------------------------------------------------------------
# piecewise functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseFunction:
    """A function on the whole line assembled from closed-form pieces.

    ``pieces[i]`` applies on ``[breakpoints[i-1], breakpoints[i])`` (with the
    obvious unbounded first and last intervals), so evaluation at a
    breakpoint uses the piece on the right.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[Piece, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        pieces = tuple(self.pieces)
        if len(pieces) != len(bp) + 1:
            raise ConfigError(
                f"need {len(bp) + 1} pieces for {len(bp)} breakpoints, got {len(pieces)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ConfigError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_bp_arr", np.asarray(bp, dtype=float))

    # -- evaluation ---------------------------------------------------------

    def _indices(self, arr):
        return np.searchsorted(self._bp_arr, arr, side="right")

    def _apply(self, arr, method):
        idx = self._indices(arr)
        out = np.empty_like(arr)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = getattr(piece, method)(arr[mask])
        return out

    def __call__(self, x):
        arr, scalar = _as_array(x)
        return _ret(self._apply(np.atleast_1d(arr), "__call__").reshape(arr.shape), scalar)

    def derivative(self, x):
        """Piece-by-piece classical derivative, right piece at breakpoints."""
        arr, scalar = _as_array(x)
        return _ret(self._apply(np.atleast_1d(arr), "derivative").reshape(arr.shape), scalar)

    def left_limit(self, x: float) -> float:
        """Limit from the left (left piece evaluated at x)."""
        i = int(np.searchsorted(self._bp_arr, x, side="left"))
        return float(self.pieces[i](x))

    def left_derivative(self, x: float) -> float:
        i = int(np.searchsorted(self._bp_arr, x, side="left"))
        return float(self.pieces[i].derivative(x))

    def right_derivative(self, x: float) -> float:
        i = int(np.searchsorted(self._bp_arr, x, side="right"))
        return float(self.pieces[i].derivative(x))

    @property
    def constant_value(self):
        """The global value if the function is a single constant, else None."""
        vals = {p.value for p in self.pieces if isinstance(p, Constant)}
        if len(vals) == 1 and all(isinstance(p, Constant) for p in self.pieces):
            return vals.pop()
        return None

    # -- piece bookkeeping ---------------------------------------------------

    def _intervals(self):
        edges = (-math.inf,) + self.breakpoints + (math.inf,)
        return [(edges[i], edges[i + 1], self.pieces[i]) for i in range(len(self.pieces))]

    def overlapping(self, a: float, b: float):
        """(lo, hi, piece) segments covering [a, b]."""
        segs = []
        for lo, hi, piece in self._intervals():
            lo2, hi2 = max(lo, a), min(hi, b)
            if lo2 < hi2:
                segs.append((lo2, hi2, piece))
        if not segs:  # degenerate interval: single point
            i = int(self._indices(np.asarray(a)))
            segs.append((a, b, self.pieces[i]))
        return segs

    def sup_abs_on(self, a: float, b: float) -> float:
        return max(p.sup_abs(lo, hi) for lo, hi, p in self.overlapping(a, b))

    def lipschitz_on(self, a: float, b: float, grid: int = 10_000) -> float:
        """Lipschitz constant on [a, b]: per-piece symbolic bounds where
        available, grid difference quotients inflated by 10% otherwise."""
        bounds = [p.sup_abs_derivative(lo, hi) for lo, hi, p in self.overlapping(a, b)]
        if any(v is None for v in bounds):
            xs = np.linspace(a, b, grid)
            vals = self(xs)
            quot = np.abs(np.diff(vals)) / np.diff(xs)
            return float(1.1 * np.max(quot))
        # a jump at an interior breakpoint makes the function non-Lipschitz
        for bp in self.breakpoints:
            if a < bp <= b and abs(self.left_limit(bp) - self(bp)) > 1e-12 * (1 + abs(self(bp))):
                return float("inf")
        return max(bounds)

    def breakpoints_in(self, a: float, b: float) -> tuple[float, ...]:
        return tuple(bp for bp in self.breakpoints if a < bp < b)

    def kinks_in(self, a: float, b: float) -> tuple[float, ...]:
        """Candidate non-differentiability points strictly inside (a, b)."""
        pts = set()
        for lo, hi, piece in self.overlapping(a, b):
            pts.update(piece.kinks(max(lo, a), min(hi, b)))
        for bp in self.breakpoints_in(a, b):
            if abs(self.left_derivative(bp) - self.right_derivative(bp)) > _DERIV_MATCH_TOL * (
                1.0 + abs(self.right_derivative(bp))
            ):
                pts.add(bp)
        return tuple(sorted(pts))


def evaluate(f: PiecewiseFunction, x):
    """Evaluate a piecewise function (right piece applies at breakpoints)."""
    return f(x)


# ---------------------------------------------------------------------------
# model, window, continuation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientModel:
    """Drift and diffusion of the scalar SDE dX = mu(X) dt + sigma(X) dW."""

    mu: PiecewiseFunction
    sigma: PiecewiseFunction


@dataclass(frozen=True)
class LocalWindow:
    """Localization data: center xi, radius delta, margin delta0, ellipticity floor."""

    xi: float
    delta: float
    delta0: float
    l_sigma: float

    def __post_init__(self):
        if not (0.0 < self.delta0 < self.delta):
            raise ValidationError("need 0 < delta0 < delta")
        if self.l_sigma <= 0.0:
            raise ValidationError("ellipticity floor must be positive")

    @property
    def lo(self) -> float:
        return self.xi - self.delta

    @property
    def hi(self) -> float:
        return self.xi + self.delta


def validate_window(model: CoefficientModel, w: LocalWindow, n_grid: int = 10_000) -> None:
    """Grid-check the window hypotheses: |sigma| >= l_sigma and mu bounded on it.

    Exact verification of arbitrary pieces is not decidable, so the checks
    combine a dense grid with per-piece metadata.
    """
    xs = np.linspace(w.lo, w.hi, n_grid)
    sig = model.sigma(xs)
    if not np.all(np.isfinite(sig)):
        raise ValidationError("sigma is not finite on the window")
    if float(np.min(np.abs(sig))) < w.l_sigma * (1 - 1e-12):
        raise ValidationError(
            f"inf |sigma| on the window is {np.min(np.abs(sig)):.6g} < l_sigma={w.l_sigma}"
        )
    mu = model.mu(xs)
    if not np.all(np.isfinite(mu)):
        raise ValidationError("mu is not finite (bounded) on the window")
    if not math.isfinite(model.sigma.lipschitz_on(w.lo, w.hi)):
        raise ValidationError("sigma is not Lipschitz on the window")


@dataclass(frozen=True)
class SigmaStar:
    """The diffusion frozen at its window-boundary values outside the window.

    Globally Lipschitz, bounded away from zero by the window's floor, and
    equal to sigma on [xi - delta, xi + delta].
    """

    base: PiecewiseFunction
    left_value: float
    right_value: float
    window: LocalWindow
    lipschitz: float

    def __call__(self, x):
        return self.base(x)

    def derivative(self, x):
        return self.base.derivative(x)

    def sup_abs(self) -> float:
        return max(self.base.sup_abs_on(self.window.lo, self.window.hi),
                   abs(self.left_value), abs(self.right_value))

    @property
    def floor(self) -> float:
        return self.window.l_sigma


def build_sigma_star(sigma: PiecewiseFunction, w: LocalWindow, n_grid: int = 10_000) -> SigmaStar:
    """Constant continuation of sigma outside the window [xi - delta, xi + delta]."""
    xs = np.linspace(w.lo, w.hi, n_grid)
    vals = sigma(xs)
    if not np.all(np.isfinite(vals)):
        raise ValidationError("sigma is not finite on the window")
    if float(np.min(np.abs(vals))) < w.l_sigma * (1 - 1e-12):
        raise ValidationError("sigma violates the ellipticity floor on the window")
    lip = sigma.lipschitz_on(w.lo, w.hi)
    if not math.isfinite(lip):
        raise ValidationError("sigma is not Lipschitz on the window")

    left_value = float(sigma(w.lo))
    right_value = float(sigma.left_limit(w.hi))

    inner_bp = sigma.breakpoints_in(w.lo, w.hi)
    bp = (w.lo,) + inner_bp + (w.hi,)
    idx = [int(np.searchsorted(np.asarray(sigma.breakpoints), b, side="right")) for b in bp[:-1]]
    window_pieces = tuple(sigma.pieces[i] for i in idx)
    base = PiecewiseFunction(
        breakpoints=bp,
        pieces=(Constant(left_value),) + window_pieces + (Constant(right_value),),
    )
    return SigmaStar(base=base, left_value=left_value, right_value=right_value,
                     window=w, lipschitz=lip)


@dataclass(frozen=True)
class WeakDerivative:
    """Derivative of the continued diffusion, set to zero where it fails to exist."""

    source: SigmaStar
    nondifferentiable_points: tuple[float, ...]

    def __call__(self, x):
        arr, scalar = _as_array(x)
        arr1 = np.atleast_1d(arr)
        out = self.source.base.derivative(arr1)
        for p in self.nondifferentiable_points:
            out = np.where(arr1 == p, 0.0, out)
        return _ret(out.reshape(arr.shape), scalar)


def weak_derivative(s: SigmaStar) -> WeakDerivative:
    """Detect kink points of the continuation and zero the derivative there."""
    base = s.base
    pts = set(base.kinks_in(-math.inf, math.inf))
    for bp in base.breakpoints:
        dl = base.left_derivative(bp)
        dr = base.right_derivative(bp)
        if abs(dl - dr) > _DERIV_MATCH_TOL * (1.0 + abs(dr)):
            pts.add(bp)
    return WeakDerivative(source=s, nondifferentiable_points=tuple(sorted(pts)))


@dataclass(frozen=True)
class DriftFunctional:
    """g = mu/sigma_cont - weak_derivative/2, evaluable on the window (and beyond)."""

    mu: PiecewiseFunction
    sigma_star: SigmaStar
    weak_deriv: WeakDerivative

    def __call__(self, x):
        arr, scalar = _as_array(x)
        out = self.mu(arr) / self.sigma_star(arr) - 0.5 * self.weak_deriv(arr)
        return _ret(out, scalar)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        pts = set(self.mu.breakpoints) | set(self.sigma_star.base.breakpoints)
        return tuple(sorted(pts))

    def is_constant_on(self, a: float, b: float, n_grid: int = 512) -> bool:
        xs = np.linspace(a, b, n_grid)
        vals = self(xs)
        return bool(np.all(vals == vals[0]))


def drift_functional(mu: PiecewiseFunction, s: SigmaStar, d: WeakDerivative) -> DriftFunctional:
    if d.source is not s:
        raise ValidationError("weak derivative belongs to a different continuation")
    return DriftFunctional(mu=mu, sigma_star=s, weak_deriv=d)


# ---------------------------------------------------------------------------
# config-file parsing
# ---------------------------------------------------------------------------

_PIECE_KINDS = {
    "constant": (Constant, ("value",)),
    "affine": (Affine, ("intercept", "slope")),
    "polynomial": (Polynomial, ("coeffs",)),
    "sinusoid": (Sinusoid, ("offset", "amplitude", "frequency", "phase")),
    "power": (HolderPower, ("scale", "center", "exponent")),
}


def piece_from_dict(spec: dict) -> Piece:
    kind = spec.get("kind")
    if kind not in _PIECE_KINDS:
        raise ConfigError(f"unknown piece kind {kind!r}; one of {sorted(_PIECE_KINDS)}")
    cls, fields = _PIECE_KINDS[kind]
    kwargs = {}
    for name in fields:
        if name in spec:
            v = spec[name]
            kwargs[name] = tuple(v) if name == "coeffs" else float(v)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {kind} piece: {exc}") from exc


def piecewise_from_dict(spec: dict) -> PiecewiseFunction:
    """Build a piecewise function from config data.

    Two forms are accepted: ``{"breakpoints": [...], "pieces": [...]}`` with
    len(pieces) == len(breakpoints) + 1, or a list of pieces carrying explicit
    ``"interval": [lo, hi]`` entries that must tile the real line (``null``
    stands for an infinite endpoint).  Gaps or overlaps are configuration
    errors.
    """
    if isinstance(spec, dict) and "breakpoints" in spec:
        return PiecewiseFunction(
            breakpoints=tuple(float(b) for b in spec["breakpoints"]),
            pieces=tuple(piece_from_dict(p) for p in spec["pieces"]),
        )
    if isinstance(spec, dict) and "pieces" in spec:
        entries = spec["pieces"]
    elif isinstance(spec, list):
        entries = spec
    else:
        raise ConfigError("piecewise spec must carry 'breakpoints'+'pieces' or interval pieces")

    def edge(v, sign):
        if v is None:
            return sign * math.inf
        return float(v)

    parsed = []
    for e in entries:
        if "interval" not in e:
            raise ConfigError("interval form requires an 'interval' on every piece")
        lo, hi = edge(e["interval"][0], -1), edge(e["interval"][1], +1)
        parsed.append((lo, hi, piece_from_dict(e)))
    parsed.sort(key=lambda t: t[0])
    if parsed[0][0] != -math.inf or parsed[-1][1] != math.inf:
        raise ConfigError("piece intervals must cover the whole line")
    for (_, hi1, _), (lo2, _, _) in zip(parsed, parsed[1:]):
        if hi1 != lo2:
            raise ConfigError(f"gap or overlap between pieces at {hi1} vs {lo2}")
    return PiecewiseFunction(
        breakpoints=tuple(lo for lo, _, _ in parsed[1:]),
        pieces=tuple(p for _, _, p in parsed),
    )
