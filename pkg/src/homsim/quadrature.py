"""Error-controlled integration of complex-valued integrands in 1 to 4 dimensions.

Two rules are provided:

* an adaptive Gauss-Kronrod 7/15 scheme for 1-D and (nested) 2-D integrals,
* fixed-order tensorized Gauss-Legendre for 2-D and 4-D integrals where
  full adaptivity is too expensive and the integrand is smooth and damped.

All integrands must accept numpy arrays (vectorized evaluation) and return
complex values that are finite everywhere inside the declared box.  Results
are deterministic: identical settings and integrand give bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "AccuracyError",
    "QuadratureSettings",
    "QuadratureResult",
    "Integrand1D",
    "Integrand2D",
    "Integrand4D",
    "integrate_1d",
    "integrate_2d",
    "integrate_4d",
    "gauss_legendre",
]

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].  Odd-indexed Kronrod
# nodes are the embedded 7-point Gauss nodes.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)


class AccuracyError(RuntimeError):
    """Requested tolerance not reached; ``best`` carries the best estimate."""

    def __init__(self, message: str, best: "QuadratureResult"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-7
    abs_tol: float = 1e-12
    max_subdivisions: int = 1000
    rule: str = "adaptive"          # "adaptive" or "fixed"
    gl_order: int = 48              # points per axis for fixed tensor rules
    trunc_sigmas: float = 6.0       # Gaussian-tail truncation multiplier (used upstream)

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.rule not in ("adaptive", "fixed"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.gl_order < 2:
            raise ValueError("gl_order must be >= 2")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    subdivisions: int = 0


@dataclass(frozen=True)
class Integrand1D:
    f: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float


@dataclass(frozen=True)
class Integrand2D:
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    box: Tuple[Tuple[float, float], Tuple[float, float]]


@dataclass(frozen=True)
class Integrand4D:
    f: Callable[..., np.ndarray]
    box: Tuple[Tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.box) != 4:
            raise ValueError("Integrand4D requires a 4-axis box")


def gauss_legendre(order: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _gk15_panels(f, a_arr: np.ndarray, b_arr: np.ndarray):
    """Evaluate GK15 on a batch of panels; return (kronrod, gauss_err) per panel."""
    mid = 0.5 * (a_arr + b_arr)[:, None]
    half = 0.5 * (b_arr - a_arr)[:, None]
    x = mid + half * _XK[None, :]
    y = np.asarray(f(x.ravel()), dtype=complex).reshape(x.shape)
    if not np.all(np.isfinite(y.view(float))):
        raise ValueError("integrand returned a non-finite value inside the box")
    k = half[:, 0] * (y @ _WK)
    g = half[:, 0] * (y[:, _GAUSS_IDX] @ _WG)
    return k, np.abs(k - g)


def integrate_1d(integrand: Integrand1D, settings: QuadratureSettings | None = None) -> QuadratureResult:
    """Adaptively integrate a complex integrand over a finite interval.

    Panels with the largest error estimates are bisected until the summed
    error estimate meets max(abs_tol, rel_tol * |value|) or the subdivision
    cap is reached (then :class:`AccuracyError` carries the best estimate).
    """
    settings = settings or QuadratureSettings()
    if not (np.isfinite(integrand.a) and np.isfinite(integrand.b)):
        raise ValueError("integration interval must be finite; truncate upstream")
    a_arr = np.array([integrand.a], dtype=float)
    b_arr = np.array([integrand.b], dtype=float)
    vals, errs = _gk15_panels(integrand.f, a_arr, b_arr)
    panels = [(integrand.a, integrand.b, vals[0], errs[0])]
    nsub = 1

    while True:
        # Summation in left-endpoint order keeps results bit-stable.
        panels.sort(key=lambda p: p[0])
        total = complex(sum(p[2] for p in panels))
        toterr = float(sum(p[3] for p in panels))
        tol = max(settings.abs_tol, settings.rel_tol * abs(total))
        if toterr <= tol:
            return QuadratureResult(total, toterr, nsub)
        if nsub >= settings.max_subdivisions:
            raise AccuracyError(
                f"1-D quadrature did not converge: error {toterr:.3e} > tol {tol:.3e} "
                f"after {nsub} subdivisions",
                QuadratureResult(total, toterr, nsub),
            )
        # Split every panel holding more than its share of the error budget.
        thresh = max(tol / max(len(panels), 1), max(p[3] for p in panels) * 0.5)
        to_split = [p for p in panels if p[3] >= thresh]
        if not to_split:
            to_split = [max(panels, key=lambda p: p[3])]
        to_split = to_split[: settings.max_subdivisions - nsub]
        keep = [p for p in panels if p not in to_split]
        new_a, new_b = [], []
        for (a, b, _, _) in to_split:
            m = 0.5 * (a + b)
            new_a.extend([a, m])
            new_b.extend([m, b])
        vals, errs = _gk15_panels(integrand.f, np.array(new_a), np.array(new_b))
        keep.extend(zip(new_a, new_b, vals, errs))
        panels = keep
        nsub += len(to_split)


def _fixed_2d(integrand: Integrand2D, order: int) -> complex:
    (ax, bx), (ay, by) = integrand.box
    x, wx = gauss_legendre(order, ax, bx)
    y, wy = gauss_legendre(order, ay, by)
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals = np.asarray(integrand.f(X, Y), dtype=complex)
    return complex(np.einsum("i,j,ij->", wx, wy, vals))


def integrate_2d(integrand: Integrand2D, settings: QuadratureSettings | None = None) -> QuadratureResult:
    """2-D integral, adaptive-nested by default, fixed tensor rule on request."""
    settings = settings or QuadratureSettings()
    if settings.rule == "fixed":
        v1 = _fixed_2d(integrand, settings.gl_order)
        v2 = _fixed_2d(integrand, max(settings.gl_order - 8, 4))
        err = abs(v1 - v2)
        tol = max(settings.abs_tol, settings.rel_tol * abs(v1))
        if err > tol:
            raise AccuracyError(
                f"fixed 2-D rule of order {settings.gl_order} missed tolerance "
                f"(error {err:.3e} > {tol:.3e}); raise gl_order",
                QuadratureResult(v1, err),
            )
        return QuadratureResult(v1, err)

    (ax, bx), (ay, by) = integrand.box
    inner = QuadratureSettings(
        rel_tol=settings.rel_tol * 0.1,
        abs_tol=settings.abs_tol * 0.1,
        max_subdivisions=settings.max_subdivisions,
    )
    inner_err = 0.0
    inner_sub = 0

    def outer(xs: np.ndarray) -> np.ndarray:
        nonlocal inner_err, inner_sub
        out = np.empty(xs.shape, dtype=complex)
        for i, xv in enumerate(xs.ravel()):
            res = integrate_1d(
                Integrand1D(lambda ys, xv=xv: integrand.f(np.full_like(ys, xv), ys), ay, by),
                inner,
            )
            out.ravel()[i] = res.value
            inner_err = max(inner_err, res.error)
            inner_sub = max(inner_sub, res.subdivisions)
        return out

    res = integrate_1d(Integrand1D(outer, ax, bx), settings)
    return QuadratureResult(
        res.value,
        res.error + inner_err * abs(bx - ax),
        res.subdivisions + inner_sub,
    )


def integrate_4d(integrand: Integrand4D, settings: QuadratureSettings | None = None) -> QuadratureResult:
    """Fixed-order tensorized Gauss-Legendre over a 4-axis box.

    The rule is non-adaptive; the error estimate compares against a rule
    eight points smaller per axis.  Intended for smooth, Gaussian-damped
    integrands where high-order fixed rules converge spectrally.
    """
    settings = settings or QuadratureSettings()

    def tensor(order: int) -> complex:
        axes = [gauss_legendre(order, a, b) for (a, b) in integrand.box]
        grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij", sparse=True)
        vals = np.asarray(integrand.f(*grids), dtype=complex)
        for d in range(3, -1, -1):
            vals = np.tensordot(vals, axes[d][1], axes=([d], [0]))
        return complex(vals)

    v1 = tensor(settings.gl_order)
    v2 = tensor(max(settings.gl_order - 8, 4))
    err = abs(v1 - v2)
    tol = max(settings.abs_tol, settings.rel_tol * abs(v1))
    if err > tol:
        raise AccuracyError(
            f"fixed 4-D rule of order {settings.gl_order} missed tolerance "
            f"(error {err:.3e} > {tol:.3e}); raise gl_order",
            QuadratureResult(v1, err),
        )
    return QuadratureResult(v1, err)
