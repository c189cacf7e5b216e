"""Least-squares fits to measured coincidence-vs-delay data.

Two fit families:

* :func:`fit_gaussian_dip` -- the phenomenological model
  c(dt) = B [1 - V exp(-(dt - tc)^2 / (2 w^2))] with an analytic Jacobian.
* :func:`fit_model` -- a physics engine curve with nuisance parameters
  (baseline, center, depth scale); the engine curve is computed once on a
  dense grid and spline-cached, physics parameters stay fixed.

The optimizer is damped Gauss-Newton with a Levenberg-style schedule:
damping x10 on a rejected step, /10 on an accepted one, starting at 1e-3.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .hom import DipMetrics, _ENGINES
from .quadrature import QuadratureSettings
from .units import ExperimentConfig

__all__ = [
    "CoincidenceDataset",
    "FitResult",
    "ParseError",
    "InsufficientDataError",
    "ingest_csv",
    "fit_gaussian_dip",
    "fit_model",
    "fit_result_to_json",
]

_TWO_SQRT_2LN2 = 2.0 * math.sqrt(2.0 * math.log(2.0))


class ParseError(ValueError):
    """Malformed input row; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class CoincidenceDataset:
    delays_ps: np.ndarray
    counts: np.ndarray
    uncertainties: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.delays_ps.size != self.counts.size:
            raise ValueError("delays and counts must have equal length")
        if self.uncertainties is not None and self.uncertainties.size != self.counts.size:
            raise ValueError("uncertainties length mismatch")
        if self.delays_ps.size < 8:
            raise InsufficientDataError(
                f"need at least 8 points, got {self.delays_ps.size}"
            )
        if not np.all(np.diff(self.delays_ps) > 0):
            raise ValueError("delays must be strictly increasing; use ingest paths to sort")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")


def ingest_csv(path) -> CoincidenceDataset:
    """Read delay/count (and optional uncertainty) columns from a CSV file.

    Header row optional; duplicate delays are averaged with a warning;
    output is sorted by delay.
    """
    delays: list[float] = []
    counts: list[float] = []
    sigmas: list[float] = []
    ncols = None
    with open(path, "r", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            cells = [c.strip() for c in line.split(",")]
            if lineno == 1:
                try:
                    [float(c) for c in cells]
                except ValueError:
                    continue  # header row
            if len(cells) not in (2, 3):
                raise ParseError(f"expected 2 or 3 columns, got {len(cells)}", lineno)
            if ncols is None:
                ncols = len(cells)
            elif len(cells) != ncols:
                raise ParseError(f"inconsistent column count {len(cells)} != {ncols}", lineno)
            try:
                vals = [float(c) for c in cells]
            except ValueError as exc:
                raise ParseError(f"non-numeric cell ({exc})", lineno) from None
            delays.append(vals[0])
            counts.append(vals[1])
            if ncols == 3:
                sigmas.append(vals[2])

    if len(delays) < 8:
        raise InsufficientDataError(f"need at least 8 points, got {len(delays)}")

    d = np.array(delays)
    c = np.array(counts)
    s = np.array(sigmas) if sigmas else None
    order = np.argsort(d, kind="stable")
    d, c = d[order], c[order]
    if s is not None:
        s = s[order]

    uniq, inverse, count = np.unique(d, return_inverse=True, return_counts=True)
    if uniq.size != d.size:
        warnings.warn("duplicate delays found; averaging their counts", stacklevel=2)
        c_avg = np.bincount(inverse, weights=c) / count
        if s is not None:
            # average uncertainties in quadrature over the duplicates
            s = np.sqrt(np.bincount(inverse, weights=s**2)) / count
        d, c = uniq, c_avg
    return CoincidenceDataset(delays_ps=d, counts=c, uncertainties=s)


@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    residual_norm: float
    iterations: int
    converged: bool
    derived_metrics: Optional[DipMetrics] = None
    covariance: Optional[np.ndarray] = None
    suspicious: bool = False
    message: str = ""


def _levenberg(residual: Callable[[np.ndarray], np.ndarray],
               jacobian: Callable[[np.ndarray], np.ndarray],
               p0: np.ndarray,
               max_iter: int = 200,
               gtol: float = 1e-10,
               xtol: float = 1e-12):
    """Damped Gauss-Newton; the objective never increases across accepted steps."""
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        j = jacobian(p)
        g = j.T @ r
        if np.max(np.abs(g)) < gtol * max(1.0, math.sqrt(cost)):
            converged = True
            break
        jtj = j.T @ j
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12)), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = residual(p_new)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                if np.max(np.abs(step)) < xtol * (np.max(np.abs(p)) + xtol):
                    converged = True
                p, r, cost = p_new, r_new, cost_new
                lam = max(lam / 10.0, 1e-14)
                accepted = True
                break
            lam *= 10.0
        if not accepted or converged:
            converged = converged or not accepted and np.max(np.abs(g)) < 1e-6
            break

    j = jacobian(p)
    jtj = j.T @ j
    try:
        cov = np.linalg.inv(jtj)
        dof = max(r.size - p.size, 1)
        cov = cov * cost / dof
    except np.linalg.LinAlgError:
        cov = None
    return p, cost, it, converged, cov


def _initial_dip_guess(d: np.ndarray, c: np.ndarray):
    n = d.size
    edge = max(int(round(0.2 * n / 2)), 1)
    baseline = float(np.mean(np.concatenate([c[:edge], c[-edge:]])))
    imin = int(np.argmin(c))
    cmin = float(c[imin])
    if baseline <= 0:
        baseline = max(float(np.mean(c)), 1e-12)
    vis = max(1.0 - cmin / baseline, 1e-6)
    center = float(d[imin])
    half_level = baseline - 0.5 * (baseline - cmin)
    below = np.nonzero(c < half_level)[0]
    if below.size >= 2:
        width = (d[below[-1]] - d[below[0]]) / _TWO_SQRT_2LN2
    else:
        width = (d[-1] - d[0]) / 10.0
    return baseline, vis, center, max(width, 1e-3)


def fit_gaussian_dip(data: CoincidenceDataset, max_iter: int = 200) -> FitResult:
    """Fit c(dt) = B [1 - V exp(-(dt - tc)^2/(2 w^2))] by damped least squares."""
    d, c = data.delays_ps, data.counts
    wgt = 1.0 / data.uncertainties if data.uncertainties is not None else np.ones_like(c)
    p0 = np.array(_initial_dip_guess(d, c))

    def model(p: np.ndarray) -> np.ndarray:
        b, v, tc, w = p
        return b * (1.0 - v * np.exp(-((d - tc) ** 2) / (2.0 * w**2)))

    def residual(p: np.ndarray) -> np.ndarray:
        return (model(p) - c) * wgt

    def jacobian(p: np.ndarray) -> np.ndarray:
        b, v, tc, w = p
        e = np.exp(-((d - tc) ** 2) / (2.0 * w**2))
        j = np.empty((d.size, 4))
        j[:, 0] = 1.0 - v * e
        j[:, 1] = -b * e
        j[:, 2] = -b * v * e * (d - tc) / w**2
        j[:, 3] = -b * v * e * (d - tc) ** 2 / w**3
        return j * wgt[:, None]

    p, cost, it, converged, cov = _levenberg(residual, jacobian, p0, max_iter=max_iter)
    b, v, tc, w = p
    w = abs(w)
    fwhm = _TWO_SQRT_2LN2 * w
    suspicious = not (0.0 <= v <= 1.05)
    msg = "converged" if converged else "max iterations reached"
    if v < 1e-4:
        msg = "converged-degenerate: no significant dip"
    metrics = DipMetrics(
        visibility=float(v), fwhm_ps=float(fwhm), center_ps=float(tc),
        baseline=float(b), engine="GaussianDipFit",
    )
    return FitResult(
        params={"baseline": float(b), "visibility": float(v),
                "center_ps": float(tc), "width_ps": float(w), "fwhm_ps": float(fwhm)},
        residual_norm=cost, iterations=it, converged=converged,
        derived_metrics=metrics, covariance=cov, suspicious=suspicious, message=msg,
    )


def fit_model(data: CoincidenceDataset, cfg: ExperimentConfig, engine: str = "gaussian",
              free: Sequence[str] = ("baseline", "center", "scale"),
              settings: QuadratureSettings | None = None,
              max_iter: int = 100) -> FitResult:
    """Fit an engine-backed curve c(dt) = B [1 - s (1 - R(dt - tc))].

    Physics parameters are fixed by ``cfg``; only the named nuisance
    parameters vary.  The engine rate R is evaluated once on a dense grid
    spanning the data and spline-interpolated for every candidate step;
    Jacobian by forward finite differences (step 1e-6 * parameter scale).
    """
    if engine not in _ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {sorted(_ENGINES)}")
    unknown = set(free) - {"baseline", "center", "scale"}
    if unknown:
        raise ValueError(f"unknown nuisance parameters: {sorted(unknown)}")

    d, c = data.delays_ps, data.counts
    wgt = 1.0 / data.uncertainties if data.uncertainties is not None else np.ones_like(c)

    span = d[-1] - d[0]
    pad = 0.25 * span + 2.0
    grid = np.linspace(d[0] - pad, d[-1] + pad, max(4 * d.size, 256))
    rate_fn = _ENGINES[engine]
    rates = np.array([rate_fn(dt, cfg, settings) for dt in grid])
    spline = CubicSpline(grid, rates)

    b0, v0, tc0, _ = _initial_dip_guess(d, c)
    defaults = {"baseline": b0, "center": tc0, "scale": min(max(v0, 0.05), 1.0)}
    names = [n for n in ("baseline", "center", "scale") if n in free]
    p0 = np.array([defaults[n] for n in names])

    def model(p: np.ndarray) -> np.ndarray:
        vals = dict(defaults)
        vals.update(zip(names, p))
        r = np.clip(spline(d - vals["center"]), 0.0, None)
        return vals["baseline"] * (1.0 - vals["scale"] * (1.0 - r))

    def residual(p: np.ndarray) -> np.ndarray:
        return (model(p) - c) * wgt

    def jacobian(p: np.ndarray) -> np.ndarray:
        j = np.empty((d.size, p.size))
        r0 = residual(p)
        for k in range(p.size):
            h = 1e-6 * max(abs(p[k]), 1.0)
            pk = p.copy()
            pk[k] += h
            j[:, k] = (residual(pk) - r0) / h
        return j

    p, cost, it, converged, cov = _levenberg(residual, jacobian, p0, max_iter=max_iter)
    vals = dict(defaults)
    vals.update(zip(names, p))

    dense = np.linspace(d[0], d[-1], 2001)
    curve = vals["baseline"] * (1.0 - vals["scale"] * (1.0 - np.clip(spline(dense - vals["center"]), 0.0, None)))
    imin = int(np.argmin(curve))
    vis = vals["scale"]  # engine dips to zero, so depth scale is the visibility
    half = 0.5 * (vals["baseline"] + curve[imin])
    below = np.nonzero(curve < half)[0]
    fwhm = float(dense[below[-1]] - dense[below[0]]) if below.size >= 2 else float("nan")
    metrics = DipMetrics(
        visibility=float(vis), fwhm_ps=fwhm, center_ps=float(vals["center"]),
        baseline=float(vals["baseline"]), engine=engine,
    )
    return FitResult(
        params={k: float(v) for k, v in vals.items()},
        residual_norm=cost, iterations=it, converged=converged,
        derived_metrics=metrics, covariance=cov,
        message="converged" if converged else "max iterations reached",
    )


def fit_result_to_json(result: FitResult, data: CoincidenceDataset | None = None,
                       dense_curve: tuple[np.ndarray, np.ndarray] | None = None) -> str:
    """Serialize a fit result (optionally with a dense fitted curve) to JSON."""
    out: dict = {
        "params": result.params,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "suspicious": result.suspicious,
        "message": result.message,
    }
    if result.derived_metrics is not None:
        m = result.derived_metrics
        out["derived_metrics"] = {
            "visibility": m.visibility, "fwhm_ps": m.fwhm_ps,
            "center_ps": m.center_ps, "baseline": m.baseline, "engine": m.engine,
        }
    if dense_curve is not None:
        out["curve"] = {
            "delay_ps": [float(x) for x in dense_curve[0]],
            "value": [float(y) for y in dense_curve[1]],
        }
    return json.dumps(out, indent=2)
