"""Hong-Ou-Mandel coincidence-rate engines and dip metrics.

Four engines compute the normalized coincidence rate R(delta_tau):

* ``rate_general``    -- 2-D spectral integral of |F|^2 [1 - e^{-i(ni-ns)dt}]
                         with F = Q times the arm filters (any filter shape).
* ``rate_gaussian_closed`` -- the analytic reduction for Gaussian filters:
                         a 2-D integral over fiber positions (z1, z2) of
                         G(z1) G*(z2) I(z1, z2).
* ``rate_supergaussian`` -- quartic (4th-order super-Gaussian) filters via the
                         tensorized 4-D Gauss-Legendre rule over (z1, z2, ns, ni);
                         the z sums are factored out exactly, so the cost per
                         delay is a 2-D weighted sum.
* ``rate_asymmetric`` -- different signal/idler filters,
                         |F(s,i)|^2 - F(s,i) F*(i,s) e^{-i(ni-ns)dt};
                         collapses to ``rate_general`` for identical filters.

Every engine normalizes so the large-delay baseline is 1.  Rates are clamped
at zero after checking they are nonnegative to within the absolute tolerance.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .jsa import phi_closed
from .quadrature import AccuracyError, QuadratureSettings, gauss_legendre
from .units import ExperimentConfig, FilterShape, FilterSpec

__all__ = [
    "AnalysisError",
    "DipCurve",
    "DipMetrics",
    "filter_amplitude",
    "rate_general",
    "rate_gaussian_closed",
    "rate_supergaussian",
    "rate_asymmetric",
    "dip_curve",
    "dip_metrics",
    "write_curve_csv",
    "metrics_to_json",
]

_DEFAULT_NU_ORDER = 96   # Gauss-Legendre points per frequency axis (2-D engines)
_DEFAULT_Z_ORDER = 64    # Gauss-Legendre points per fiber-position axis
_BASELINE_FRACTION = 0.1


class AnalysisError(RuntimeError):
    """Curve analysis failed (no dip bracketed, flat data, ...)."""


def filter_amplitude(spec: FilterSpec, nu, cfg: ExperimentConfig):
    """Amplitude transmission of a filter at detuning nu (rad/ps)."""
    nu = np.asarray(nu, dtype=float)
    if spec.shape is FilterShape.GAUSSIAN:
        s0 = cfg.sigma_for(spec)
        return np.exp(-(nu**2) / (2.0 * s0**2))
    if spec.shape is FilterShape.SUPERGAUSSIAN4:
        s0 = cfg.sigma_sg_for(spec)
        return np.exp(-(nu**4) / s0**4)
    # cascade: Gaussian stage times quartic stage, each at its own FWHM
    s0 = cfg.sigma_for(spec)
    ssg = cfg.sigma_sg_for(spec)
    return np.exp(-(nu**2) / (2.0 * s0**2)) * np.exp(-(nu**4) / ssg**4)


def _nu_halfwidth(spec: FilterSpec, cfg: ExperimentConfig, trunc: float) -> float:
    """Truncation half-width covering both the filter and pump supports."""
    if spec.shape is FilterShape.GAUSSIAN:
        scale = cfg.sigma_for(spec)
    elif spec.shape is FilterShape.SUPERGAUSSIAN4:
        # quartic tails die much faster; trunc/2.4 sigma already reaches e^-150
        scale = cfg.sigma_sg_for(spec) / 2.4
    else:
        scale = cfg.sigma_for(spec)
    return trunc * max(scale, cfg.sigma_p_rad_per_ps / 3.0)


def _g_function(z, cfg: ExperimentConfig):
    """z-dependent factor G(z) of the pair amplitude, SPM phase included."""
    z = np.asarray(z, dtype=float)
    sp = cfg.sigma_p_rad_per_ps
    b2 = cfg.fiber.beta2_ps2_per_m
    delta = cfg.Delta_rad_per_ps
    spm = 2.0 * cfg.fiber.gamma_per_W_m * cfg.pumps.peak_power_W
    den = 1.0 + b2**2 * z**2 * sp**4
    amp = np.exp(-(b2**2 * z**2 * delta**2 * sp**2) / (4.0 * den)) / den**0.25
    phase = (
        0.5 * np.arctan(b2 * z * sp**2)
        - (b2**3 * z**3 * delta**2 * sp**4) / (4.0 * den)
        + 0.25 * b2 * delta**2 * z
        - spm * z
    )
    return amp * np.exp(1j * phase)


def _check_oscillation_bound(cfg: ExperimentConfig, nu_half: float, order: int) -> int:
    """Cap the per-axis order against the dispersion-phase oscillation scale.

    The phase exp(-i (beta2/4)(ns-ni)^2 (z1-z2)) accumulates at most
    beta2 * L * (2 nu_half)^2 / 4 radians across the box; the rule needs a
    few points per cycle.  Returns a (possibly raised) order.
    """
    cycles = abs(cfg.fiber.beta2_ps2_per_m) * cfg.fiber.length_m * (2.0 * nu_half) ** 2 / 4.0 / (2.0 * math.pi)
    needed = int(math.ceil(8.0 * max(cycles, 1.0)))
    if needed > order:
        if needed > 2048:
            raise AccuracyError(
                f"dispersion phase oscillates over {cycles:.1f} cycles; "
                "fixed-order rule infeasible",
                best=None,  # type: ignore[arg-type]
            )
        return needed
    return order


# ---------------------------------------------------------------------------
# Cached spectral tables.  For fixed config the delay enters each engine only
# through the factor [1 - e^{-i(ni-ns) dt}], so the heavy frequency/length
# integrals are evaluated once and every rate call is a weighted sum.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _general_tables(cfg: ExperimentConfig, signal_filter: FilterSpec,
                    idler_filter: FilterSpec, nu_order: int, trunc: float):
    half = max(_nu_halfwidth(signal_filter, cfg, trunc),
               _nu_halfwidth(idler_filter, cfg, trunc))
    nu_order = _check_oscillation_bound(cfg, half, nu_order)
    nu, w = gauss_legendre(nu_order, -half, half)
    ns, ni = np.meshgrid(nu, nu, indexing="ij")
    z, zw = gauss_legendre(_DEFAULT_Z_ORDER, -cfg.fiber.length_m, 0.0)
    spm = 2.0 * cfg.fiber.gamma_per_W_m * cfg.pumps.peak_power_W
    q = np.tensordot(
        phi_closed(ns[..., None], ni[..., None], z, cfg) * np.exp(-1j * spm * z),
        zw, axes=([2], [0]),
    )
    f_mat = q * filter_amplitude(signal_filter, ns, cfg) * filter_amplitude(idler_filter, ni, cfg)
    w2 = np.outer(w, w)
    diff = ni - ns
    abs2 = np.abs(f_mat) ** 2 * w2
    cross = f_mat * np.conj(f_mat.T) * w2  # F(s,i) F*(i,s)
    baseline = float(np.sum(abs2))
    return diff, abs2, cross, baseline


@lru_cache(maxsize=16)
def _closed_tables(cfg: ExperimentConfig, z_order: int):
    z, zw = gauss_legendre(z_order, -cfg.fiber.length_m, 0.0)
    gz = _g_function(z, cfg) * zw
    zdiff = z[:, None] - z[None, :]
    s0 = cfg.sigma_0_rad_per_ps
    sp = cfg.sigma_p_rad_per_ps
    b2 = cfg.fiber.beta2_ps2_per_m
    den4 = 4.0 + b2**2 * zdiff**2 * s0**4
    pref = (
        math.sqrt(2.0) * math.pi**2 * cfg.pumps.peak_power_W**2 * s0**2
        / (sp * math.sqrt(sp**2 + s0**2))
    )
    i_common = pref * np.exp(0.5j * np.arctan(-0.5 * b2 * zdiff * s0**2)) / den4**0.25
    outer_g = np.outer(gz, np.conj(gz))
    baseline = complex(np.sum(outer_g * i_common))
    return zdiff, den4, i_common, outer_g, baseline


@lru_cache(maxsize=16)
def _supergaussian_tables(cfg: ExperimentConfig, nu_order: int, z_order: int, trunc: float):
    spec = FilterSpec(shape=FilterShape.SUPERGAUSSIAN4, fwhm_nm=cfg.filter.fwhm_nm)
    half = _nu_halfwidth(spec, cfg, trunc)
    nu_order = _check_oscillation_bound(cfg, half, nu_order)
    nu, w = gauss_legendre(nu_order, -half, half)
    ns, ni = np.meshgrid(nu, nu, indexing="ij")
    z, zw = gauss_legendre(z_order, -cfg.fiber.length_m, 0.0)
    gz = _g_function(z, cfg) * zw
    b2 = cfg.fiber.beta2_ps2_per_m
    ssg = cfg.sigma_sg_rad_per_ps
    sp = cfg.sigma_p_rad_per_ps
    # z1 and z2 enter only via exp(-i b2 w (z1 - z2)/4) with w = (ns - ni)^2,
    # so the double z sum factors into |H(w)|^2 with H(w) = sum_z gz e^{-i b2 w z/4}.
    wvals = (ns - ni) ** 2
    h = np.tensordot(np.exp(-0.25j * b2 * wvals[..., None] * z), gz, axes=([2], [0]))
    weight = (
        np.exp(-((ns + ni) ** 2) / (2.0 * sp**2))
        * np.exp(-2.0 * (ns**4 + ni**4) / ssg**4)
        * np.abs(h) ** 2
        * np.outer(w, w)
    )
    diff = ni - ns
    baseline = float(np.sum(weight))
    return diff, weight, baseline


def _finish_rate(num: complex, baseline: float, abs_tol: float, label: str) -> float:
    if abs(num.imag) > abs_tol * max(abs(baseline), 1.0):
        raise AccuracyError(
            f"{label}: imaginary part {num.imag:.3e} exceeds tolerance",
            best=None,  # type: ignore[arg-type]
        )
    rate = num.real / baseline
    if rate < -abs_tol:
        raise AccuracyError(f"{label}: negative rate {rate:.3e}", best=None)  # type: ignore[arg-type]
    return max(rate, 0.0)


def rate_general(delta_tau: float, cfg: ExperimentConfig,
                 settings: QuadratureSettings | None = None) -> float:
    """Normalized coincidence rate from the spectral-domain integral.

    Works for any filter shape (Gaussian, quartic, cascade); the two arms use
    ``cfg.filter`` (and its idler override if present, in which case this is
    the asymmetric formula).
    """
    settings = settings or QuadratureSettings()
    signal = FilterSpec(shape=cfg.filter.shape, fwhm_nm=cfg.filter.fwhm_nm)
    idler = cfg.filter.idler or signal
    return rate_asymmetric(delta_tau, cfg, signal, idler, settings)


def rate_asymmetric(delta_tau: float, cfg: ExperimentConfig,
                    signal_filter: FilterSpec, idler_filter: FilterSpec,
                    settings: QuadratureSettings | None = None) -> float:
    """Normalized rate for (possibly) different signal/idler filters."""
    settings = settings or QuadratureSettings()
    diff, abs2, cross, baseline = _general_tables(
        cfg, signal_filter, idler_filter, _DEFAULT_NU_ORDER, settings.trunc_sigmas
    )
    num = complex(np.sum(abs2) - np.sum(cross * np.exp(-1j * diff * delta_tau)))
    return _finish_rate(num, baseline, settings.abs_tol, "asymmetric/general engine")


def rate_gaussian_closed(delta_tau: float, cfg: ExperimentConfig,
                         settings: QuadratureSettings | None = None) -> float:
    """Normalized rate from the Gaussian-filter closed form (z1, z2 integral)."""
    if cfg.filter.shape is not FilterShape.GAUSSIAN or cfg.filter.idler is not None:
        raise ValueError("closed-form engine requires identical Gaussian filters")
    settings = settings or QuadratureSettings()
    zdiff, den4, i_common, outer_g, baseline = _closed_tables(cfg, _DEFAULT_Z_ORDER)
    s0 = cfg.sigma_0_rad_per_ps
    b2 = cfg.fiber.beta2_ps2_per_m
    brace = 1.0 - np.exp(
        -2.0 * delta_tau**2 * s0**2 / den4
        + 1j * b2 * zdiff * delta_tau**2 * s0**4 / den4
    )
    num = complex(np.sum(outer_g * i_common * brace))
    return _finish_rate(num, baseline.real, settings.abs_tol, "gaussian closed-form engine")


def rate_supergaussian(delta_tau: float, cfg: ExperimentConfig,
                       settings: QuadratureSettings | None = None) -> float:
    """Normalized rate for two identical quartic super-Gaussian filters.

    Tensorized Gauss-Legendre over (z1, z2, ns, ni); the separable z phase is
    factored so the full 4-D sum reduces exactly to a cached 2-D weight.
    """
    settings = settings or QuadratureSettings()
    diff, weight, baseline = _supergaussian_tables(
        cfg, settings.gl_order, _DEFAULT_Z_ORDER, settings.trunc_sigmas
    )
    num = complex(np.sum(weight * (1.0 - np.exp(-1j * diff * delta_tau))))
    return _finish_rate(num, baseline, settings.abs_tol, "super-gaussian engine")


_ENGINES: dict[str, Callable[[float, ExperimentConfig, Optional[QuadratureSettings]], float]] = {
    "general": rate_general,
    "gaussian": rate_gaussian_closed,
    "supergaussian": rate_supergaussian,
}

_ENGINE_TAGS = {
    "general": "GeneralSpectral",
    "gaussian": "GaussianClosed",
    "supergaussian": "SuperGaussian",
    "asymmetric": "Asymmetric",
}


@dataclass(frozen=True)
class DipCurve:
    """Sampled coincidence rate versus delay, baseline-normalized."""

    delays_ps: np.ndarray
    rates: np.ndarray
    engine: str

    def __post_init__(self) -> None:
        if not np.all(np.diff(self.delays_ps) > 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(self.rates < 0):
            raise ValueError("rates must be nonnegative")


@dataclass(frozen=True)
class DipMetrics:
    visibility: float
    fwhm_ps: float
    center_ps: float
    baseline: float
    engine: str = ""
    ambiguous_flanks: bool = False


def dip_curve(cfg: ExperimentConfig, engine: str = "gaussian",
              delays_ps: np.ndarray | None = None,
              settings: QuadratureSettings | None = None,
              signal_filter: FilterSpec | None = None,
              idler_filter: FilterSpec | None = None) -> DipCurve:
    """Sample an engine over a delay axis (default 0.1 ps steps on [-15, 15])."""
    if delays_ps is None:
        delays_ps = np.round(np.arange(-150, 151) * 0.1, 10)
    delays_ps = np.asarray(delays_ps, dtype=float)
    if engine == "asymmetric":
        if signal_filter is None or idler_filter is None:
            raise ValueError("asymmetric engine needs explicit signal and idler filters")
        rates = np.array([
            rate_asymmetric(dt, cfg, signal_filter, idler_filter, settings) for dt in delays_ps
        ])
    else:
        try:
            fn = _ENGINES[engine]
        except KeyError:
            raise ValueError(f"unknown engine {engine!r}; choose from {sorted(_ENGINES)}")
        rates = np.array([fn(dt, cfg, settings) for dt in delays_ps])
    return DipCurve(delays_ps=delays_ps, rates=rates, engine=_ENGINE_TAGS[engine])


def dip_metrics(curve: DipCurve) -> DipMetrics:
    """Visibility, FWHM and center of a sampled dip.

    Baseline is the mean of the outermost 10% of samples on each side; the
    half-depth crossings are located by bisection on a cubic interpolation of
    the curve.
    """
    n = curve.delays_ps.size
    edge = max(int(round(_BASELINE_FRACTION * n / 2)), 1)
    baseline = float(np.mean(np.concatenate([curve.rates[:edge], curve.rates[-edge:]])))
    if baseline <= 0:
        raise AnalysisError("baseline is zero; curve cannot be normalized")

    imin = int(np.argmin(curve.rates))
    rmin = float(curve.rates[imin])
    visibility = 1.0 - rmin / baseline
    if visibility < 1e-9:
        raise AnalysisError("no dip found: curve is flat at the baseline")
    if imin < edge or imin >= n - edge:
        raise AnalysisError("dip minimum lies inside the baseline margin; widen the delay range")

    spline = CubicSpline(curve.delays_ps, curve.rates)
    # refine the center on the spline around the sampled minimum
    lo = curve.delays_ps[max(imin - 1, 0)]
    hi = curve.delays_ps[min(imin + 1, n - 1)]
    dspline = spline.derivative()
    try:
        center = float(brentq(dspline, lo, hi))
    except ValueError:
        center = float(curve.delays_ps[imin])
    rmin_ref = float(spline(center))
    half_level = 0.5 * (baseline + rmin_ref)

    def crossings(side: int) -> list[float]:
        xs = []
        idx = range(imin, n - 1) if side > 0 else range(imin, 0, -1)
        for i in idx:
            j = i + 1 if side > 0 else i - 1
            a, b = curve.rates[i] - half_level, curve.rates[j] - half_level
            if a == 0.0:
                xs.append(float(curve.delays_ps[i]))
            elif a * b < 0:
                left, right = sorted((curve.delays_ps[i], curve.delays_ps[j]))
                xs.append(float(brentq(lambda x: float(spline(x)) - half_level, left, right)))
        return xs

    right = crossings(+1)
    left = crossings(-1)
    if not right or not left:
        raise AnalysisError("half-depth level not bracketed on both flanks")
    ambiguous = len(right) > 1 or len(left) > 1
    # with non-monotone flanks report the widest crossing pair
    fwhm = max(right) - min(left)
    return DipMetrics(
        visibility=visibility,
        fwhm_ps=fwhm,
        center_ps=center,
        baseline=baseline,
        engine=curve.engine,
        ambiguous_flanks=ambiguous,
    )


def write_curve_csv(curve: DipCurve, path) -> None:
    """Write the curve as CSV rows delay_ps,rate_normalized."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delay_ps", "rate_normalized"])
        for d, r in zip(curve.delays_ps, curve.rates):
            writer.writerow([f"{d:.17g}", f"{r:.17g}"])


def metrics_to_json(metrics: DipMetrics) -> str:
    return json.dumps({
        "visibility": metrics.visibility,
        "fwhm_ps": metrics.fwhm_ps,
        "center_ps": metrics.center_ps,
        "engine": metrics.engine,
    }, indent=2)
