"""Phenomenological wave-packet fits, linewidth extraction, scaling laws.

The coincidence wave packet is fitted with

    {A [1 + tanh((t-t0)/tau1)]^p + eps} [1 - erf((t-t0-td)/tau2)] + B,

an empirical rise/plateau/fall shape with a flat background B.  The
spectral linewidth follows from the fitted curve: subtract the fitted
background, clip negatives, take the square root (the field envelope,
up to phase), Fourier transform, square, and read off the full width at
half maximum.  A constant offset would inject a zero-frequency spike
into the transform, which is why the background is removed first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from .errors import FitError, LowContrastError, RankDeficientError
from .waveform import fwhm

PHENO_PARAM_NAMES = ("a_amp", "baseline", "epsilon", "t0", "p_exp", "tau1", "tau2", "t_d")


@dataclass(frozen=True)
class WavePacketFit:
    """Best-fit wave-packet parameters and derived widths."""

    a_amp: float
    baseline: float
    epsilon: float
    t0: float
    p_exp: float
    tau1: float
    tau2: float
    t_d: float
    covariance: np.ndarray = None
    temporal_fwhm: float = float("nan")   # s
    linewidth_hz: float = float("nan")    # Hz
    residual_norm: float = float("nan")   # weighted rms residual
    lorentzian_residual: float = float("nan")
    low_contrast: bool = False
    degenerate_plateau: bool = False

    def __post_init__(self):
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("tau1 and tau2 must be > 0")
        if self.a_amp <= 0:
            raise ValueError("a_amp must be > 0")
        if self.baseline < 0:
            raise ValueError("baseline must be >= 0")

    @property
    def core_params(self) -> tuple:
        return (self.a_amp, self.baseline, self.epsilon, self.t0,
                self.p_exp, self.tau1, self.tau2, self.t_d)

    def __call__(self, t):
        return eval_phenomenological(t, *self.core_params)


def eval_phenomenological(t, a_amp, baseline, epsilon, t0, p_exp, tau1, tau2, t_d):
    """Evaluate the rise/plateau/fall shape at delays ``t``."""
    if tau1 <= 0 or tau2 <= 0:
        raise ValueError("tau1 and tau2 must be > 0")
    t = np.asarray(t, dtype=float)
    rise = 1 + np.tanh((t - t0) / tau1)
    rise = np.clip(rise, 0.0, None) ** p_exp
    return (a_amp * rise + epsilon) * (1 - erf((t - t0 - t_d) / tau2)) + baseline


def _start_points(t, y, bin_w):
    """Deterministic multi-start ladder seeded from histogram moments."""
    base = min(np.mean(y[: max(3, len(y) // 20)]), np.mean(y[-max(3, len(y) // 20):]))
    base = max(base, 0.0)
    pk = y.max()
    scale = max(pk - base, 1e-12)
    above = np.where(y > base + scale / 2)[0]
    t_rise, t_fall = t[above[0]], t[above[-1]]
    w_half = max(t_fall - t_rise, 2 * bin_w)
    starts = []
    for p0 in (1.0, 2.0):
        for tau1_0 in (w_half / 8, w_half / 2):
            for t_d0 in (w_half, w_half / 4):
                starts.append([
                    scale / 2 ** (p0 + 1),          # a_amp
                    base,                           # baseline
                    1e-3 * scale,                   # epsilon
                    min(max(t_rise - tau1_0, t[0]), t[-1]),  # t0
                    p0,
                    max(tau1_0, bin_w / 4),
                    max(w_half / 2, bin_w / 4),     # tau2
                    t_d0,
                ])
    return starts


def fit_wavepacket(hist=None, counts=None, delays=None, min_bins: int = 100,
                   contrast: float = 5.0, weighted: bool = True,
                   compute_linewidth: bool = True) -> WavePacketFit:
    """Least-squares fit of the phenomenological shape to a histogram.

    Accepts either a histogram object carrying ``delay_centers`` and
    ``counts`` or explicit ``delays``/``counts`` arrays.  Residuals are
    weighted by 1/sqrt(max(count, 1)) when ``weighted`` (counting
    statistics).  Eight deterministic starts seeded from the histogram
    moments guard against the multi-modality of the shape in (p, tau1).

    ``contrast`` is the required peak-to-baseline multiple; histograms
    below it raise :class:`LowContrastError` (pass a smaller value for
    low-contrast data, where the fit is still well defined but the
    parameter uncertainties grow).
    """
    if hist is not None and counts is None:
        delays = np.asarray(hist.delay_centers, dtype=float)
        counts = np.asarray(hist.counts, dtype=float)
    else:
        delays = np.asarray(delays, dtype=float)
        counts = np.asarray(counts, dtype=float)
    if len(delays) < min_bins:
        raise ValueError(f"histogram has {len(delays)} bins; need >= {min_bins}")
    bin_w = float(delays[1] - delays[0])

    base_est = min(np.mean(counts[: max(3, len(counts) // 20)]),
                   np.mean(counts[-max(3, len(counts) // 20):]))
    pk = counts.max()
    if contrast > 0 and pk < contrast * max(base_est, 1e-300):
        raise LowContrastError(
            f"peak {pk:.3g} is below {contrast:g} x baseline estimate {base_est:.3g}")

    w = 1.0 / np.sqrt(np.maximum(counts, 1.0)) if weighted else np.ones_like(counts)
    span = delays[-1] - delays[0]
    # the onset must lie inside the observation window, otherwise the
    # pedestal term can impersonate the whole packet
    lo = [0, 0, 0, delays[0], 0.05, 1e-4 * bin_w, 1e-4 * bin_w, 0]
    hi = [np.inf, np.inf, np.inf, delays[-1], 25.0, 4 * span, 4 * span, 4 * span]

    best = None
    for x0 in _start_points(delays, counts, bin_w):
        x0 = np.clip(x0, lo, hi)
        try:
            res = least_squares(
                lambda q: (eval_phenomenological(delays, *q) - counts) * w,
                x0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                max_nfev=6000)
        except Exception:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise FitError("all starts failed")
    if not np.isfinite(best.cost):
        raise FitError("fit diverged", best=best)

    q = best.x
    cov = _covariance(best, counts)
    curve = eval_phenomenological(delays, *q)
    resid = float(np.sqrt(np.mean(((curve - counts) * w) ** 2)))

    t_dense, y_dense = _dense_curve(q, delays)
    try:
        t_fwhm = fwhm(t_dense, y_dense - q[1])
    except Exception:
        t_fwhm = float("nan")
    lw = float("nan")
    lor = float("nan")
    if compute_linewidth:
        lw, lor = _linewidth_of_params(q)

    return WavePacketFit(
        *q, covariance=cov, temporal_fwhm=t_fwhm, linewidth_hz=lw,
        residual_norm=resid, lorentzian_residual=lor,
        low_contrast=bool(pk < 5.0 * max(base_est, 1e-300)),
        degenerate_plateau=bool(q[7] <= bin_w))


def _covariance(res, counts):
    """Gauss-Newton covariance estimate from the final Jacobian."""
    try:
        J = res.jac
        dof = max(len(counts) - J.shape[1], 1)
        s2 = 2 * res.cost / dof
        return s2 * np.linalg.pinv(J.T @ J)
    except Exception:
        return None


def _dense_curve(q, delays, oversample=8):
    a, b, eps, t0, p, tau1, tau2, td = q
    lo = min(delays[0], t0 - 12 * tau1)
    hi = max(delays[-1], t0 + td + 12 * tau2)
    t = np.linspace(lo, hi, oversample * max(len(delays), 2048))
    return t, eval_phenomenological(t, *q)


def _linewidth_of_params(q, n_fft: int = 1 << 20):
    """Fourier linewidth of the fitted shape (background removed)."""
    a, b, eps, t0, p, tau1, tau2, td = q
    pre = 14 * tau1 + 2 * tau2
    post = td + 14 * tau2 + 2 * tau1
    n = 1 << 16
    t = t0 - pre + np.arange(n) * (pre + post) / n   # window anchored at t0
    y = eval_phenomenological(t, *q)
    return _sqrt_ft_fwhm(t, y, baseline=b, n_fft=n_fft)


def linewidth_from_fit(fit: WavePacketFit, n_fft: int = 1 << 20) -> float:
    """Spectral linewidth (Hz) of a fitted wave packet.

    Square root of the fitted curve above the fitted background,
    Fourier transformed and squared; the FWHM of that spectrum is the
    linewidth.  Invariant under joint (A, eps) amplitude scaling and
    under time translation of the fit.
    """
    lw, _ = _linewidth_of_params(np.array(fit.core_params, dtype=float), n_fft=n_fft)
    return lw


def linewidth_from_curve(tau, values, baseline: float = 0.0,
                         n_fft: int = None) -> float:
    """Fourier linewidth (Hz) of an arbitrary sampled wave packet."""
    width, _ = _sqrt_ft_fwhm(np.asarray(tau, dtype=float),
                             np.asarray(values, dtype=float),
                             baseline=baseline, n_fft=n_fft)
    return width


def _sqrt_ft_fwhm(t, y, baseline=0.0, n_fft=None):
    s = np.sqrt(np.clip(np.asarray(y, dtype=float) - baseline, 0.0, None))
    dt = t[1] - t[0]
    n = len(t)
    if n_fft is None:
        n_fft = 1 << max(int(np.ceil(np.log2(16 * n))), 18)
    spec = np.abs(np.fft.fft(s, n=n_fft)) ** 2
    spec = np.fft.fftshift(spec)
    freq = np.fft.fftshift(np.fft.fftfreq(n_fft, dt))
    width = fwhm(freq, spec)
    lor = _lorentzian_mismatch(freq, spec)
    return float(width), lor


def _lorentzian_mismatch(freq, spec):
    """Relative rms deviation of the spectrum from its best Lorentzian."""
    i0 = int(np.argmax(spec))
    try:
        w0 = fwhm(freq, spec) / 2
    except Exception:
        return float("nan")
    sel = np.abs(freq - freq[i0]) < 8 * w0
    f, P = freq[sel], spec[sel]

    def model(q):
        h, f0, w = q
        return h / (1 + ((f - f0) / w) ** 2)

    try:
        res = least_squares(lambda q: model(q) - P, [spec[i0], freq[i0], w0],
                            xtol=1e-12, ftol=1e-12, max_nfev=500)
        return float(np.linalg.norm(model(res.x) - P) / np.linalg.norm(P))
    except Exception:
        return float("nan")


# ---------------------------------------------------------------------------
# pump-power scaling laws

SBR_MODEL = "SBR"                 # y = a P / (P^2 + b)
LINEWIDTH_MODEL = "LINEWIDTH"     # y = a P + b
BRIGHTNESS_MODEL = "BRIGHTNESS"   # y = a P / (P + b)
S_MODEL = "S"                     # y = a P^2 / (P^2 + b)
RATE_MODEL = "RATE"               # y = a P         (zero intercept)
BACKGROUND_MODEL = "BACKGROUND"   # y = a P^2 + b

_POSITIVE_B = {SBR_MODEL, BRIGHTNESS_MODEL, S_MODEL}


@dataclass(frozen=True)
class ScalingFit:
    """One fitted pump-power law; ``param_a`` is the asymptote for S."""

    model_kind: str
    param_a: float
    param_b: float
    residual_norm: float   # ||y - model|| / ||y||

    def __post_init__(self):
        if not (np.isfinite(self.param_a) and np.isfinite(self.param_b)):
            raise ValueError("fit parameters must be finite")
        if self.model_kind in _POSITIVE_B and self.param_b <= 0:
            raise ValueError(f"{self.model_kind} requires param_b > 0")

    def __call__(self, pump_mw):
        return eval_scaling(self.model_kind, pump_mw, self.param_a, self.param_b)


def eval_scaling(model_kind, pump_mw, a, b):
    P = np.asarray(pump_mw, dtype=float)
    if model_kind == SBR_MODEL:
        return a * P / (P**2 + b)
    if model_kind == LINEWIDTH_MODEL:
        return a * P + b
    if model_kind == BRIGHTNESS_MODEL:
        return a * P / (P + b)
    if model_kind == S_MODEL:
        return a * P**2 / (P**2 + b)
    if model_kind == RATE_MODEL:
        return a * P
    if model_kind == BACKGROUND_MODEL:
        return a * P**2 + b
    raise ValueError(f"unknown model kind {model_kind!r}")


def fit_scaling(points, model_kind: str) -> ScalingFit:
    """Least-squares fit of one scaling law to (pump power, value) points.

    The saturating forms are started from their exact linearizations
    (regress P/y or P^2/y on the power) and refined with a bounded
    trust-region pass, so noiseless model data is recovered to
    round-off.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (pump_mw, value) points")
    P, y = pts[:, 0], pts[:, 1]
    if np.any(P <= 0):
        raise ValueError("pump powers must be positive")
    if len(np.unique(P)) < 2 or (model_kind != RATE_MODEL and len(np.unique(P)) < 3):
        raise RankDeficientError("degenerate pump powers; law not identifiable")

    norm = float(np.linalg.norm(y))
    if norm == 0:
        raise RankDeficientError("all values are zero")

    if model_kind == RATE_MODEL:
        a = float(np.dot(P, y) / np.dot(P, P))
        return ScalingFit(model_kind, a, 0.0,
                          float(np.linalg.norm(y - a * P) / norm))
    if model_kind == LINEWIDTH_MODEL:
        a, b = np.polyfit(P, y, 1)
        return ScalingFit(model_kind, float(a), float(b),
                          float(np.linalg.norm(y - (a * P + b)) / norm))
    if model_kind == BACKGROUND_MODEL:
        a, b = np.polyfit(P**2, y, 1)
        return ScalingFit(model_kind, float(a), float(b),
                          float(np.linalg.norm(y - (a * P**2 + b)) / norm))

    if model_kind == SBR_MODEL:
        x_lin = P**2
    elif model_kind == BRIGHTNESS_MODEL:
        x_lin = P
    elif model_kind == S_MODEL:
        x_lin = P**2
    else:
        raise ValueError(f"unknown model kind {model_kind!r}")

    if np.any(y <= 0):
        slope, icept = 1.0 / max(y.max(), 1e-12), 1.0
    else:
        # P^k / y is linear in x_lin with slope 1/a and intercept b/a
        lhs = (P**2 / y) if model_kind == S_MODEL else (P / y)
        slope, icept = np.polyfit(x_lin, lhs, 1)
    a0 = 1.0 / slope if slope > 0 else y.max()
    b0 = icept * a0 if icept * a0 > 0 else float(np.median(x_lin))

    res = least_squares(
        lambda q: eval_scaling(model_kind, P, q[0], q[1]) - y,
        [a0, max(b0, 1e-9)], bounds=([-np.inf, 1e-12], [np.inf, np.inf]),
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    a, b = res.x
    fitted = eval_scaling(model_kind, P, a, b)
    return ScalingFit(model_kind, float(a), float(b),
                      float(np.linalg.norm(y - fitted) / norm))


def power_law_exponent(x, y) -> float:
    """Log-log regression slope; 2.0 for a clean quadratic."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law regression needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
