"""Temporal pair wave packet and its frequency spectrum.

The two-photon coincidence density is the squared modulus of the
inverse Fourier transform of the complex pair amplitude

    phi(delta) = kappa_bar(delta) * sinc(rho_bar(delta)) * exp(i rho_bar(delta)),

evaluated on a uniform detuning grid and transformed with an FFT.  The
spectral axis is rad/s, delays are seconds, and the coincidence density
carries units of 1/s^2 so that its delay integral is a rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CrossingError, GridTooNarrowError, ResolutionError
from .model_core import kappa_bar, rho_bar
from .params import SourceParams

#: Detuning half-span (units of the natural linewidth) at which the pair
#: amplitude has decayed below 1e-4 of its peak for the parameter regime
#: of interest.  Narrower grids clip the broadband pedestal of the
#: amplitude and fail the tail check below.
DEFAULT_SPAN_UNITS = 320.0
DEFAULT_N_POINTS = 1 << 16
TAIL_FRACTION = 1e-4
#: Relative level at which the delay grid is cropped.  Well below the
#: 1e-4 tail bound so that truncation does not disturb integrals.
CROP_FRACTION = 1e-8


@dataclass(frozen=True)
class WavePacket:
    """Sampled coincidence density G2(tau) on a uniform delay grid."""

    tau_grid: np.ndarray       # s, strictly increasing, uniform
    values: np.ndarray         # 1/s^2, >= 0
    params_snapshot: SourceParams

    def __post_init__(self):
        dt = np.diff(self.tau_grid)
        if not (np.all(dt > 0) and np.allclose(dt, dt[0], rtol=1e-9)):
            raise ValueError("tau_grid must be strictly increasing and uniform")
        if np.any(self.values < 0):
            raise ValueError("values must be nonnegative")
        peak = self.values.max()
        if peak > 0 and (self.values[0] > TAIL_FRACTION * peak
                         or self.values[-1] > TAIL_FRACTION * peak):
            raise ValueError("values must decay below 1e-4 of peak at the grid ends")

    @property
    def bin_width(self) -> float:
        return float(self.tau_grid[1] - self.tau_grid[0])


@dataclass(frozen=True)
class SpectralProfile:
    """Sampled pair spectrum F(delta) with its full width at half maximum."""

    delta_grid: np.ndarray     # rad/s
    values: np.ndarray         # dimensionless, >= 0
    fwhm: float                # Hz

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("values must be nonnegative")


def csinc(z):
    """sin(z)/z for complex z with the removable singularity filled in."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    out = np.sin(safe) / safe
    return np.where(small, 1 - z**2 / 6 + z**4 / 120, out)


def amplitude_spectrum(delta_grid, params: SourceParams, check_tail: bool = True):
    """Complex pair amplitude on ``delta_grid`` (units of the natural linewidth).

    Raises
    ------
    GridTooNarrowError
        if the amplitude at either end of the grid exceeds 1e-4 of its
        peak, meaning the grid clips the pedestal.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    rho = rho_bar(delta_grid, params)
    amp = kappa_bar(delta_grid, params) * csinc(rho) * np.exp(1j * rho)
    if check_tail:
        peak = np.abs(amp).max()
        if peak > 0:
            edge = max(abs(amp[0]), abs(amp[-1]))
            if edge > TAIL_FRACTION * peak:
                raise GridTooNarrowError(
                    f"amplitude at grid ends is {edge/peak:.2e} of peak "
                    f"(limit {TAIL_FRACTION:g}); widen the detuning span")
    return amp


def _centered_fft_grid(span_units: float, n_points: int, params: SourceParams):
    step = 2 * span_units / n_points
    delta_units = (np.arange(n_points) - n_points // 2) * step
    return delta_units, step * params.gamma_nat


def _transform(params: SourceParams, span_units: float, n_points: int):
    """FFT of the amplitude; returns (tau, G2) over the full conjugate window."""
    delta_units, d_omega = _centered_fft_grid(span_units, n_points, params)
    amp = amplitude_spectrum(delta_units, params)
    a_tau = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(amp))) * d_omega / (2 * np.pi)
    d_tau = 2 * np.pi / (n_points * d_omega)
    tau = (np.arange(n_points) - n_points // 2) * d_tau
    return tau, np.abs(a_tau) ** 2


def _crop(tau, g2, tau_span, crop_fraction):
    peak = g2.max()
    if tau_span is not None:
        lo, hi = tau_span
        sel = (tau >= lo) & (tau <= hi)
        if not np.any(sel):
            raise ValueError("tau_span does not overlap the transform window")
        return tau[sel], g2[sel]
    keep = np.where(g2 > crop_fraction * peak)[0]
    lo = max(keep[0] - 2, 0)
    hi = min(keep[-1] + 3, len(tau))
    return tau[lo:hi], g2[lo:hi]


def wavepacket(params: SourceParams, tau_span=None, n_points: int = DEFAULT_N_POINTS,
               span_units: float = DEFAULT_SPAN_UNITS, check_resolution: bool = False,
               crop_fraction: float = CROP_FRACTION) -> WavePacket:
    """Pair wave packet G2(tau).

    ``tau_span`` optionally fixes the returned delay window ``(lo, hi)``
    in seconds; by default the grid is cropped where the density falls
    below ``crop_fraction`` of its peak.  ``n_points`` must be a power
    of two, at least 4096.  With ``check_resolution`` the transform is
    repeated at twice the point count and compared.

    Raises
    ------
    ResolutionError
        if the doubling check moves any value by more than 0.1% of peak.
    """
    if n_points < (1 << 12) or (n_points & (n_points - 1)) != 0:
        raise ValueError("n_points must be a power of two >= 4096")
    tau, g2 = _transform(params, span_units, n_points)
    if check_resolution:
        tau2, g22 = _transform(params, span_units, 2 * n_points)
        # same delay step, doubled window: coarse points sit at an n/2 offset
        sel = np.arange(n_points) + n_points // 2
        err = np.abs(g22[sel] - g2).max()
        if err > 1e-3 * g2.max():
            raise ResolutionError(
                f"doubling n_points moves values by {err/g2.max():.2e} of peak")
    tau_c, g2_c = _crop(tau, g2, tau_span, crop_fraction)
    return WavePacket(tau_grid=tau_c, values=g2_c, params_snapshot=params)


def spectrum(params: SourceParams, span_units: float = DEFAULT_SPAN_UNITS,
             n_points: int = DEFAULT_N_POINTS,
             check_resolution: bool = False) -> SpectralProfile:
    """Pair spectrum F(delta) = |phi(delta)|^2 with its width.

    The grid covers ``+/- span_units`` natural linewidths; the returned
    axis is rad/s and the width is in Hz.
    """
    if n_points < (1 << 12) or (n_points & (n_points - 1)) != 0:
        raise ValueError("n_points must be a power of two >= 4096")
    delta_units, _ = _centered_fft_grid(span_units, n_points, params)
    values = np.abs(amplitude_spectrum(delta_units, params)) ** 2
    if check_resolution:
        delta2, _ = _centered_fft_grid(span_units, 2 * n_points, params)
        v2 = np.abs(amplitude_spectrum(delta2, params)) ** 2
        err = np.abs(v2[1::2] - values).max()
        if err > 1e-3 * values.max():
            raise ResolutionError(
                f"doubling n_points moves values by {err/values.max():.2e} of peak")
    width_units = fwhm(delta_units, values)
    return SpectralProfile(delta_grid=delta_units * params.gamma_nat, values=values,
                           fwhm=width_units * params.gamma_nat / (2 * np.pi))


def fwhm(x, y) -> float:
    """Full width at half maximum via linear interpolation of the crossings.

    The curve must have its global maximum away from the first and last
    samples.  If several crossings exist on a side the outermost one is
    used (broad shoulders win over ripples).

    Raises
    ------
    CrossingError
        if either side never falls below half maximum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 3:
        raise ValueError("need matching x/y arrays with at least 3 samples")
    i_pk = int(np.argmax(y))
    if i_pk in (0, len(y) - 1):
        raise CrossingError("global maximum sits at the grid boundary")
    half = y[i_pk] / 2

    left = y[:i_pk + 1]
    rises = np.where((left[:-1] < half) & (left[1:] >= half))[0]
    if len(rises) == 0:
        raise CrossingError("no half-maximum crossing to the left of the peak")
    il = rises[0]  # outermost crossing
    x_left = x[il] + (x[il + 1] - x[il]) * (half - y[il]) / (y[il + 1] - y[il])

    right = y[i_pk:]
    falls = np.where((right[:-1] >= half) & (right[1:] < half))[0]
    if len(falls) == 0:
        raise CrossingError("no half-maximum crossing to the right of the peak")
    ir = i_pk + falls[-1]
    x_right = x[ir] + (x[ir + 1] - x[ir]) * (half - y[ir]) / (y[ir + 1] - y[ir])
    return float(x_right - x_left)


def integrated_rate(wp: WavePacket) -> float:
    """Delay integral of the coincidence density (1/s, uncalibrated)."""
    return float(np.trapezoid(wp.values, wp.tau_grid))


def spectral_rate(profile: SpectralProfile) -> float:
    """(1/2pi) integral of F over detuning; equals the delay integral."""
    return float(np.trapezoid(profile.values, profile.delta_grid) / (2 * np.pi))
