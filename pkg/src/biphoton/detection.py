"""Stochastic photon-counting chain.

Pairs are born at random times; each member is detected with its channel
efficiency; darks, field leakage, coupling-induced fluorescence and the
pump-driven uncorrelated band photons arrive as independent streams.
Every detected trigger-channel event opens a coincidence window and all
partner-channel events inside it are binned by delay (multi-stop;
overlapping windows allowed, an optional non-retriggering dead time can
be switched on).

All randomness flows from one 64-bit master seed through a counter-based
generator (Philox) with named substreams, so a run is bit-reproducible
and independent points of a sweep can draw from spawned child seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientEventsError
from .fitting import WavePacketFit, eval_phenomenological
from .waveform import WavePacket

POISSON = "POISSON"
THERMAL = "THERMAL"

DEFAULT_BIN = 0.8e-9
DEFAULT_WINDOW = 1.6e-6
DEFAULT_DURATION = 120.0
AUTOCORR_BIN = 12.8e-9


@dataclass(frozen=True)
class DetectorConfig:
    """Efficiencies and spurious count rates of the two channels.

    Efficiencies bundle all optics plus the counting-module quantum
    efficiency.  ``fluorescence_s`` is the coupling-induced fluorescence
    reaching the Stokes counter; ``raman_s_per_mw`` is the pump-driven
    uncorrelated Stokes rate per mW of pump (population cycled through
    the lower ground state comes back via the coupling transition).
    Both are rates at the detector, not subject to further thinning.
    """

    eff_as: float = 0.084
    eff_s: float = 0.13
    dark_as: float = 140.0
    dark_s: float = 220.0
    leak_as_per_mw: float = 18.0       # pump leakage per mW pump
    leak_s_per_mw: float = 1.4         # coupling leakage per mW coupling
    fluorescence_s: float = 506.4
    raman_s_per_mw: float = 420.0      # uncorrelated Stokes per mW pump
    trigger_dead_time_s: float = 0.0

    def __post_init__(self):
        for name in ("eff_as", "eff_s"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("dark_as", "dark_s", "leak_as_per_mw", "leak_s_per_mw",
                     "fluorescence_s", "raman_s_per_mw", "trigger_dead_time_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def stokes_floor(self, pump_mw: float, coupling_mw: float) -> float:
        """Stokes-channel spurious rate (counts/s) excluding pair photons."""
        return (self.dark_s + self.leak_s_per_mw * coupling_mw
                + self.fluorescence_s + self.raman_s_per_mw * pump_mw)


@dataclass(frozen=True)
class PairStreamConfig:
    """Source model for the pair generator.

    ``generation_rate`` counts pairs whose both members are in the
    collected modes.  ``unpaired_rate`` is the extra anti-Stokes-band
    rate whose partner is never collectible; in THERMAL mode paired and
    unpaired events share the per-slot occupation statistics, so the
    anti-Stokes channel keeps its chaotic bunching.
    """

    generation_rate: float
    statistics_mode: str = POISSON
    coherence_time_s: float = 0.0
    unpaired_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.generation_rate < 0 or self.unpaired_rate < 0:
            raise ValueError("rates must be >= 0")
        if self.statistics_mode not in (POISSON, THERMAL):
            raise ValueError(f"unknown statistics mode {self.statistics_mode!r}")
        if self.statistics_mode == THERMAL and self.coherence_time_s <= 0:
            raise ValueError("THERMAL mode requires coherence_time_s > 0")


@dataclass(frozen=True)
class CoincidenceHistogram:
    """Delay histogram of partner-channel counts inside trigger windows."""

    bin_width_s: float = DEFAULT_BIN
    window_s: float = DEFAULT_WINDOW
    duration_s: float = DEFAULT_DURATION
    counts: np.ndarray = None
    n_triggers: int = 0

    def __post_init__(self):
        n_bins = self.window_s / self.bin_width_s
        if abs(n_bins - round(n_bins)) > 1e-9:
            raise ValueError("window_s must be an integer number of bins")
        if self.counts is None:
            object.__setattr__(self, "counts",
                               np.zeros(int(round(n_bins)), dtype=np.int64))
        counts = np.asarray(self.counts)
        if np.any(counts < 0) or not np.issubdtype(counts.dtype, np.integer):
            raise ValueError("counts must be nonnegative integers")

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def delay_centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * self.bin_width_s

    def baseline_estimate(self, tail_fraction: float = 0.25) -> float:
        """Mean counts per bin over the trailing part of the window."""
        k = max(int(self.n_bins * tail_fraction), 1)
        return float(np.mean(self.counts[-k:]))


class DelaySampler:
    """Inverse-CDF sampler for the normalized pair delay density."""

    def __init__(self, wp: WavePacket):
        tau, v = wp.tau_grid, wp.values
        cdf = np.concatenate([[0.0], np.cumsum((v[1:] + v[:-1]) / 2 * np.diff(tau))])
        if cdf[-1] <= 0:
            raise ValueError("wave packet integrates to zero")
        self._cdf = cdf / cdf[-1]
        self._tau = tau

    def __call__(self, u):
        return np.interp(u, self._cdf, self._tau)

    def median(self) -> float:
        return float(self(0.5))


def sample_delay(wp: WavePacket, u):
    """Delay(s) for uniform variates ``u``; u=0 maps to the left support edge."""
    return DelaySampler(wp)(u)


@dataclass(frozen=True)
class PairStream:
    """Raw (undetected) source events."""

    t_as: np.ndarray       # anti-Stokes birth times of pairs, sorted
    t_s: np.ndarray        # partner times, same order as t_as
    t_unpaired: np.ndarray # anti-Stokes-band events with no collectible partner


def _substreams(seed, names):
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.Generator(np.random.Philox(c))
            for n, c in zip(names, children)}


def simulate_pair_stream(cfg: PairStreamConfig, duration: float,
                         delay_sampler=None) -> PairStream:
    """Draw source events over ``[0, duration)``.

    POISSON mode: homogeneous Poisson arrivals.  THERMAL mode: the event
    number in each coherence-time slot is Bose-Einstein distributed with
    the same mean rate, which doubles the zero-delay auto-correlation.
    Pair delays come from ``delay_sampler`` (zero delay if omitted).
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    rngs = _substreams(cfg.seed, ["arrivals", "marking", "delays"])
    band_rate = cfg.generation_rate + cfg.unpaired_rate

    if band_rate == 0:
        empty = np.empty(0)
        return PairStream(empty, empty, empty)

    if cfg.statistics_mode == POISSON:
        n = rngs["arrivals"].poisson(band_rate * duration)
        times = np.sort(rngs["arrivals"].random(n) * duration)
    else:
        slot = cfg.coherence_time_s
        n_slots = int(math.ceil(duration / slot))
        mu = band_rate * slot
        occ = rngs["arrivals"].geometric(1.0 / (1.0 + mu), size=n_slots) - 1
        total = int(occ.sum())
        offsets = np.repeat(np.arange(n_slots) * slot, occ)
        times = offsets + rngs["arrivals"].random(total) * slot
        times = np.sort(times[times < duration])

    paired = rngs["marking"].random(len(times)) < (
        cfg.generation_rate / band_rate if band_rate > 0 else 0.0)
    t_as = times[paired]
    t_un = times[~paired]
    if delay_sampler is None:
        t_s = t_as.copy()
    else:
        t_s = t_as + delay_sampler(rngs["delays"].random(len(t_as)))
    return PairStream(t_as=t_as, t_s=t_s, t_unpaired=t_un)


@dataclass(frozen=True)
class DetectionResult:
    anti_stokes: np.ndarray
    stokes: np.ndarray
    n_pair_coincidences: int   # pairs with both members detected

    def __iter__(self):
        return iter((self.anti_stokes, self.stokes))


def detect(pairs: PairStream, det: DetectorConfig, duration: float,
           pump_mw: float = 16.0, coupling_mw: float = 4.0,
           seed: int = 1) -> DetectionResult:
    """Thin source events by the channel efficiencies and add spurious counts.

    Output streams are time sorted.  With unit efficiencies and zero
    spurious rates the pair times pass through unchanged.
    """
    rngs = _substreams(seed, ["thin_as", "thin_s", "spurious_as", "spurious_s"])

    keep_as = rngs["thin_as"].random(len(pairs.t_as)) < det.eff_as
    keep_s = rngs["thin_s"].random(len(pairs.t_s)) < det.eff_s
    keep_un = rngs["thin_as"].random(len(pairs.t_unpaired)) < det.eff_as

    as_parts = [pairs.t_as[keep_as], pairs.t_unpaired[keep_un]]
    s_parts = [pairs.t_s[keep_s]]

    rate_as = det.dark_as + det.leak_as_per_mw * pump_mw
    rate_s = det.stokes_floor(pump_mw, coupling_mw)
    for rate, parts, rng in ((rate_as, as_parts, rngs["spurious_as"]),
                             (rate_s, s_parts, rngs["spurious_s"])):
        n = rng.poisson(rate * duration)
        parts.append(rng.random(n) * duration)

    return DetectionResult(
        anti_stokes=np.sort(np.concatenate(as_parts)),
        stokes=np.sort(np.concatenate(s_parts)),
        n_pair_coincidences=int(np.sum(keep_as & keep_s)))


def _apply_dead_time(times: np.ndarray, dead: float) -> np.ndarray:
    if dead <= 0 or len(times) == 0:
        return times
    keep = np.empty(len(times), dtype=bool)
    last = -math.inf
    for i, t in enumerate(times):
        ok = (t - last) >= dead
        keep[i] = ok
        if ok:
            last = t
    return times[keep]


def _window_gather(triggers, partner, window):
    """Indices pairing every trigger with partner events in [t, t+window)."""
    lo = np.searchsorted(partner, triggers, side="left")
    hi = np.searchsorted(partner, triggers + window, side="left")
    counts = hi - lo
    total = int(counts.sum())
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    idx = np.repeat(lo - starts, counts) + np.arange(total)
    return np.repeat(triggers, counts), partner[idx]


def coincidence_histogram(as_stream, s_stream,
                          bin_width_s: float = DEFAULT_BIN,
                          window_s: float = DEFAULT_WINDOW,
                          duration_s: float = DEFAULT_DURATION,
                          dead_time_s: float = 0.0) -> CoincidenceHistogram:
    """Multi-stop delay histogram triggered by the anti-Stokes channel."""
    as_stream = np.asarray(as_stream, dtype=float)
    s_stream = np.asarray(s_stream, dtype=float)
    triggers = _apply_dead_time(as_stream, dead_time_s)
    n_bins = int(round(window_s / bin_width_s))
    t_rep, s_hit = _window_gather(triggers, s_stream, window_s)
    bins = ((s_hit - t_rep) / bin_width_s).astype(np.int64)
    bins = np.clip(bins, 0, n_bins - 1)
    counts = np.bincount(bins, minlength=n_bins)
    return CoincidenceHistogram(bin_width_s=bin_width_s, window_s=window_s,
                                duration_s=duration_s, counts=counts,
                                n_triggers=len(triggers))


def auto_correlation(stream, duration: float, bin_width_s: float = AUTOCORR_BIN,
                     max_delay_s: float = 1.6e-6):
    """Normalized intensity auto-correlation estimate of one stream.

    Pair-counting estimator over positive delays, divided by the
    uncorrelated expectation ``N^2 * bin / duration`` so that the
    estimate tends to 1 at large delay.  Returns (lag centers, g2,
    one-sigma statistical error).
    """
    stream = np.asarray(stream, dtype=float)
    if len(stream) < 10_000:
        raise InsufficientEventsError(
            f"stream has {len(stream)} counts; need >= 10000")
    if duration <= 10 * max_delay_s:
        raise ValueError("stream duration must greatly exceed the delay range")
    n_bins = int(round(max_delay_s / bin_width_s))
    lo = np.searchsorted(stream, stream, side="right")
    hi = np.searchsorted(stream, stream + max_delay_s, side="left")
    counts = hi - lo
    total = int(counts.sum())
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    idx = np.repeat(lo - starts, counts) + np.arange(total)
    delays = stream[idx] - np.repeat(stream, counts)
    bins = np.clip((delays / bin_width_s).astype(np.int64), 0, n_bins - 1)
    hist = np.bincount(bins, minlength=n_bins).astype(float)
    n = len(stream)
    expected = n * n * bin_width_s / duration
    g2 = hist / expected
    sigma = np.sqrt(np.maximum(hist, 1.0)) / expected
    lags = (np.arange(n_bins) + 0.5) * bin_width_s
    return lags, g2, sigma


def g2_zero(lags, g2, n_fit: int = 3) -> float:
    """Zero-delay value by linear extrapolation of the first bins."""
    a, b = np.polyfit(lags[:n_fit], g2[:n_fit], 1)
    return float(b)


def measure_sbr(hist: CoincidenceHistogram, fit: WavePacketFit) -> float:
    """Signal-to-background ratio (peak minus baseline over baseline).

    Evaluated on the fitted curve; a zero fitted baseline flags an
    infinite ratio (returned as ``math.inf``).
    """
    t = hist.delay_centers
    curve = eval_phenomenological(t, *fit.core_params)
    peak = float(curve.max())
    if fit.baseline <= 0:
        return math.inf
    return (peak - fit.baseline) / fit.baseline


def g2_cross_peak(hist: CoincidenceHistogram) -> float:
    """Normalized zero-ish-delay cross-correlation: peak over far baseline."""
    base = hist.baseline_estimate()
    if base <= 0:
        return math.inf
    return float(hist.counts.max() / base)
