"""Acceptance criteria: one callable per criterion, shared by the test
suite and the ``check`` CLI subcommand.

Each criterion returns a :class:`CriterionResult` whose sub-checks carry
the measured value, the target window, and pass/fail.  Tolerances are
pinned here and nowhere else.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import analysis, detection, fitting, model_core, waveform
from .analysis import Calibration, OperatingPoint
from .detection import DetectorConfig, PairStreamConfig, POISSON, THERMAL
from .params import (BrightnessLimitInput, SourceParams, scheme_geometry,
                     COPROPAGATING, COUNTERPROPAGATING)

FIG2A = SourceParams(alpha=370.0, omega_p=1.0, omega_c=5.4, gamma_dec=0.030)
FIG2B = SourceParams(alpha=93.0, omega_p=1.0, omega_c=5.4, gamma_dec=0.020)
FIG2B_RATE = 5.1e4
TOP_RATE = 3.7e5


@dataclass
class Check:
    name: str
    value: float
    low: float
    high: float

    @property
    def passed(self) -> bool:
        return self.low <= self.value <= self.high

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"    [{status}] {self.name}: {self.value:.6g} "
                f"(required {self.low:.6g} .. {self.high:.6g})")


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, low, high):
        self.checks.append(Check(name, float(value), low, high))

    def report(self) -> str:
        head = f"{'PASS' if self.passed else 'FAIL'}  #{self.number} {self.title} " \
               f"({self.runtime_s:.1f} s)"
        return "\n".join([head] + [c.line() for c in self.checks])


def _band(center, frac):
    return center * (1 - frac), center * (1 + frac)


def theory_histogram(params: SourceParams, bin_width=0.8e-9, t_min=-100e-9,
                     t_max=1.5e-6):
    """Noiseless expected histogram from the model curve.

    Bin-averaged onto the counting grid, with pre-onset bins included so
    a fit sees the flat region before the rise.
    """
    wp = waveform.wavepacket(params)
    n = int(round((t_max - t_min) / bin_width))
    edges = t_min + np.arange(n + 1) * bin_width
    idx = np.clip(np.digitize(wp.tau_grid, edges) - 1, 0, n - 1)
    inside = (wp.tau_grid >= t_min) & (wp.tau_grid < t_max)
    sums = np.bincount(idx[inside], weights=wp.values[inside], minlength=n)
    cnt = np.bincount(idx[inside], minlength=n)
    y = np.where(cnt > 0, sums / np.maximum(cnt, 1), 0.0)
    centers = edges[:-1] + bin_width / 2
    return centers, y / y.max()


def fitted_widths(params: SourceParams):
    """(fit temporal FWHM, packet Fourier linewidth) for one parameter set."""
    t, y = theory_histogram(params)
    fit = fitting.fit_wavepacket(delays=t, counts=y, contrast=0.0, weighted=False,
                                 compute_linewidth=False)
    wp = waveform.wavepacket(params)
    lw = fitting.linewidth_from_curve(wp.tau_grid, wp.values)
    return fit.temporal_fwhm, lw


def criterion_1():
    """Headline condition: temporal and spectral widths, under 10 s."""
    t0 = time.perf_counter()
    res = CriterionResult(1, "highest-temperature wave packet widths")
    fw, lw = fitted_widths(FIG2A)
    res.add("temporal FWHM (ns)", fw * 1e9, *_band(180.0, 0.15))
    res.add("spectral FWHM (kHz)", lw / 1e3, *_band(960.0, 0.15))
    res.runtime_s = time.perf_counter() - t0
    res.add("runtime (s)", res.runtime_s, 0.0, 10.0)
    return res


def criterion_2():
    """Lowest-temperature condition widths."""
    t0 = time.perf_counter()
    res = CriterionResult(2, "lowest-temperature wave packet widths")
    fw, lw = fitted_widths(FIG2B)
    res.add("temporal FWHM (ns)", fw * 1e9, *_band(100.0, 0.20))
    res.add("spectral FWHM (MHz)", lw / 1e6, *_band(1.6, 0.20))
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_3():
    """Brightness chain from the calibrated rate and linewidth."""
    t0 = time.perf_counter()
    res = CriterionResult(3, "spectral brightness and fraction of the ceiling")
    b, frac = analysis.brightness(TOP_RATE, 0.96e6)
    res.add("brightness (pairs/s/MHz)", b, *_band(3.8e5, 0.05))
    res.add("fraction of ceiling", frac, 0.22, 0.26)
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_4(seed=101):
    """Detected coincidence rate at the calibrated top point, 10 s of data."""
    t0 = time.perf_counter()
    res = CriterionResult(4, "detection budget at the top operating point")
    mc = analysis.run_operating_point(
        OperatingPoint(pump_mw=16.0, temp_c=65.0), duration=10.0, seed=seed)
    res.add("detected pair rate (1/s)", mc.detected_pair_rate, *_band(4.0e3, 0.05))
    res.runtime_s = time.perf_counter() - t0
    res.add("runtime (s)", res.runtime_s, 0.0, 60.0)
    return res


def criterion_5(seed=202):
    """Signal-to-background ratios and trigger success probabilities."""
    t0 = time.perf_counter()
    res = CriterionResult(5, "signal-to-background and success probability")
    mc_a = analysis.run_operating_point(
        OperatingPoint(pump_mw=16.0, temp_c=65.0), duration=20.0, seed=seed)
    mc_b = analysis.run_operating_point(
        OperatingPoint(pump_mw=16.0, temp_c=38.0), duration=40.0, seed=seed + 1,
        generation_rate=FIG2B_RATE)
    res.add("SBR, highest temperature", mc_a.record.sbr, 3.1 - 1.0, 3.1 + 1.0)
    res.add("SBR, lowest temperature", mc_b.record.sbr, 12.0 - 3.0, 12.0 + 3.0)
    res.add("success probability, highest T (%)", mc_a.success_prob * 100,
            3.4 - 0.7, 3.4 + 0.7)
    res.add("success probability, lowest T (%)", mc_b.success_prob * 100,
            2.0 - 0.5, 2.0 + 0.5)
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_6(seed=303):
    """Scaling laws: linear rate, quadratic background, saturating fits."""
    t0 = time.perf_counter()
    res = CriterionResult(6, "pump-power scaling laws")
    pumps = np.array(analysis.DEFAULT_PUMPS_MW)
    records = [analysis.predict_point(OperatingPoint(pump_mw=p, temp_c=65.0))
               for p in pumps]

    rates = np.array([r.generation_rate for r in records])
    rate_fit = fitting.fit_scaling(np.c_[pumps, rates], fitting.RATE_MODEL)
    res.add("rate-vs-power linear residual", rate_fit.residual_norm, 0.0, 1e-6)

    # accidental background against generation rate, pairs-only detector
    det = DetectorConfig(dark_as=0, dark_s=0, leak_as_per_mw=0, leak_s_per_mw=0,
                         fluorescence_s=0, raman_s_per_mw=0)
    wp = waveform.wavepacket(FIG2A)
    sampler = detection.DelaySampler(wp)
    gen_rates = np.array([0.5e5, 1e5, 2e5, 4e5])
    bg = []
    for i, g in enumerate(gen_rates):
        cfg = PairStreamConfig(generation_rate=g, seed=seed + i)
        pairs = detection.simulate_pair_stream(cfg, 40.0, delay_sampler=sampler)
        out = detection.detect(pairs, det, 40.0)
        hist = detection.coincidence_histogram(out.anti_stokes, out.stokes,
                                               duration_s=40.0)
        tail = hist.counts[hist.n_bins // 2:]          # away from the packet
        bg.append(tail.sum())
    exponent = fitting.power_law_exponent(gen_rates, np.array(bg, dtype=float))
    res.add("background exponent vs rate", exponent, 1.95, 2.05)

    for kind, values in ((fitting.SBR_MODEL, [r.sbr for r in records]),
                         (fitting.LINEWIDTH_MODEL, [r.linewidth_hz for r in records]),
                         (fitting.BRIGHTNESS_MODEL, [r.brightness for r in records]),
                         (fitting.S_MODEL, [r.s_product for r in records])):
        fit = fitting.fit_scaling(np.c_[pumps, values], kind)
        res.add(f"{kind} fit relative residual", fit.residual_norm, 0.0, 0.05)
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_7():
    """Classical-light inequality violation from the measured correlations."""
    t0 = time.perf_counter()
    res = CriterionResult(7, "two-photon correlation inequality violation")
    v = analysis.cauchy_schwarz(2.7, 1.95, 1.97)
    res.add("violation factor", v, 3.56 - 0.05, 3.56 + 0.05)
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_8():
    """Trigger-rate law across the five cell temperatures."""
    t0 = time.perf_counter()
    res = CriterionResult(8, "trigger-rate law")
    k_t_measured = {1.44: 1.8e3, 2.08: 2.6e3, 3.28: 4.1e3, 4.96: 6.2e3, 6.08: 7.6e3}
    for od, k_ref in k_t_measured.items():
        r_t, _ = analysis.trigger_rates(OperatingPoint(pump_mw=16.0, od_measured=od))
        res.add(f"k_t at OD {od}", r_t / 16.0, *_band(k_ref, 0.10))
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_9(seed=404):
    """Numeric invariants: Parseval, quadrature cross-check, fit round trip."""
    t0 = time.perf_counter()
    res = CriterionResult(9, "numeric invariants")
    for tag, p in (("high-T", FIG2A), ("low-T", FIG2B)):
        wp = waveform.wavepacket(p)
        sp = waveform.spectrum(p)
        lhs, rhs = waveform.integrated_rate(wp), waveform.spectral_rate(sp)
        res.add(f"Parseval mismatch ({tag})", abs(lhs - rhs) / rhs, 0.0, 1e-6)

    rng = np.random.Generator(np.random.Philox(seed))
    gd = FIG2A.gamma_doppler
    worst = 0.0
    for _ in range(20):
        n_poles = rng.integers(1, 4)
        coef = rng.normal(size=n_poles) + 1j * rng.normal(size=n_poles)
        re = rng.uniform(-1.5 * gd, 1.5 * gd, n_poles)
        im = rng.uniform(1.5, 3.0, n_poles) * rng.choice([-1.0, 1.0], n_poles)
        poles = re + 1j * im

        def f(w, c=coef, p=poles):
            w = np.asarray(w, dtype=complex)
            return np.sum(c / (w[..., None] - p), axis=-1)

        gh = model_core.doppler_average(f, FIG2A)
        weight = lambda w: math.exp(-(w / gd) ** 2) / (math.sqrt(math.pi) * gd)
        re_part = quad(lambda w: (f(np.array([w]))[0] * weight(w)).real,
                       -8 * gd, 8 * gd, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
        im_part = quad(lambda w: (f(np.array([w]))[0] * weight(w)).imag,
                       -8 * gd, 8 * gd, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
        oracle = re_part + 1j * im_part
        worst = max(worst, abs(gh - oracle) / max(abs(oracle), 1e-30))
    res.add("velocity average vs adaptive quadrature", worst, 0.0, 1e-8)

    rng = np.random.Generator(np.random.Philox(seed + 1))
    worst = 0.0
    t = (np.arange(2500) + 0.5) * 0.8e-9
    for _ in range(10):
        truth = np.array([
            10 ** rng.uniform(1.5, 2.5),            # a_amp
            10 ** rng.uniform(0.5, 1.5),            # baseline
            10 ** rng.uniform(-0.5, 0.5),           # epsilon
            rng.uniform(200e-9, 400e-9),            # t0
            rng.uniform(0.7, 2.2),                  # p
            rng.uniform(20e-9, 70e-9),              # tau1
            rng.uniform(50e-9, 150e-9),             # tau2
            rng.uniform(150e-9, 400e-9),            # t_d
        ])
        y = fitting.eval_phenomenological(t, *truth)
        fit = fitting.fit_wavepacket(delays=t, counts=y, contrast=0.0,
                                     weighted=False, compute_linewidth=False)
        err = np.max(np.abs((np.array(fit.core_params) - truth) / truth))
        worst = max(worst, err)
    res.add("noiseless fit round-trip error", worst, 0.0, 1e-6)
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_10(seed=505):
    """Occupation statistics and the zero-delay auto-correlation."""
    t0 = time.perf_counter()
    res = CriterionResult(10, "auto-correlation statistics options")
    cfg = PairStreamConfig(generation_rate=2e5, statistics_mode=THERMAL,
                           coherence_time_s=150e-9, seed=seed)
    stream = detection.simulate_pair_stream(cfg, 30.0).t_as
    lags, g2, sig = detection.auto_correlation(stream, 30.0)
    res.add("thermal g2(0)", detection.g2_zero(lags, g2), 1.9, 2.1)

    cfg = PairStreamConfig(generation_rate=2e5, statistics_mode=POISSON,
                           seed=seed + 1)
    stream = detection.simulate_pair_stream(cfg, 30.0).t_as
    lags, g2, sig = detection.auto_correlation(stream, 30.0)
    mean_dev = abs(np.mean(g2) - 1.0) / (np.mean(sig) / math.sqrt(len(g2)))
    res.add("poisson g2 mean deviation (sigmas)", mean_dev, 0.0, 4.0)
    res.runtime_s = time.perf_counter() - t0
    return res


def criterion_11():
    """Phase mismatch: exact collinear null and jitter averages."""
    t0 = time.perf_counter()
    res = CriterionResult(11, "phase mismatch")
    geo = scheme_geometry(COPROPAGATING)
    res.add("collinear copropagating mismatch (rad)",
            abs(model_core.phase_mismatch(geo, [0, 0, 0, 0])), 0.0, 1e-12)
    mean_co, _ = model_core.jitter_averaged_mismatch(geo, COPROPAGATING, seed=11)
    res.add("copropagating jitter average (rad)", mean_co, *_band(0.91, 0.25))
    geo_c = scheme_geometry(COUNTERPROPAGATING)
    mean_ct, _ = model_core.jitter_averaged_mismatch(geo_c, COUNTERPROPAGATING,
                                                     seed=11)
    res.add("counterpropagating jitter average (rad)", mean_ct, *_band(3.7, 0.25))
    res.runtime_s = time.perf_counter() - t0
    return res


ALL_CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
                criterion_11)


def run_all(verbose=True):
    results = []
    for fn in ALL_CRITERIA:
        r = fn()
        results.append(r)
        if verbose:
            print(r.report())
    return results
