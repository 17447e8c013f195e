"""Hot-vapor photon-pair source: model, counting simulator, analysis."""

__version__ = "0.1.0"

from .params import (SourceParams, BeamGeometry, BrightnessLimitInput,
                     COPROPAGATING, COUNTERPROPAGATING, scheme_geometry)
from .model_core import (doppler_average, kappa_bar, rho_bar, od_convert,
                         od_invert, phase_mismatch, jitter_averaged_mismatch,
                         ultimate_brightness_limit)
from .waveform import (WavePacket, SpectralProfile, amplitude_spectrum,
                       wavepacket, spectrum, fwhm, integrated_rate)
from .fitting import (WavePacketFit, ScalingFit, eval_phenomenological,
                      fit_wavepacket, linewidth_from_fit, linewidth_from_curve,
                      fit_scaling)
from .detection import (DetectorConfig, PairStreamConfig, CoincidenceHistogram,
                        DelaySampler, sample_delay, simulate_pair_stream,
                        detect, coincidence_histogram, auto_correlation,
                        measure_sbr, POISSON, THERMAL)
from .analysis import (OperatingPoint, Calibration, SweepRecord, predict_point,
                       run_operating_point, sweep, trigger_rates,
                       cauchy_schwarz, brightness, success_probability,
                       default_grid)

__all__ = [
    "SourceParams", "BeamGeometry", "BrightnessLimitInput",
    "COPROPAGATING", "COUNTERPROPAGATING", "scheme_geometry",
    "doppler_average", "kappa_bar", "rho_bar", "od_convert", "od_invert",
    "phase_mismatch", "jitter_averaged_mismatch", "ultimate_brightness_limit",
    "WavePacket", "SpectralProfile", "amplitude_spectrum", "wavepacket",
    "spectrum", "fwhm", "integrated_rate",
    "WavePacketFit", "ScalingFit", "eval_phenomenological", "fit_wavepacket",
    "linewidth_from_fit", "linewidth_from_curve", "fit_scaling",
    "DetectorConfig", "PairStreamConfig", "CoincidenceHistogram",
    "DelaySampler", "sample_delay", "simulate_pair_stream", "detect",
    "coincidence_histogram", "auto_correlation", "measure_sbr",
    "POISSON", "THERMAL",
    "OperatingPoint", "Calibration", "SweepRecord", "predict_point",
    "run_operating_point", "sweep", "trigger_rates", "cauchy_schwarz",
    "brightness", "success_probability", "default_grid",
]
