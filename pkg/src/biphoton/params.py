"""Physical parameters of the photon-pair source.

Unit conventions used throughout the package:

* Rabi frequencies, decoherence rate, Doppler width and two-photon
  detunings are dimensionless, expressed in units of the natural
  linewidth ``gamma_nat`` (an angular rate, rad/s).
* ``gamma_nat`` and the pump detuning ``delta_p`` are absolute angular
  rates in rad/s.
* Delay times are seconds, spectral axes rad/s unless a function says
  otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

GAMMA_NAT = 2 * math.pi * 5.9e6          # natural linewidth, rad/s
DOPPLER_WIDTH = 55.0                     # Doppler 1/e half width, units of gamma_nat
OMEGA_C_DEFAULT = 5.4                    # coupling Rabi frequency at 4 mW, units of gamma_nat
DELTA_P_DEFAULT = -2 * math.pi * 2.0e9   # pump detuning, rad/s
CELL_LENGTH = 0.075                      # vapor cell length, m
WAVELENGTH_PUMP = 780e-9                 # pump / anti-Stokes wavelength, m
WAVELENGTH_COUPLING = 795e-9             # coupling / Stokes wavelength, m
POINTING_BOUND = math.radians(0.1)       # pointing / divergence half range, rad


@dataclass(frozen=True)
class SourceParams:
    """Parameters entering the Doppler-averaged pair-generation kernels.

    ``alpha`` is the optical depth of the entire atomic population; the
    resonant value measured on the probe line is smaller by
    ``sqrt(pi)/2 / gamma_doppler`` (see :func:`biphoton.model_core.od_convert`).
    """

    alpha: float
    omega_p: float = 1.0
    omega_c: float = OMEGA_C_DEFAULT
    gamma_dec: float = 0.025
    gamma_nat: float = GAMMA_NAT
    gamma_doppler: float = DOPPLER_WIDTH
    delta_p: float = DELTA_P_DEFAULT

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.omega_p < 0:
            raise ValueError(f"omega_p must be >= 0, got {self.omega_p}")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.gamma_dec < 0:
            raise ValueError(f"gamma_dec must be >= 0, got {self.gamma_dec}")
        if self.gamma_doppler <= 0:
            raise ValueError(f"gamma_doppler must be > 0, got {self.gamma_doppler}")
        if self.gamma_nat <= 0:
            raise ValueError(f"gamma_nat must be > 0, got {self.gamma_nat}")

    @property
    def delta_p_units(self) -> float:
        """Pump detuning in units of the natural linewidth."""
        return self.delta_p / self.gamma_nat

    def replace(self, **kw) -> "SourceParams":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass(frozen=True)
class BeamGeometry:
    """Propagation geometry entering the longitudinal phase mismatch.

    ``direction_signs`` orders the four fields as
    (pump, anti-Stokes, coupling, Stokes); +1 propagates along +z.
    Wavelengths default to degenerate 780 nm / 795 nm pairs, which makes
    the collinear copropagating mismatch vanish identically.
    """

    length_m: float = CELL_LENGTH
    wavelengths_m: tuple = (WAVELENGTH_PUMP, WAVELENGTH_PUMP,
                            WAVELENGTH_COUPLING, WAVELENGTH_COUPLING)
    direction_signs: tuple = (1, 1, 1, 1)
    angle_jitter_rad: float = POINTING_BOUND

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError("length_m must be > 0")
        if len(self.wavelengths_m) != 4 or any(w <= 0 for w in self.wavelengths_m):
            raise ValueError("wavelengths_m must be four positive lengths")
        if len(self.direction_signs) != 4 or any(s not in (-1, 1) for s in self.direction_signs):
            raise ValueError("direction_signs must be four entries of +1/-1")
        if self.angle_jitter_rad < 0:
            raise ValueError("angle_jitter_rad must be >= 0")

    @property
    def wavenumbers(self) -> tuple:
        """Vacuum wavenumbers 2*pi/lambda (refractive index taken as 1)."""
        return tuple(2 * math.pi / w for w in self.wavelengths_m)


COPROPAGATING = "copropagating"
COUNTERPROPAGATING = "counterpropagating"


def scheme_geometry(scheme: str, **kw) -> BeamGeometry:
    """Geometry preset for the two beam arrangements."""
    if scheme == COPROPAGATING:
        return BeamGeometry(direction_signs=(1, 1, 1, 1), **kw)
    if scheme == COUNTERPROPAGATING:
        return BeamGeometry(direction_signs=(1, 1, -1, -1), **kw)
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass(frozen=True)
class BrightnessLimitInput:
    """Ratio of pair temporal width to mean pair separation."""

    width_to_separation: float = 0.25

    def __post_init__(self):
        if self.width_to_separation < 0:
            raise ValueError("width_to_separation must be >= 0")
