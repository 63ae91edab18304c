"""Lossy channel model: a beam splitter mixing the signal with vacuum.

Transmittance is an amplitude quantity (T^2 + R^2 = 1). An optional fiber
parameterization maps distance to intensity transmittance via a base-10
exponential absorption law times the detection efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .states import PascsState, vacuum_wigner_xy, wigner_xy, PhasePoint


@dataclass(frozen=True)
class ChannelModel:
    """Amplitude transmittance T in (0, 1] and reflectance R = +sqrt(1-T^2)."""

    t_amp: float
    r_amp: float = field(default=None)

    def __post_init__(self):
        if not (0.0 < self.t_amp <= 1.0):
            raise ValueError("t_amp must lie in (0, 1]")
        if self.r_amp is None:
            object.__setattr__(
                self, "r_amp", math.sqrt(max(0.0, 1.0 - self.t_amp ** 2)))
        elif abs(self.t_amp ** 2 + self.r_amp ** 2 - 1.0) > 1e-12:
            raise ValueError("t_amp^2 + r_amp^2 must equal 1")


IDENTITY_CHANNEL = ChannelModel(1.0)


@dataclass(frozen=True)
class FiberSpec:
    """Fiber link: length in km, per-km base-10 intensity exponent, and
    homodyne detection efficiency folded into the channel."""

    distance_km: float
    attenuation_exp: float = 0.02
    detector_eff: float = 0.9

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError("distance_km must be nonnegative")
        if not self.attenuation_exp > 0:
            raise ValueError("attenuation_exp must be positive")
        if not (0.0 < self.detector_eff <= 1.0):
            raise ValueError("detector_eff must lie in (0, 1]")


def transmittance_from_distance(fiber: FiberSpec) -> ChannelModel:
    """Channel for a fiber link; intensity transmittance
    eff * 10^(-exp * d), converted to amplitude transmittance."""
    tau = fiber.detector_eff * 10.0 ** (-fiber.attenuation_exp * fiber.distance_km)
    if not (0.0 < tau <= 1.0):
        raise ValueError(f"intensity transmittance {tau} outside (0, 1]")
    return ChannelModel(math.sqrt(tau))


def resolve_channel(channel) -> ChannelModel:
    if isinstance(channel, ChannelModel):
        return channel
    if isinstance(channel, FiberSpec):
        return transmittance_from_distance(channel)
    raise TypeError(f"expected ChannelModel or FiberSpec, got {type(channel)!r}")


@dataclass(frozen=True)
class EvePoint:
    """Coordinates of the reflected (eavesdropper-accessible) mode."""

    er: float
    ei: float

    def __post_init__(self):
        if not (math.isfinite(self.er) and math.isfinite(self.ei)):
            raise ValueError("coordinates must be finite")


def two_mode_wigner_xy(state: PascsState, ch: ChannelModel, zr, zi, er, ei):
    """Two-mode Wigner function of signal and reflected mode after the
    beam splitter; broadcasts over array inputs."""
    t, r = ch.t_amp, ch.r_amp
    signal = wigner_xy(state, t * zr - r * er, t * zi - r * ei)
    vac = vacuum_wigner_xy(r * zr + t * er, r * zi + t * ei)
    return signal * vac


def two_mode_wigner(state: PascsState, ch: ChannelModel, p: PhasePoint,
                    e: EvePoint) -> float:
    return float(two_mode_wigner_xy(state, ch, p.zr, p.zi, e.er, e.ei))
