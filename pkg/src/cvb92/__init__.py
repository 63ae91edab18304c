"""Continuous-variable B92 key distribution with photon added-then-
subtracted coherent signal states: phase-space state model, lossy channel,
homodyne outcome densities, security metrics, and a seeded protocol
simulator with eavesdropper models.
"""

from .channel import (ChannelModel, EvePoint, FiberSpec, IDENTITY_CHANNEL,
                      resolve_channel, transmittance_from_distance,
                      two_mode_wigner, two_mode_wigner_xy)
from .distributions import (InterceptJoint, JointBobEve, MarginalDensity,
                            intercept_joint, joint_bob_eve, marginal,
                            tail_correct, tail_wrong)
from .metrics import (SecurityMetrics, accepted_fraction, bit_error_rate,
                      collision_probability, eve_success_probability,
                      evaluate_all, information_gain, mutual_information,
                      secret_rate)
from .protocol import (AttackModel, EmpiricalStats, ProtocolTranscript,
                       PulseRecord, SessionConfig, apply_attack,
                       estimate_statistics, run_session, sample_homodyne)
from .quadrature import DEFAULT_SPEC, IntegrationError, QuadratureSpec
from .states import (AXIS_I, AXIS_R, AxisConvention, FockTruncationError,
                     PascsState, PhasePoint, negativity_minimum,
                     normalization, wigner, wigner_fock_oracle, wigner_xy)

__version__ = "0.1.0"

__all__ = [
    "AXIS_I", "AXIS_R", "AttackModel", "AxisConvention", "ChannelModel",
    "DEFAULT_SPEC", "EmpiricalStats", "EvePoint", "FiberSpec",
    "FockTruncationError", "IDENTITY_CHANNEL", "IntegrationError",
    "InterceptJoint", "JointBobEve", "MarginalDensity", "PascsState",
    "PhasePoint", "ProtocolTranscript", "PulseRecord", "QuadratureSpec",
    "SecurityMetrics", "SessionConfig", "accepted_fraction",
    "apply_attack", "bit_error_rate", "collision_probability",
    "estimate_statistics", "eve_success_probability", "evaluate_all",
    "information_gain", "intercept_joint", "joint_bob_eve", "marginal",
    "mutual_information", "negativity_minimum", "normalization",
    "resolve_channel", "run_session", "sample_homodyne", "secret_rate",
    "tail_correct", "tail_wrong", "transmittance_from_distance",
    "two_mode_wigner", "two_mode_wigner_xy", "wigner", "wigner_fock_oracle",
    "wigner_xy",
]
