"""Dissipative multi-boson and nonlinear spin-boson models simulated from a
linearly coupled, driven spin-boson system."""

from .dissipators import Channel, approx_dissipator, dressed_dissipators, engineered_source, standard_jump
from .engine import EvolutionProblem, Trajectory, evolve, lindblad_rhs
from .errors import (
    ConfigError,
    InvalidDimensionError,
    InvalidStateError,
    NotPSDError,
    NumericalQualityError,
    SpinBosonError,
    TruncationError,
    UnstablePotentialError,
)
from .frames import FrameMap, FrameSpec, Gamma, T_operator, from_simulated_frame, to_simulated_frame
from .model import DrivingTerm, SystemParams, TargetModel, build_HG, build_Hn, build_Hn_eta, f_n_operator
from .observables import coherent_state, fidelity, purity, thermal_state

__version__ = "0.1.0"
