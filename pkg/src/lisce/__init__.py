"""Constrained channel estimation for links assisted by a large intelligent surface."""

__version__ = "0.1.0"

from .channel import ChannelParams, ChannelRealization, assistant_channel, sample_channel
from .crlb import CrlbBundle, crlb_closed_form, crlb_numeric, fim, fim_gaussian_linear
from .estimators import (
    DualAscentConfig,
    EstimationResult,
    ParameterVector,
    constraint_violation,
    des_estimate,
    kkt_residuals,
    ls_estimate,
)
from .harness import ExperimentConfig, MseRecord, gains_table, mse_difference, run_experiment, run_trial
from .numerics import RandomStream
from .signal import PilotFrame, build_design_matrix, default_pilots, synthesize_observation

__all__ = [
    "ChannelParams", "ChannelRealization", "assistant_channel", "sample_channel",
    "CrlbBundle", "crlb_closed_form", "crlb_numeric", "fim", "fim_gaussian_linear",
    "DualAscentConfig", "EstimationResult", "ParameterVector", "constraint_violation",
    "des_estimate", "kkt_residuals", "ls_estimate",
    "ExperimentConfig", "MseRecord", "gains_table", "mse_difference", "run_experiment", "run_trial",
    "RandomStream", "PilotFrame", "build_design_matrix", "default_pilots", "synthesize_observation",
]
