"""Reliability of noisy q-ary gate networks: majority coefficients, denoising
thresholds, simplex dynamics of restoring gates, noise propagation and
Monte Carlo simulation."""
from __future__ import annotations

from .coeffs import CoeffTable, coeffs, coeffs_countvector, coeffs_enumerate
from .errors import ArgumentError, ConfigurationError, ModeError, ResourceError, UnsupportedError
from .gates import GateTable, Leaf, Node, builtin_gate, eval_exact, pushforward
from .simplex import Dist, apply_channel, decode, symmetric_encode
from .thresholds import scalar_fixed_points, threshold_report

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "CoeffTable", "ConfigurationError", "Dist", "GateTable", "Leaf", "ModeError",
    "Node", "ResourceError", "UnsupportedError", "apply_channel", "builtin_gate", "coeffs",
    "coeffs_countvector", "coeffs_enumerate", "decode", "eval_exact", "pushforward",
    "scalar_fixed_points", "symmetric_encode", "threshold_report",
]
