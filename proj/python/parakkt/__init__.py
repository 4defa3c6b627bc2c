"""Optimal control of semilinear parabolic equations with box and mixed
pointwise constraints: solver, KKT certification, second-order and
regularity checks.

Fields are numpy arrays of shape (num_levels, num_nodes); row 0 is the
initial level, which is zero for controls and multipliers.
"""

from ._core import (
    Config,
    ConfigError,
    Error,
    InvalidArgument,
    Mesh,
    Run,
    certify,
    holder_estimate,
    regularity,
    robinson,
    second_order,
    solve,
)

__all__ = [
    "Config",
    "ConfigError",
    "Error",
    "InvalidArgument",
    "Mesh",
    "Run",
    "certify",
    "holder_estimate",
    "regularity",
    "robinson",
    "second_order",
    "solve",
]
