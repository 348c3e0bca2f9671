"""Flow-map threshold analysis for concatenated fault-tolerant circuits."""

from ._core import (
    ConfigurationError,
    FlowMap,
    ParseError,
    VariableBindingError,
    asymptotic_threshold,
    fixed_points,
    low_order_bound,
    mc_failure,
    parse_flowmap,
    pseudothreshold,
    run_cli,
    steane_census,
    threshold_set,
    tmr_flow_map,
    tmr_netlist,
    trajectory,
    uv_example_map,
)

__all__ = [
    "ConfigurationError",
    "FlowMap",
    "ParseError",
    "VariableBindingError",
    "asymptotic_threshold",
    "fixed_points",
    "low_order_bound",
    "mc_failure",
    "parse_flowmap",
    "pseudothreshold",
    "run_cli",
    "steane_census",
    "threshold_set",
    "tmr_flow_map",
    "tmr_netlist",
    "trajectory",
    "uv_example_map",
]
