"""Robust sequential patrol planning for green security domains.

The heavy lifting lives in the C++ extension; this package re-exports its
surface: the park simulator, the deterrence regression, the zero-sum solver
and the double-oracle planner.
"""

from ._core import (
    ArgumentError,
    EnvState,
    NumericError,
    Park,
    Policy,
    UsageError,
    __version__,
    attack_probability,
    estimate_return,
    fit_logistic,
    initial_state,
    load_policy,
    random_policy,
    rollout_return,
    run_mirror,
    save_policy,
    solve_support_enumeration,
    solve_zero_sum,
    synth_panel,
    train_agent,
    wildlife_step,
    zero_policy,
)

__all__ = [
    "ArgumentError",
    "EnvState",
    "NumericError",
    "Park",
    "Policy",
    "UsageError",
    "__version__",
    "attack_probability",
    "estimate_return",
    "fit_logistic",
    "initial_state",
    "load_policy",
    "random_policy",
    "rollout_return",
    "run_mirror",
    "save_policy",
    "solve_support_enumeration",
    "solve_zero_sum",
    "synth_panel",
    "train_agent",
    "wildlife_step",
    "zero_policy",
]
