"""Centralized solver configuration for all scheduling components."""

import os

# Absolute tolerances
TOLERANCES = {
    "kernel": 1e-9,        # evaluation kernel comparisons
    "feasibility": 1e-6,   # constraint satisfaction of LP/MILP solutions
    "integrality": 1e-6,   # distance of a binary from {0, 1}
    "witness": 1e-6,       # re-evaluation of adversary witnesses
}

SIMPLEX = {
    "max_iterations": 50_000,
    "degeneracy_stall": 50,   # consecutive non-improving pivots before Bland's rule
    "pivot_tol": 1e-9,
}

BRANCH_AND_BOUND = {
    "node_limit": 1_000_000,
    "time_limit": None,       # seconds, None = unlimited
    "seed_node_limit": 5_000,  # completing a warm-start schedule into a full assignment
}

FORMULATION = {
    "idle_epsilon": 1e-6,     # smallest idle time that counts as positive in the general-k model
    "max_prefix_blocks": 64,  # cap on show-set blocks of the enumerated general-k model
}

ENUMERATION = {
    "max_enum_n": 10,
    "threads": 1,
}

ORACLE = {
    "max_n": 8,
    "max_sequence_n": 5,
    "max_sufficiency_n": 6,
    "coarse_grid": 0.5,
    "fine_grid": 0.05,
    "refine_radius": 0.5,
    "interior_samples": 10_000,
}

DATA = {
    "lo_pct": 5,
    "hi_pct": 90,
    "overtime_cost": 1.25,
    "noshow_rates": (0.0, 0.1, 0.2),
}

CLI = {
    "seed": 42,
    "schema_version": 1,
    "float_digits": 6,
}

EXIT_CODES = {
    "success": 0,
    "error": 1,
    "validation": 2,
    "regime": 3,
    "time_limit": 4,
    "infeasible": 5,
}

# Environment overrides (variable name, config dict, key, parser)
_ENV_OVERRIDES = {
    "ROBUST_APPT_THREADS": (ENUMERATION, "threads", int),
    "ROBUST_APPT_TIME_LIMIT": (BRANCH_AND_BOUND, "time_limit", float),
}


def get_setting(section: dict, key: str):
    """Read a config value, letting a matching environment variable win."""
    for env_name, (target, target_key, parse) in _ENV_OVERRIDES.items():
        if target is section and target_key == key:
            raw = os.getenv(env_name)
            if raw:
                try:
                    return parse(raw)
                except ValueError:
                    break
    return section[key]
