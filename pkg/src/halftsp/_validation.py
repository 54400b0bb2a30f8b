"""Small input-validation helpers shared by the estimators and the CLI."""
from __future__ import annotations

import numbers

import numpy as np

# purpose tags for independent per-trial random streams
TREE_STREAM = 0
BERNOULLI_STREAM = 1


def check_rng(random_state) -> np.random.Generator:
    """Turn None, an int seed or a Generator into a Generator."""
    if random_state is None:
        return np.random.default_rng()
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, (numbers.Integral, np.integer)):
        return np.random.default_rng(int(random_state))
    if isinstance(random_state, np.random.SeedSequence):
        return np.random.default_rng(random_state)
    raise ValueError(f"{random_state!r} cannot be used to seed a Generator")


def trial_rng(seed: int, trial: int, purpose: int) -> np.random.Generator:
    """Independent stream for one (master seed, trial, purpose) triple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(purpose)))
    return np.random.default_rng(ss)


def check_positive(value, name: str, integer: bool = False):
    if integer:
        if not isinstance(value, (numbers.Integral, np.integer)) or value <= 0:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def check_edges(ends, n_nodes: int | None = None) -> tuple[np.ndarray, int]:
    """Validate an (m, 2) integer endpoint array; returns it with the node count."""
    ends = np.asarray(ends)
    if ends.ndim != 2 or ends.shape[1] != 2:
        raise ValueError(f"edge array must have shape (m, 2), got {ends.shape}")
    if ends.size and not np.issubdtype(ends.dtype, np.integer):
        if not np.all(ends == np.round(ends)):
            raise ValueError("edge endpoints must be integers")
    ends = ends.astype(np.int64)
    if ends.size and ends.min() < 0:
        raise ValueError("edge endpoints must be nonnegative")
    inferred = int(ends.max()) + 1 if ends.size else 1
    if n_nodes is None:
        n_nodes = inferred
    elif n_nodes < inferred:
        raise ValueError(f"n_nodes={n_nodes} but an endpoint equals {inferred - 1}")
    if np.any(ends[:, 0] == ends[:, 1]):
        raise ValueError("self-loops are not allowed")
    return ends, int(n_nodes)
