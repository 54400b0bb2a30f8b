"""Extremes of E[g(B_1 + ... + B_m)] over independent Bernoullis.

For a fixed mean the extremes are attained at success profiles whose
entries take at most three values {0, x, 1}.  Each such profile family is a
polynomial in x, so it can be optimised exactly on its feasible interval
from the roots of its derivative.
"""
from __future__ import annotations

from math import comb

import numpy as np
from numpy.polynomial import Polynomial


def poisson_binomial(ps) -> np.ndarray:
    """Distribution of the number of successes of independent Bernoullis."""
    pmf = np.ones(1)
    for p in ps:
        pmf = np.convolve(pmf, [1 - p, p])
    return pmf


def profile_value(ps, objective) -> float:
    g = _objective(objective, len(ps))
    return float(poisson_binomial(ps) @ g)


def _objective(objective, m: int) -> np.ndarray:
    if callable(objective):
        return np.array([float(objective(k)) for k in range(m + 1)])
    g = np.asarray(objective, dtype=float)
    if g.shape != (m + 1,):
        raise ValueError(f"objective needs {m + 1} values, got {g.shape}")
    return g


def _family_poly(ones: int, free: int, g: np.ndarray) -> Polynomial:
    x = Polynomial([0, 1])
    total = Polynomial([0])
    for j in range(free + 1):
        total = total + g[ones + j] * comb(free, j) * x**j * (1 - x) ** (free - j)
    return total


def bernoulli_extremes(m: int, mean, objective, fixed_ones: int = 0, sense: str = "min") -> dict:
    """Optimise ``E[g(sum)]`` over profiles in {0, x, 1}^m.

    ``mean`` is a number or a (low, high) range for the expected sum;
    ``fixed_ones`` entries are pinned to 1.  Returns the optimal profile,
    its value and the table of best candidates per (ones, zeros) family.
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    g = _objective(objective, m)
    lo, hi = (mean, mean) if np.isscalar(mean) else (float(mean[0]), float(mean[1]))
    sign = 1.0 if sense == "min" else -1.0
    table = []
    for ones in range(fixed_ones, m + 1):
        for zeros in range(0, m - ones + 1):
            free = m - ones - zeros
            if free == 0:
                if lo - 1e-12 <= ones <= hi + 1e-12:
                    table.append({"profile": [1.0] * ones + [0.0] * zeros, "x": None, "value": float(g[ones])})
                continue
            a = max(0.0, (lo - ones) / free)
            b = min(1.0, (hi - ones) / free)
            if a > b + 1e-15:
                continue
            poly = _family_poly(ones, free, g)
            xs = [a, b]
            for r in poly.deriv().roots():
                if abs(r.imag) < 1e-12 and a <= r.real <= b:
                    xs.append(float(r.real))
            vals = [float(poly(x)) for x in xs]
            k = int(np.argmin(sign * np.array(vals)))
            x = xs[k]
            table.append({"profile": [1.0] * ones + [x] * free + [0.0] * zeros, "x": x, "value": vals[k]})
    if not table:
        raise ValueError("no profile satisfies the mean constraint")
    best = min(table, key=lambda row: sign * row["value"])
    return {"profile": best["profile"], "value": best["value"], "table": table}


def reference_extremes() -> dict[str, dict]:
    """The four extremal values the lemma checks compare against."""
    return {
        "three_edges_exactly_one": {
            "result": bernoulli_extremes(3, 1.5, [0, 1, 0, 0], fixed_ones=1),
            "profile_check": profile_value([1, 0.25, 0.25], [0, 1, 0, 0]),
            "profile_expected": 9 / 16,
            "expected": 1 / 2,
        },
        "three_edges_exactly_two": {
            "result": bernoulli_extremes(3, 1.5, [0, 0, 1, 0], fixed_ones=1),
            "expected": 3 / 8,
        },
        "two_edges_exactly_one": {
            "result": bernoulli_extremes(2, (0.5, 1.5), [0, 1, 0]),
            "expected": 3 / 8,
        },
        "min_cut_even": {
            "result": bernoulli_extremes(4, 2.0, [1, 0, 1, 0, 1], fixed_ones=1),
            "expected": 13 / 27,
        },
    }
