"""Weighted (lambda-uniform) spanning-tree distributions on small multigraphs.

``Pr[T]`` is proportional to the product of ``lambda_e`` over the edges of
``T``.  Marginals come from effective resistances of the weighted Laplacian,
fitting is a damped multiplicative fixed-point iteration, sampling uses
Wilson's loop-erased random walks, and exact laws of small edge subsets are
read off contracted/deleted Laplacian determinants.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_edges, check_positive, check_rng

TREE_CAP = 200_000
COND_LIMIT = 1e13


class ConvergenceError(RuntimeError):
    """Marginal fitting did not reach the requested tolerance."""


def _components(n: int, ends, keep=None) -> np.ndarray:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, (a, b) in enumerate(ends):
        if keep is None or keep[i]:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[ra] = rb
    roots = [find(v) for v in range(n)]
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def is_connected(n: int, ends) -> bool:
    return n <= 1 or _components(n, ends).max() == 0


def laplacian(n: int, ends, weights) -> np.ndarray:
    """Weighted Laplacian; loops contribute nothing."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    w = np.asarray(weights)
    L = np.zeros((n, n), dtype=np.result_type(w, float))
    a, b = ends[:, 0], ends[:, 1]
    ok = a != b
    a, b, w = a[ok], b[ok], w[ok]
    np.add.at(L, (a, a), w)
    np.add.at(L, (b, b), w)
    np.add.at(L, (a, b), -w)
    np.add.at(L, (b, a), -w)
    return L


def spanning_tree_count(n: int, ends, weights=None, log: bool = False) -> float:
    """Weighted number of spanning trees (matrix-tree theorem)."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    if weights is None:
        weights = np.ones(len(ends))
    if n == 1:
        return 0.0 if log else 1.0
    sign, logdet = np.linalg.slogdet(laplacian(n, ends, weights)[1:, 1:])
    if sign <= 0:
        return -np.inf if log else 0.0
    return logdet if log else float(np.exp(logdet))


def _reduced_inverse(n: int, ends, lambdas) -> np.ndarray:
    if not is_connected(n, ends):
        raise ValueError("graph is disconnected; no spanning tree exists")
    Lr = laplacian(n, ends, lambdas)[1:, 1:]
    cond = np.linalg.cond(Lr)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ValueError(f"reduced Laplacian is near-singular (condition number {cond:.3g})")
    inv = np.zeros((n, n))
    inv[1:, 1:] = np.linalg.inv(Lr)
    return inv


def exact_marginals(n: int, ends, lambdas) -> np.ndarray:
    """Pr[e in T] = lambda_e times the effective resistance across e."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    lambdas = np.asarray(lambdas, dtype=float)
    if n == 1:
        return np.zeros(len(ends))
    Li = _reduced_inverse(n, ends, lambdas)
    a, b = ends[:, 0], ends[:, 1]
    reff = Li[a, a] + Li[b, b] - 2 * Li[a, b]
    return lambdas * reff


def transfer_matrix(n: int, ends, lambdas) -> np.ndarray:
    """Symmetric kernel K with K_ee = Pr[e in T]; tree edges form a
    determinantal process with this kernel."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    lambdas = np.asarray(lambdas, dtype=float)
    Li = _reduced_inverse(n, ends, lambdas)
    B = np.zeros((len(ends), n))
    B[np.arange(len(ends)), ends[:, 0]] = 1.0
    B[np.arange(len(ends)), ends[:, 1]] -= 1.0
    s = np.sqrt(lambdas)
    return (s[:, None] * B) @ Li @ (B.T * s[None, :])


def check_tree_polytope(n: int, ends, z, tol: float = 1e-9, max_exhaustive: int = 12) -> list[str]:
    """Violations of z(E) = n-1 and z(E(S)) <= |S|-1 (exhaustive for small n)."""
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    z = np.asarray(z, dtype=float)
    out = []
    if np.any(z <= 0) or np.any(z > 1 + tol):
        out.append("entries must lie in (0, 1]")
    if abs(z.sum() - (n - 1)) > tol * max(1, n):
        out.append(f"total {z.sum():.12g} differs from {n - 1}")
    if n <= max_exhaustive:
        bits = np.arange(1 << n)[:, None] >> np.arange(n)[None, :] & 1
        inside = bits[:, ends[:, 0]] & bits[:, ends[:, 1]]
        load = inside @ z
        size = bits.sum(1)
        bad = (size >= 2) & (load > size - 1 + tol)
        for mask in np.flatnonzero(bad)[:5]:
            out.append(f"subset {np.flatnonzero(bits[mask]).tolist()} carries {load[mask]:.12g}")
    return out


def fit_lambdas(
    n: int,
    ends,
    z,
    epsilon: float = 1e-3,
    max_iter: int = 100_000,
    step: float = 1.0,
    min_step: float = 1.0 / 64,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Multiplicative fixed point ``lambda <- lambda * (z / p) ** step``.

    The step is halved whenever the error grows.  Returns (lambdas, fitted
    marginals, iterations); stops once ``max |p_e / z_e - 1| <= epsilon``.
    """
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("target marginals must be strictly positive")
    lam = np.ones(len(ends))
    prev = np.inf
    for it in range(max_iter + 1):
        p = exact_marginals(n, ends, lam)
        err = float(np.max(np.abs(p / z - 1))) if len(z) else 0.0
        if err <= epsilon:
            return lam, p, it
        if err > prev:
            step = max(step / 2, min_step)
        prev = err
        lam = lam * (z / p) ** step
        lam /= np.exp(np.mean(np.log(lam)))
    raise ConvergenceError(
        f"marginal error {err:.3g} after {max_iter} iterations; target may sit on the "
        "polytope boundary, try a larger epsilon"
    )


@dataclass(frozen=True, eq=False)
class TreeDistribution:
    """Fitted weights on a multigraph with vertices ``0..n-1``."""

    n: int
    ends: np.ndarray
    lambdas: np.ndarray
    target: np.ndarray | None = None
    marginals: np.ndarray | None = None
    fitted_epsilon: float = 0.0
    n_iter: int = 0
    _walk: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.marginals is None:
            object.__setattr__(self, "marginals", exact_marginals(self.n, self.ends, self.lambdas))
        adj_e = [[] for _ in range(self.n)]
        adj_v = [[] for _ in range(self.n)]
        cum = [[] for _ in range(self.n)]
        for e, (a, b) in enumerate(self.ends):
            for x, y in ((int(a), int(b)), (int(b), int(a))):
                adj_e[x].append(e)
                adj_v[x].append(y)
                cum[x].append((cum[x][-1] if cum[x] else 0.0) + float(self.lambdas[e]))
        object.__setattr__(self, "_walk", (adj_e, adj_v, cum))

    @property
    def m(self) -> int:
        return len(self.ends)

    def sample(self, rng) -> tuple[int, ...]:
        """One exact draw (sorted edge ids) via Wilson's algorithm rooted at 0."""
        return wilson(self, check_rng(rng))

    def tree_count(self) -> float:
        return spanning_tree_count(self.n, self.ends, self.lambdas)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": self.ends.tolist(),
            "lambdas": self.lambdas.tolist(),
            "marginals": self.marginals.tolist(),
            "target": None if self.target is None else self.target.tolist(),
            "fitted_epsilon": self.fitted_epsilon,
            "n_iter": self.n_iter,
        }


def fit_distribution(n: int, ends, z, epsilon: float = 1e-3, **kwargs) -> TreeDistribution:
    ends, n = check_edges(ends, n)
    z = np.asarray(z, dtype=float)
    if z.shape != (len(ends),):
        raise ValueError(f"need one target per edge, got {z.shape} for {len(ends)} edges")
    lam, p, it = fit_lambdas(n, ends, z, epsilon, **kwargs)
    err = float(np.max(np.abs(p / z - 1))) if len(z) else 0.0
    return TreeDistribution(n, ends, lam, z, p, err, it)


class _Uniforms:
    """Uniform draws fetched from the generator in blocks."""

    def __init__(self, rng, block: int = 64):
        self.rng = rng
        self.block = block
        self.buf = rng.random(block)
        self.i = 0

    def __call__(self) -> float:
        if self.i == self.block:
            self.buf = self.rng.random(self.block)
            self.i = 0
        self.i += 1
        return self.buf[self.i - 1]


def wilson(dist: TreeDistribution, rng) -> tuple[int, ...]:
    n = dist.n
    if n == 1:
        return ()
    adj_e, adj_v, cum = dist._walk
    draw = _Uniforms(rng)
    in_tree = [False] * n
    in_tree[0] = True
    via = [-1] * n
    for start in range(1, n):
        u = start
        while not in_tree[u]:
            c = cum[u]
            k = bisect_right(c, draw() * c[-1])
            k = min(k, len(c) - 1)
            via[u] = k
            u = adj_v[u][k]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = adj_v[u][via[u]]
    return tuple(sorted(adj_e[v][via[v]] for v in range(1, n)))


def enumerate_trees(dist: TreeDistribution, cap: int = TREE_CAP) -> list[tuple[tuple[int, ...], float]]:
    """Every spanning tree with its probability (small graphs only)."""
    n, ends = dist.n, [(int(a), int(b)) for a, b in dist.ends]
    count = spanning_tree_count(n, ends)
    if count > cap * (1 + 1e-9):
        raise ValueError(f"{count:.0f} spanning trees exceed the enumeration cap {cap}")
    m = len(ends)
    trees: list[tuple[int, ...]] = []

    def find(parent, a):
        while parent[a] != a:
            a = parent[a]
        return a

    def rec(i, chosen, parent, alive):
        if len(chosen) == n - 1:
            trees.append(tuple(chosen))
            return
        if i == m or m - i < n - 1 - len(chosen):
            return
        a, b = ends[i]
        ra, rb = find(parent, a), find(parent, b)
        if ra != rb:
            p2 = parent.copy()
            p2[ra] = rb
            rec(i + 1, chosen + [i], p2, alive)
        alive2 = alive.copy()
        alive2[i] = False
        if is_connected(n, [ends[j] for j in range(m) if alive2[j]]):
            rec(i + 1, chosen, parent, alive2)

    if n == 1:
        trees.append(())
    else:
        rec(0, [], list(range(n)), [True] * m)
    lam = dist.lambdas
    w = np.array([np.prod(lam[list(t)]) for t in trees])
    return list(zip(trees, (w / w.sum()).tolist()))


def rank_sequence(dist: TreeDistribution, edges, method: str = "exact", n_samples: int = 10_000, rng=None) -> np.ndarray:
    """Distribution of ``|A & T|`` for the edge set ``A``.

    The exact path evaluates the tree polynomial with ``lambda_e * t`` on
    ``A`` at roots of unity and inverts the discrete Fourier transform.
    """
    A = sorted(set(int(e) for e in edges))
    size = len(A)
    if method == "mc":
        rng = check_rng(rng)
        counts = np.zeros(size + 1)
        aset = set(A)
        for _ in range(n_samples):
            counts[sum(1 for e in dist.sample(rng) if e in aset)] += 1
        return counts / n_samples
    if method != "exact":
        raise ValueError("method must be 'exact' or 'mc'")
    N = min(size, dist.n - 1) + 1
    roots = np.exp(2j * np.pi * np.arange(N) / N)
    vals = []
    for t in roots:
        w = dist.lambdas.astype(complex)
        w[A] = w[A] * t
        vals.append(np.linalg.det(laplacian(dist.n, dist.ends, w)[1:, 1:]) if dist.n > 1 else 1.0)
    coef = np.fft.fft(np.array(vals)).real / N
    # fft uses exp(-2i pi jk/N), matching the inverse transform of evaluations at exp(+2i pi j/N)
    coef = np.clip(coef, 0.0, None)
    coef /= coef.sum()
    out = np.zeros(size + 1)
    out[:N] = coef
    return out


def _tree_weight(n: int, ends, lambdas, inside, outside) -> float:
    """Sum of weights of spanning trees containing ``inside`` and avoiding ``outside``."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    factor = 1.0
    for e in inside:
        ra, rb = find(ends[e][0]), find(ends[e][1])
        if ra == rb:
            return 0.0
        parent[ra] = rb
        factor *= lambdas[e]
    roots = [find(v) for v in range(n)]
    labels = {r: i for i, r in enumerate(sorted(set(roots)))}
    k = len(labels)
    if k == 1:
        return factor
    skip = set(inside) | set(outside)
    keep = [e for e in range(len(ends)) if e not in skip]
    cend = np.array([(labels[roots[ends[e][0]]], labels[roots[ends[e][1]]]) for e in keep], dtype=np.int64).reshape(-1, 2)
    return factor * spanning_tree_count(k, cend, lambdas[keep])


def subset_law(dist: TreeDistribution, edges) -> dict[int, float]:
    """Exact joint law of the indicators of ``edges``.

    Keys are bitmasks (bit ``i`` set iff ``edges[i]`` is in the tree); zero
    probability patterns are omitted.
    """
    edges = [int(e) for e in edges]
    if len(set(edges)) != len(edges):
        raise ValueError("edges must be distinct")
    ends = [(int(a), int(b)) for a, b in dist.ends]
    lam = np.asarray(dist.lambdas, dtype=float)
    total = spanning_tree_count(dist.n, ends, lam)
    law: dict[int, float] = {}

    def rec(i, mask, inside, outside, weight):
        if weight <= 0:
            return
        if i == len(edges):
            law[mask] = weight / total
            return
        e = edges[i]
        w_in = _tree_weight(dist.n, ends, lam, inside + [e], outside)
        rec(i + 1, mask | (1 << i), inside + [e], outside, w_in)
        rec(i + 1, mask, inside, outside + [e], weight - w_in)

    rec(0, 0, [], [], total)
    s = sum(law.values())
    return {k: v / s for k, v in law.items() if v > 1e-15}


def pair_probability(dist: TreeDistribution, e: int, f: int) -> float:
    """Pr[e and f both in T]."""
    return subset_law(dist, [e, f]).get(3, 0.0)


class MaxEntropyTreeDistribution(BaseEstimator):
    """Estimator front end: ``fit(edges, marginals)`` finds weights whose
    spanning-tree law has (approximately) the requested edge marginals.

    Attributes set by ``fit``: ``lambdas_``, ``marginals_``, ``n_iter_``,
    ``fitted_epsilon_``, ``n_nodes_``, ``edges_`` and ``distribution_``.
    """

    def __init__(self, epsilon: float = 1e-3, max_iter: int = 100_000, n_nodes: int | None = None, random_state=None):
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.n_nodes = n_nodes
        self.random_state = random_state

    def fit(self, edges, marginals):
        check_positive(self.epsilon, "epsilon")
        check_positive(self.max_iter, "max_iter", integer=True)
        ends, n = check_edges(edges, self.n_nodes)
        z = np.asarray(marginals, dtype=float)
        if z.shape != (len(ends),):
            raise ValueError(f"marginals must have shape ({len(ends)},), got {z.shape}")
        problems = check_tree_polytope(n, ends, z)
        if problems:
            raise ValueError("marginals outside the spanning-tree polytope: " + "; ".join(problems))
        dist = fit_distribution(n, ends, z, self.epsilon, max_iter=self.max_iter)
        self.distribution_ = dist
        self.lambdas_ = dist.lambdas
        self.marginals_ = dist.marginals
        self.n_iter_ = dist.n_iter
        self.fitted_epsilon_ = dist.fitted_epsilon
        self.n_nodes_ = n
        self.edges_ = ends
        return self

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        """Array of shape (n_samples, n_nodes - 1) of sorted tree edge ids."""
        check_is_fitted(self, "distribution_")
        n_samples = check_positive(n_samples, "n_samples", integer=True)
        rng = check_rng(self.random_state if random_state is None else random_state)
        return np.array([self.distribution_.sample(rng) for _ in range(n_samples)], dtype=np.int64).reshape(
            n_samples, self.n_nodes_ - 1
        )

    def rank_sequence(self, edges) -> np.ndarray:
        check_is_fitted(self, "distribution_")
        return rank_sequence(self.distribution_, edges)


def pairwise_correlations(dist: TreeDistribution) -> np.ndarray:
    """Pr[e, f in T] - Pr[e]Pr[f] for every pair (determinantal identity)."""
    K = transfer_matrix(dist.n, dist.ends, dist.lambdas)
    out = -(K**2)
    np.fill_diagonal(out, 0.0)
    return out


__all__ = [
    "ConvergenceError",
    "MaxEntropyTreeDistribution",
    "TreeDistribution",
    "check_tree_polytope",
    "enumerate_trees",
    "exact_marginals",
    "fit_distribution",
    "fit_lambdas",
    "pair_probability",
    "pairwise_correlations",
    "rank_sequence",
    "spanning_tree_count",
    "subset_law",
    "transfer_matrix",
    "wilson",
]
