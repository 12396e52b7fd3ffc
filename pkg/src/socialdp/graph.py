"""Graph topologies and the Metropolis-Hastings random walk over them.

Graphs are undirected, simple, connected and non-bipartite, with dense
integer node ids in ``[0, n)``. The walk moves from ``i`` to a neighbour
``k`` with probability ``min(1/deg(i), 1/deg(k))`` and stays put with the
remaining mass, which makes the transition matrix symmetric and doubly
stochastic with the uniform distribution as its stationary law.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from os import PathLike
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import rng as _rng
from .errors import (
    BipartiteGraph,
    ConvergenceFailure,
    DisconnectedGraph,
    DuplicateEdge,
    GenerationFailed,
    InvalidDegree,
    InvalidNodeId,
    SelfLoop,
)

MAX_GENERATION_ATTEMPTS = 100
DENSE_THRESHOLD = 4096
DEFAULT_WALK_MULTIPLIER = 4.0


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    degrees: tuple[int, ...]

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(u, v)`` pairs with ``u < v``, sorted."""
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    @property
    def num_edges(self) -> int:
        return sum(self.degrees) // 2


@dataclass(frozen=True)
class TransitionModel:
    """Per-node forwarding distribution of the walk.

    ``targets``/``cumulative`` are a flattened sampling table: node ``i`` owns
    the slice ``offsets[i]:offsets[i+1]`` whose first target is ``i`` itself,
    followed by its neighbours. ``cumulative`` holds ``i + cumsum(probs)`` so a
    single ``searchsorted`` over ``node + u`` routes a whole batch of tokens.
    """

    self_prob: np.ndarray
    neighbor_probs: tuple[np.ndarray, ...]
    alpha: float
    gap: float | None = None
    walk_length: int | None = None
    targets: np.ndarray = field(default=None, repr=False, compare=False)
    offsets: np.ndarray = field(default=None, repr=False, compare=False)
    cumulative: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.self_prob)

    def route(self, nodes: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Destinations for tokens at ``nodes`` given uniforms ``u`` in [0, 1)."""
        idx = np.searchsorted(self.cumulative, nodes + u, side="right")
        return self.targets[idx]


def _check_structure(n: int, adjacency: Sequence[Sequence[int]]) -> None:
    if n > 1 and any(len(a) == 0 for a in adjacency):
        raise DisconnectedGraph("graph has an isolated node")
    color = [-1] * n
    color[0] = 0
    queue = deque([0])
    seen = 1
    odd_cycle = False
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if color[v] < 0:
                color[v] = 1 - color[u]
                seen += 1
                queue.append(v)
            elif color[v] == color[u]:
                odd_cycle = True
    if seen != n:
        raise DisconnectedGraph(f"BFS from node 0 reached {seen} of {n} nodes")
    if not odd_cycle:
        raise BipartiteGraph("graph is bipartite (no odd cycle); the walk would be periodic")


def build_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Validate an edge list and return the corresponding :class:`Graph`.

    Raises
    ------
    InvalidNodeId, SelfLoop, DuplicateEdge, DisconnectedGraph, BipartiteGraph
    """
    if n < 1:
        raise InvalidNodeId(f"n must be positive, got {n}")
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidNodeId(f"edge ({u}, {v}) has an id outside [0, {n})")
        if u == v:
            raise SelfLoop(f"self-loop at node {u}")
        if v in neighbors[u]:
            raise DuplicateEdge(f"edge ({u}, {v}) listed more than once")
        neighbors[u].add(v)
        neighbors[v].add(u)
    adjacency = tuple(tuple(sorted(s)) for s in neighbors)
    _check_structure(n, adjacency)
    return Graph(n=n, adjacency=adjacency, degrees=tuple(len(a) for a in adjacency))


def generate_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """Sample G(n, p), resampling until the draw is connected and non-bipartite."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        gen = _rng.stream(seed, _rng.GRAPH, 0, attempt)
        keep = gen.random(len(iu)) < p
        try:
            return build_graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))
        except (DisconnectedGraph, BipartiteGraph):
            continue
    raise GenerationFailed(
        f"G({n}, {p}) gave no connected non-bipartite sample in {MAX_GENERATION_ATTEMPTS} attempts"
    )


def _pair_stubs(n: int, d: int, gen: np.random.Generator) -> set[tuple[int, int]] | None:
    # Pair stubs at random, keep pairs that form new simple edges and re-pair
    # the leftovers. Returns None when the leftovers can no longer be paired.
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d)
    while len(stubs):
        gen.shuffle(stubs)
        leftover: dict[int, int] = defaultdict(int)
        for a, b in zip(stubs[0::2].tolist(), stubs[1::2].tolist()):
            if a > b:
                a, b = b, a
            if a != b and (a, b) not in edges:
                edges.add((a, b))
            else:
                leftover[a] += 1
                leftover[b] += 1
        if not leftover:
            break
        nodes = list(leftover)
        if not any(
            u != v and (min(u, v), max(u, v)) not in edges for u in nodes for v in nodes
        ):
            return None
        stubs = np.repeat(np.array(nodes), [leftover[u] for u in nodes])
    return edges


def generate_random_regular(n: int, d: int, seed: int) -> Graph:
    """Sample a connected, non-bipartite ``d``-regular graph on ``n`` nodes."""
    if (n * d) % 2:
        raise InvalidDegree(f"n*d must be even, got n={n}, d={d}")
    if d < 3 or d >= n:
        raise InvalidDegree(f"need 3 <= d < n, got n={n}, d={d}")
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        gen = _rng.stream(seed, _rng.GRAPH, 1, attempt)
        edges = _pair_stubs(n, d, gen)
        if edges is None:
            continue
        try:
            return build_graph(n, sorted(edges))
        except (DisconnectedGraph, BipartiteGraph):
            continue
    raise GenerationFailed(
        f"no connected non-bipartite {d}-regular graph on {n} nodes in "
        f"{MAX_GENERATION_ATTEMPTS} attempts"
    )


def mh_transition(g: Graph, alpha: float | None = None) -> TransitionModel:
    """Metropolis-Hastings forwarding probabilities for ``g``.

    ``gap`` and ``walk_length`` are left unset; see :func:`mixing_model`.
    """
    inv = [1.0 / d for d in g.degrees]
    self_prob = np.empty(g.n)
    neighbor_probs = []
    targets, cumulative, offsets = [], [], [0]
    for i, nbrs in enumerate(g.adjacency):
        probs = np.array([min(inv[i], inv[k]) for k in nbrs])
        # clamp: the neighbour sum can round to just above 1
        self_prob[i] = max(0.0, 1.0 - probs.sum())
        probs.setflags(write=False)
        neighbor_probs.append(probs)
        c = np.cumsum(np.concatenate(([self_prob[i]], probs)))
        c[-1] = 1.0
        cumulative.append(i + c)
        targets.append(np.concatenate(([i], nbrs)).astype(np.int64))
        offsets.append(offsets[-1] + len(nbrs) + 1)
    self_prob.setflags(write=False)
    if alpha is None:
        alpha = 1.0 / g.n**3
    return TransitionModel(
        self_prob=self_prob,
        neighbor_probs=tuple(neighbor_probs),
        alpha=float(alpha),
        targets=np.concatenate(targets),
        offsets=np.array(offsets),
        cumulative=np.concatenate(cumulative),
    )


def transition_matrix(tm: TransitionModel, g: Graph, sparse: bool = False):
    """Materialize the transition matrix, dense by default."""
    rows = np.repeat(np.arange(g.n), g.degrees)
    cols = np.fromiter((k for a in g.adjacency for k in a), dtype=np.int64, count=len(rows))
    vals = np.concatenate(tm.neighbor_probs) if g.n else np.empty(0)
    diag = np.arange(g.n)
    rows = np.concatenate((rows, diag))
    cols = np.concatenate((cols, diag))
    vals = np.concatenate((vals, tm.self_prob))
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    return mat if sparse else mat.toarray()


def spectral_gap(
    tm: TransitionModel,
    g: Graph,
    tol: float = 1e-9,
    max_iter: int = 10**6,
    dense_threshold: int = DENSE_THRESHOLD,
) -> float:
    """One minus the second-largest eigenvalue modulus of the walk matrix.

    Power iteration runs on the squared matrix, whose spectrum is the squared
    moduli, after projecting out the uniform top eigenvector. Iteration stops
    once the eigen-residual drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if g.n > dense_threshold:
        raise ValueError(
            f"n={g.n} exceeds the dense threshold {dense_threshold}; supply a gap estimate"
        )
    if g.n == 1:
        return 1.0
    psi = transition_matrix(tm, g, sparse=True)
    x = _rng.stream(0, _rng.SPECTRAL, g.n).standard_normal(g.n)
    x -= x.mean()
    x /= np.linalg.norm(x)
    for _ in range(max_iter):
        z = psi @ (psi @ x)
        z -= z.mean()
        rho = float(x @ z)
        resid = np.linalg.norm(z - rho * x)
        norm = np.linalg.norm(z)
        if resid < tol or norm == 0.0:
            lam2 = math.sqrt(max(rho, 0.0))
            return min(1.0, max(0.0, 1.0 - lam2))
        x = z / norm
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations")


def walk_length(n: int, gap: float, alpha: float | None = None) -> int:
    """Steps needed to get within ``alpha`` of uniform: ``ceil(ln(2n/alpha) / gap)``."""
    if not 0.0 < gap <= 1.0:
        raise ValueError(f"gap must lie in (0, 1], got {gap}")
    if alpha is None:
        alpha = 1.0 / n**3
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return max(1, math.ceil(math.log(2 * n / alpha) / gap))


def mixing_model(
    g: Graph,
    alpha: float | None = None,
    gap: float | None = None,
    dense_threshold: int = DENSE_THRESHOLD,
    walk_multiplier: float = DEFAULT_WALK_MULTIPLIER,
) -> TransitionModel:
    """Transition model with the spectral gap and walk length filled in.

    Above ``dense_threshold`` nodes, and without a user-supplied ``gap``, the
    walk length falls back to ``walk_multiplier * ceil(log2 n)``.
    """
    tm = mh_transition(g, alpha)
    if gap is None and g.n <= dense_threshold:
        gap = spectral_gap(tm, g, dense_threshold=dense_threshold)
    if gap is not None:
        length = walk_length(g.n, gap, tm.alpha)
    else:
        length = max(1, math.ceil(walk_multiplier * math.ceil(math.log2(g.n))))
    return replace(tm, gap=gap, walk_length=length)


def read_edge_list(path: str | PathLike, n: int | None = None) -> Graph:
    """Load a graph from a ``u v`` per line text file; ``#`` starts a comment.

    A ``# n = <int>`` header sets the node count; otherwise it is one more
    than the largest id seen.
    """
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body, _, comment = line.partition("#")
            if n is None and comment.replace(" ", "").startswith("n="):
                n = int(comment.replace(" ", "")[2:])
            parts = body.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {body.strip()!r}")
            edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return build_graph(n, edges)


def write_edge_list(g: Graph, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"# n = {g.n}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")
