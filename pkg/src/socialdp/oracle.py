"""Brute-force reference computations used to check the simulator.

Nothing here imports the modules it is meant to check: the walk matrix is
rebuilt from the graph's adjacency, eigenvalues come from a hand-rolled
Jacobi solver, and randomized response probabilities are recomputed from the
privacy budget.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import ConvergenceFailure

MAX_DENSE_NODES = 200


def dense_psi(adjacency) -> np.ndarray:
    """Walk matrix built entry by entry from an adjacency list."""
    n = len(adjacency)
    psi = np.zeros((n, n))
    for i, nbrs in enumerate(adjacency):
        for k in nbrs:
            psi[i, k] = min(1.0 / len(adjacency[i]), 1.0 / len(adjacency[k]))
        psi[i, i] = 1.0 - psi[i].sum()
    return psi


def exact_walk_distribution(psi: np.ndarray, origin: int, t: int) -> np.ndarray:
    """Distribution of a walk from ``origin`` after ``t`` steps."""
    x = np.zeros(psi.shape[0])
    x[origin] = 1.0
    for _ in range(t):
        x = x @ psi
    return x


def walk_distributions(psi: np.ndarray, t: int) -> np.ndarray:
    """All ``t``-step distributions at once: row ``i`` starts at node ``i``."""
    out = np.eye(psi.shape[0])
    for _ in range(t):
        out = out @ psi
    return out


def jacobi_eigenvalues(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if not np.allclose(a, a.T, atol=1e-14):
        raise ValueError("Jacobi rotations need a symmetric matrix")
    scale = max(1.0, np.abs(a).max())
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < tol * scale:
            return np.sort(np.diag(a))[::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps")


def exact_spectral_values(psi: np.ndarray) -> np.ndarray:
    """Eigenvalue moduli, largest first."""
    if psi.shape[0] > MAX_DENSE_NODES:
        raise ValueError(f"oracle limited to n <= {MAX_DENSE_NODES}")
    return np.sort(np.abs(jacobi_eigenvalues(psi)))[::-1]


def exact_gap(psi: np.ndarray) -> float:
    mods = exact_spectral_values(psi)
    return 1.0 - mods[1] if len(mods) > 1 else 1.0


def debias_expectation(q_true: float, epsilon: float) -> float:
    """Expected mean perturbed bit when a fraction ``q_true`` of inputs are ones."""
    e = math.exp(epsilon / 2)
    return (q_true * (e - 1.0) + 1.0) / (e + 1.0)


def invert_expectation(lam: float, epsilon: float) -> float:
    """Inverse of :func:`debias_expectation` (no clamping)."""
    e = math.exp(epsilon / 2)
    return ((e + 1.0) * lam - 1.0) / (e - 1.0)


def randomized_response(bits: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Independent forward sampler: keep each bit w.p. ``e^{eps/2}/(e^{eps/2}+1)``."""
    keep = math.exp(epsilon / 2) / (math.exp(epsilon / 2) + 1.0)
    bits = np.asarray(bits, dtype=np.uint8)
    kept = rng.random(bits.shape) < keep
    return np.where(kept, bits, 1 - bits).astype(np.uint8)


def output_probability(x: tuple[int, ...], y: tuple[int, ...], epsilon: float) -> float:
    """P[perturbing ``x`` yields ``y``] under per-bit randomized response."""
    e = math.exp(epsilon / 2)
    keep, flip = e / (e + 1.0), 1.0 / (e + 1.0)
    p = 1.0
    for a, b in zip(x, y):
        p *= keep if a == b else flip
    return p


def ldp_ratio_max(m: int, epsilon: float, include_zero: bool = False) -> float:
    """Largest likelihood ratio over input pairs and all ``2**m`` outputs.

    Inputs are the one-hot vectors (only adopters perturb); ``include_zero``
    adds the all-zero vector for a stricter check.
    """
    if m > 4:
        raise ValueError("exhaustive check limited to m <= 4")
    inputs = [tuple(int(k == j) for k in range(m)) for j in range(m)]
    if include_zero:
        inputs.append((0,) * m)
    best = 0.0
    for y in itertools.product((0, 1), repeat=m):
        for x1 in inputs:
            for x2 in inputs:
                best = max(best, output_probability(x1, y, epsilon) / output_probability(x2, y, epsilon))
    return best


def mwu_reference(phi_history: np.ndarray, beta: float, mu: float) -> np.ndarray:
    """Multiplicative-weights dynamics driven by the quality signals.

    Returns ``(R + 1, m)`` distributions with row 0 uniform. Weights are
    rescaled every round to avoid overflow, which leaves the distribution
    unchanged.
    """
    phi_history = np.atleast_2d(np.asarray(phi_history, dtype=float))
    m = phi_history.shape[1]
    w = np.ones(m)
    out = [w / w.sum()]
    for phi in phi_history:
        w = ((1.0 - mu) * w + mu / m * w.sum()) * beta**phi * (1.0 - beta) ** (1.0 - phi)
        w = w / w.sum()
        out.append(w.copy())
    return np.array(out)
