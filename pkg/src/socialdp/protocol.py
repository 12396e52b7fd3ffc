"""Per-agent stages of one learning round.

Stage 1 randomizes each adopter's one-hot adoption vector bit by bit
(randomized response). Stage 3 debiases the perturbed vectors an agent
received into a popularity estimate and draws a candidate option from it,
mixed with uniform exploration. Stage 4 adopts the candidate with a bias
toward options whose current quality signal is good. Stage 2 lives in
:mod:`socialdp.dissemination`.

Each stage has a single-agent function matching the protocol description and
a ``*_all`` batch counterpart that processes every agent at once. The runner
uses the batch forms; the single-agent forms are thin wrappers over them so
both follow one code path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptySampleSet


@dataclass(frozen=True)
class ProtocolParams:
    """Privacy budget ``epsilon`` (``math.inf`` disables perturbation),
    adoption bias ``beta`` and exploration probability ``mu``."""

    epsilon: float
    beta: float
    mu: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.5 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (1/2, 1], got {self.beta}")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        for msg in self.condition_warnings():
            warnings.warn(msg, stacklevel=3)

    @property
    def delta(self) -> float:
        """``ln(beta / (1 - beta))``; infinite for ``beta == 1``."""
        if self.beta == 1.0:
            return math.inf
        return math.log(self.beta / (1.0 - self.beta))

    @property
    def private(self) -> bool:
        return math.isfinite(self.epsilon)

    @property
    def flip_prob(self) -> float:
        if not self.private:
            return 0.0
        return 1.0 / (math.exp(self.epsilon / 2) + 1.0)

    @property
    def debias_scale(self) -> float:
        """Slope of the debiasing map, ``(e^{eps/2}+1)/(e^{eps/2}-1)``."""
        if not self.private:
            return 1.0
        e = math.exp(self.epsilon / 2)
        return (e + 1.0) / (e - 1.0)

    @property
    def debias_offset(self) -> float:
        if not self.private:
            return 0.0
        return 1.0 / math.expm1(self.epsilon / 2)

    def condition_warnings(self) -> list[str]:
        out = []
        if 6 * self.mu > self.delta**2:
            out.append(f"6*mu = {6 * self.mu:.4g} exceeds delta^2 = {self.delta**2:.4g}")
        return out


@dataclass(frozen=True)
class PopularityEstimate:
    lam: np.ndarray
    q_tilde: np.ndarray
    sample_count: int
    q_hat: np.ndarray | None = None


def check_adoption_vector(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    if x.ndim != 1 or np.any(x > 1) or x.sum() > 1:
        raise ValueError(f"adoption vectors are binary with at most one set bit, got {x}")
    return x


def one_hot(j: int, m: int) -> np.ndarray:
    x = np.zeros(m, dtype=np.uint8)
    x[j] = 1
    return x


# --- Stage 1 ---------------------------------------------------------------


def perturb_all(adoptions: np.ndarray, params: ProtocolParams, rng: np.random.Generator):
    """Randomized response for every adopter.

    ``adoptions`` is an ``(n, m)`` 0/1 array. Returns ``(active, perturbed)``
    where ``active`` marks rows with a set bit and ``perturbed`` holds one
    randomized row per active agent, in agent order. Non-adopters draw nothing.
    """
    adoptions = np.asarray(adoptions, dtype=np.uint8)
    active = adoptions.any(axis=1)
    rows = adoptions[active]
    if params.private:
        flips = rng.random(rows.shape) < params.flip_prob
        rows = rows ^ flips.astype(np.uint8)
    else:
        rows = rows.copy()
    return active, rows


def perturb(x: np.ndarray, params: ProtocolParams, rng: np.random.Generator) -> np.ndarray | None:
    """Perturb one adoption vector; ``None`` for an agent that adopted nothing."""
    x = check_adoption_vector(x)
    active, rows = perturb_all(x[None, :], params, rng)
    return rows[0] if active[0] else None


# --- Stage 3 ---------------------------------------------------------------


def debias(lam: np.ndarray, params: ProtocolParams) -> np.ndarray:
    """Unnormalized popularity from mean perturbed bits, clamped at zero."""
    return np.maximum(params.debias_scale * np.asarray(lam, dtype=float) - params.debias_offset, 0.0)


def estimate_popularity(samples: np.ndarray, params: ProtocolParams) -> PopularityEstimate:
    samples = np.atleast_2d(np.asarray(samples))
    if samples.shape[0] == 0:
        raise EmptySampleSet("no perturbed vectors were sampled; use the uniform fallback")
    lam = samples.mean(axis=0)
    return PopularityEstimate(lam=lam, q_tilde=debias(lam, params), sample_count=samples.shape[0])


def normalize_rows(q_tilde: np.ndarray) -> np.ndarray:
    """Row-normalize; rows summing to zero become uniform."""
    q_tilde = np.atleast_2d(q_tilde)
    m = q_tilde.shape[1]
    total = q_tilde.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        q_hat = np.where(total > 0, q_tilde / total, 1.0 / m)
    return q_hat


def normalize(est: PopularityEstimate) -> PopularityEstimate:
    return replace(est, q_hat=normalize_rows(est.q_tilde)[0])


def estimate_all(counts: np.ndarray, v: np.ndarray, params: ProtocolParams):
    """Batch estimate from per-agent bit counts.

    ``counts[i, j]`` is how many of agent ``i``'s sampled vectors have bit
    ``j`` set and ``v[i]`` how many vectors it sampled. Returns ``(q_tilde,
    q_hat)``; agents with ``v == 0`` get zero ``q_tilde`` and a uniform
    ``q_hat``.
    """
    counts = np.asarray(counts, dtype=float)
    v = np.asarray(v)
    has = v > 0
    lam = np.zeros_like(counts)
    lam[has] = counts[has] / v[has, None]
    q_tilde = np.where(has[:, None], debias(lam, params), 0.0)
    return q_tilde, normalize_rows(q_tilde)


def sample_options(q_hat: np.ndarray, params: ProtocolParams, rng: np.random.Generator) -> np.ndarray:
    """One candidate per row of ``q_hat``: uniform w.p. ``mu``, else from the row."""
    q_hat = np.atleast_2d(q_hat)
    n, m = q_hat.shape
    explore = rng.random(n) < params.mu
    uniform_pick = rng.integers(m, size=n)
    u = rng.random(n)
    cum = np.cumsum(q_hat, axis=1)
    picked = np.minimum((cum <= u[:, None]).sum(axis=1), m - 1)
    return np.where(explore, uniform_pick, picked)


def sample_option(
    est: PopularityEstimate | None,
    params: ProtocolParams,
    rng: np.random.Generator,
    m: int | None = None,
) -> int:
    """Draw a candidate option; an absent estimate means a uniform draw."""
    if est is None:
        if m is None:
            raise ValueError("m is required when no estimate is available")
        q_hat = np.full(m, 1.0 / m)
    else:
        q_hat = est.q_hat if est.q_hat is not None else normalize(est).q_hat
    return int(sample_options(q_hat[None, :], params, rng)[0])


# --- Stage 4 ---------------------------------------------------------------


def adopt_all(
    choices: np.ndarray, phi: np.ndarray, params: ProtocolParams, rng: np.random.Generator
) -> np.ndarray:
    """Adoption decisions for all agents as an ``(n,)`` array of option ids, -1 for none.

    ``phi`` is either the shared ``(m,)`` signal or an ``(n, m)`` per-agent one.
    """
    choices = np.asarray(choices)
    phi = np.asarray(phi)
    if phi.ndim == 1:
        good = phi[choices]
    else:
        good = phi[np.arange(len(choices)), choices]
    p = np.where(good == 1, params.beta, 1.0 - params.beta)
    adopt = rng.random(len(choices)) < p
    return np.where(adopt, choices, -1)


def adopt_decision(j_star: int, phi, params: ProtocolParams, rng: np.random.Generator) -> np.ndarray:
    phi = np.asarray(getattr(phi, "phi", phi))
    m = phi.shape[-1]
    if not 0 <= j_star < m:
        raise ValueError(f"option {j_star} out of range [0, {m})")
    j = adopt_all(np.array([j_star]), phi, params, rng)[0]
    return one_hot(j, m) if j >= 0 else np.zeros(m, dtype=np.uint8)


def choices_to_vectors(choices: np.ndarray, m: int) -> np.ndarray:
    """``(n,)`` option ids (-1 for none) to ``(n, m)`` adoption vectors."""
    choices = np.asarray(choices)
    out = np.zeros((len(choices), m), dtype=np.uint8)
    on = choices >= 0
    out[np.flatnonzero(on), choices[on]] = 1
    return out


def round_robin(n: int, m: int) -> np.ndarray:
    """Initial adoptions: agent ``i`` adopts option ``i mod m``."""
    return np.arange(n) % m
