"""Options and their per-round Bernoulli quality signals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng


@dataclass(frozen=True)
class OptionSet:
    etas: tuple[float, ...]

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        object.__setattr__(self, "etas", etas)
        if not etas:
            raise ValueError("need at least one option")
        if any(not 0.0 <= e <= 1.0 for e in etas):
            raise ValueError(f"quality parameters must lie in [0, 1], got {etas}")
        if len(etas) > 1 and not (
            etas[0] > etas[1] and all(a >= b for a, b in zip(etas[1:], etas[2:]))
        ):
            warnings.warn(
                "etas are not in strictly-best-first order; regret is still measured "
                "against max(etas)",
                stacklevel=2,
            )

    @property
    def m(self) -> int:
        return len(self.etas)

    @property
    def best(self) -> float:
        return max(self.etas)

    @classmethod
    def linear(cls, m: int, hi: float = 0.9, lo: float = 0.5) -> "OptionSet":
        """Default experiment options: etas evenly spaced from ``hi`` down to ``lo``."""
        if m == 1:
            return cls((hi,))
        return cls(tuple(np.linspace(hi, lo, m).tolist()))


@dataclass(frozen=True)
class QualityDraw:
    round: int
    phi: np.ndarray  # (m,) shared by all agents, or (n, m) in per-agent mode


def draw_qualities(opts: OptionSet, round: int, seed: int, n_agents: int | None = None) -> QualityDraw:
    """Quality signals for ``round``, a pure function of ``(seed, round)``.

    With ``n_agents`` set, every agent gets its own independent row of signals
    instead of the shared draw.
    """
    if round < 1:
        raise ValueError(f"rounds are numbered from 1, got {round}")
    gen = _rng.stream(seed, _rng.QUALITY, round)
    etas = np.asarray(opts.etas)
    shape = etas.shape if n_agents is None else (n_agents, opts.m)
    phi = (gen.random(shape) < etas).astype(np.uint8)
    phi.setflags(write=False)
    return QualityDraw(round=round, phi=phi)


def quality_history(opts: OptionSet, rounds: int, seed: int) -> np.ndarray:
    """Shared draws for rounds ``1..rounds`` stacked into an ``(R, m)`` array."""
    if rounds == 0:
        return np.zeros((0, opts.m), dtype=np.uint8)
    return np.stack([draw_qualities(opts, r, seed).phi for r in range(1, rounds + 1)])


def empirical_rates(draws: Sequence[QualityDraw]) -> np.ndarray:
    return np.mean([d.phi for d in draws], axis=0)
