"""Per-round popularity, regret accounting, convergence and CSV export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import NamedTuple, Sequence

import numpy as np


class Popularity(NamedTuple):
    q: np.ndarray
    counts: np.ndarray
    total: int
    empty: bool


def popularity(adoptions: np.ndarray, m: int | None = None) -> Popularity:
    """Fraction of adopters on each option.

    ``adoptions`` is either ``(n, m)`` adoption vectors or ``(n,)`` option ids
    with -1 for no adoption (then ``m`` is required). When nobody adopts, ``q``
    is all zeros and ``empty`` is set.
    """
    adoptions = np.asarray(adoptions)
    if adoptions.ndim == 1:
        if m is None:
            raise ValueError("m is required for option-id input")
        counts = np.bincount(adoptions[adoptions >= 0], minlength=m)
    else:
        counts = adoptions.sum(axis=0).astype(np.int64)
    total = int(counts.sum())
    if total == 0:
        return Popularity(np.zeros(len(counts)), counts, 0, True)
    return Popularity(counts / total, counts, total, False)


@dataclass
class RoundMetrics:
    round: int
    q: np.ndarray
    d_j: np.ndarray
    d_total: int
    s_j: np.ndarray
    phi: np.ndarray
    slots: int
    messages: int
    max_edge_messages: int
    regret_increment: float = math.nan
    truncated: bool = False
    empty: bool = False


@dataclass
class RunTrace:
    """Rounds of one run plus the running regret.

    ``config`` is a plain dict snapshot; ``eta1`` the best option's quality.
    """

    config: dict
    eta1: float
    epsilon: float
    q0: np.ndarray
    rounds: list[RoundMetrics] = field(default_factory=list)
    seed: int | None = None

    @property
    def increments(self) -> np.ndarray:
        return np.array([r.regret_increment for r in self.rounds])

    @property
    def running_regret(self) -> np.ndarray:
        inc = self.increments
        if len(inc) == 0:
            return inc
        return self.eta1 - np.cumsum(inc) / np.arange(1, len(inc) + 1)

    @property
    def round_regret(self) -> np.ndarray:
        """Per-round regret ``eta1 - sum_j Q_j^{r-1} phi_j^r``."""
        return self.eta1 - self.increments

    @property
    def total_privacy_loss(self) -> float:
        return len(self.rounds) * self.epsilon

    def q_history(self) -> np.ndarray:
        """``(R + 1, m)`` popularities including the initial round 0."""
        return np.vstack([self.q0] + [r.q for r in self.rounds])


def regret_increment(q_prev: np.ndarray, phi: np.ndarray) -> float:
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        # per-agent signals: use the population-average signal
        phi = phi.mean(axis=0)
    return float(np.dot(q_prev, phi))


def regret_update(trace: RunTrace, metrics: RoundMetrics, q_prev: np.ndarray, phi: np.ndarray) -> RunTrace:
    """Score ``metrics`` against the previous round's popularity and append it."""
    metrics.regret_increment = regret_increment(q_prev, phi)
    trace.rounds.append(metrics)
    return trace


def convergence_check(series, window: int, tol: float) -> tuple[bool, float]:
    """Whether the last ``window`` values vary by less than ``tol``.

    ``series`` is a running-regret sequence or a :class:`RunTrace`. Returns the
    flag and the mean over the window (``nan`` if the series is too short).
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    if isinstance(series, RunTrace):
        series = series.running_regret
    series = np.asarray(series, dtype=float)
    if len(series) < window:
        return False, math.nan
    tail = series[-window:]
    return bool(tail.max() - tail.min() < tol), float(tail.mean())


def trace_header(m: int) -> list[str]:
    return ["round", *(f"q_{j + 1}" for j in range(m)), "d_total", "slots", "messages", "running_regret"]


def write_trace_csv(trace: RunTrace, path: str | PathLike) -> None:
    m = len(trace.q0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(m))
        for rm, reg in zip(trace.rounds, trace.running_regret):
            w.writerow([rm.round, *map(repr, rm.q.tolist()), rm.d_total, rm.slots, rm.messages, repr(float(reg))])


def read_trace_csv(path: str | PathLike) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def aggregate(traces: Sequence[RunTrace]) -> dict[str, np.ndarray]:
    """Across-seed mean and std per round of running regret and popularities."""
    reg = np.array([t.running_regret for t in traces])
    q = np.array([[r.q for r in t.rounds] for t in traces])
    return {
        "running_regret_mean": reg.mean(axis=0),
        "running_regret_std": reg.std(axis=0),
        "q_mean": q.mean(axis=0) if q.size else np.zeros((0, 0)),
        "q_std": q.std(axis=0) if q.size else np.zeros((0, 0)),
    }


def write_aggregate_csv(traces: Sequence[RunTrace], path: str | PathLike) -> None:
    m = len(traces[0].q0)
    agg = aggregate(traces)
    header = ["round", "running_regret_mean", "running_regret_std"]
    header += [f"q_{j + 1}_mean" for j in range(m)] + [f"q_{j + 1}_std" for j in range(m)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(agg["running_regret_mean"])):
            w.writerow(
                [k + 1, repr(float(agg["running_regret_mean"][k])), repr(float(agg["running_regret_std"][k]))]
                + [repr(float(x)) for x in agg["q_mean"][k]]
                + [repr(float(x)) for x in agg["q_std"][k]]
            )
