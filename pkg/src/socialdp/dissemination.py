"""Slot-level simulation of the random-walk dissemination stage.

Every adopter puts ``cap`` copies of its perturbed vector into its own FIFO
queue, each as a token with ``walk_len`` hops left. In each slot every agent
pops up to ``cap`` tokens, decrements their hop counters and forwards each to
itself or a neighbour according to the walk. A token whose counter reaches
zero is *sampled* by the agent it lands on. Arrivals are enqueued only after
all agents have popped, so a slot behaves as one synchronous step.

Tokens are kept in flat arrays in global enqueue order; a stable sort on the
holder id then yields each agent's queue in FIFO order. Payloads are the
perturbed bits packed into one integer; tokens carry no origin id.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import TransitionModel

MAX_OPTIONS = 62


def pack_bits(bits: np.ndarray) -> np.ndarray:
    bits = np.atleast_2d(np.asarray(bits, dtype=np.int64))
    return bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))


def unpack_bits(packed: np.ndarray, m: int) -> np.ndarray:
    packed = np.asarray(packed, dtype=np.int64)
    return ((packed[:, None] >> np.arange(m, dtype=np.int64)) & 1).astype(np.uint8)


@dataclass(frozen=True)
class Token:
    payload: np.ndarray
    remaining_hops: int

    @property
    def feasible(self) -> bool:
        return self.remaining_hops > 0


@dataclass(frozen=True)
class DisseminationParams:
    """Walk multiplier ``h``, function value ``g_of_n`` and walk length.

    ``cap`` is both the number of walks each adopter launches and the number of
    tokens an agent may forward per slot.
    """

    h: float
    g_of_n: float
    walk_len: int
    sigma: float = 11.0
    slot_cap: int | None = None

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError(f"h * g(N) = {self.h * self.g_of_n:.4g} gives a cap below 1")
        if self.walk_len < 1:
            raise ValueError("walk_len must be at least 1")
        if self.sigma < 11:
            warnings.warn(f"sigma = {self.sigma} is below 11", stacklevel=3)

    @property
    def cap(self) -> int:
        return int(math.floor(self.h * self.g_of_n + 1e-9))

    @staticmethod
    def theoretical_h(sigma: float, beta: float) -> float:
        return 16.0 * sigma / (1.0 - beta)


@dataclass
class AgentMailbox:
    queue: list[Token]
    sampled: list[np.ndarray]

    @property
    def v_count(self) -> int:
        return len(self.sampled)


@dataclass
class DisseminationState:
    n: int
    m: int
    cap: int
    walk_len: int
    slot_cap: int | None
    # in-flight tokens, global FIFO order
    holder: np.ndarray
    hops: np.ndarray
    payload: np.ndarray
    launched: int
    slot: int = 0
    messages: int = 0
    max_edge_messages: int = 0
    sent: np.ndarray = field(default=None)
    dropped: int = 0
    truncated: bool = False
    # sampled tokens, in the order they terminated
    sampled_by: list = field(default_factory=list)
    sampled_payload: list = field(default_factory=list)

    @property
    def in_flight(self) -> int:
        return len(self.holder)

    def sampled_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.sampled_by:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.concatenate(self.sampled_by), np.concatenate(self.sampled_payload)

    def sample_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-agent bit counts ``(n, m)`` and sample sizes ``(n,)``."""
        who, payload = self.sampled_arrays()
        v = np.bincount(who, minlength=self.n)
        counts = np.zeros((self.n, self.m), dtype=np.int64)
        for j in range(self.m):
            counts[:, j] = np.bincount(who, weights=(payload >> j) & 1, minlength=self.n)
        return counts, v

    def mailbox(self, agent: int) -> AgentMailbox:
        mine = np.flatnonzero(self.holder == agent)
        queue = [
            Token(unpack_bits(self.payload[k : k + 1], self.m)[0], int(self.hops[k])) for k in mine
        ]
        who, payload = self.sampled_arrays()
        sampled = list(unpack_bits(payload[who == agent], self.m))
        return AgentMailbox(queue=queue, sampled=sampled)


def launch_round(
    perturbed, params: DisseminationParams, m: int | None = None
) -> DisseminationState:
    """Start a round from one optional perturbed vector per agent.

    ``perturbed`` is a sequence of length ``n`` holding an ``(m,)`` bit array
    for each adopter and ``None`` elsewhere.
    """
    n = len(perturbed)
    agents = [i for i, x in enumerate(perturbed) if x is not None]
    if m is None:
        m = len(perturbed[agents[0]]) if agents else 0
    bits = np.array([perturbed[i] for i in agents], dtype=np.uint8).reshape(len(agents), m)
    return launch_tokens(n, np.array(agents, dtype=np.int64), bits, params)


def launch_tokens(
    n: int, agents: np.ndarray, bits: np.ndarray, params: DisseminationParams
) -> DisseminationState:
    """Array form of :func:`launch_round`: ``bits[k]`` belongs to ``agents[k]``."""
    m = bits.shape[1]
    if m > MAX_OPTIONS:
        raise ValueError(f"at most {MAX_OPTIONS} options fit in a packed payload")
    cap = params.cap
    dtype = np.int16 if n < 2**15 else np.int32
    holder = np.repeat(np.asarray(agents, dtype=dtype), cap)
    payload = np.repeat(pack_bits(bits) if len(agents) else np.zeros(0, np.int64), cap)
    return DisseminationState(
        n=n,
        m=m,
        cap=cap,
        walk_len=params.walk_len,
        slot_cap=params.slot_cap,
        holder=holder,
        hops=np.full(len(holder), params.walk_len, dtype=np.int32),
        payload=payload,
        launched=len(holder),
        sent=np.zeros(n, dtype=np.int64),
    )


def step_slot(
    state: DisseminationState, tm: TransitionModel, rng: np.random.Generator
) -> DisseminationState:
    """Advance every queue by one synchronous slot (in place; returns ``state``)."""
    if state.in_flight == 0:
        return state
    order = np.argsort(state.holder, kind="stable")
    held = state.holder[order]
    first = np.searchsorted(held, held, side="left")
    popped = order[np.arange(len(held)) - first < state.cap]

    src = state.holder[popped].astype(np.int64)
    dst = tm.route(src, rng.random(len(popped)))
    hops = state.hops[popped] - 1
    payload = state.payload[popped]

    moved = src != dst
    n_msgs = int(moved.sum())
    if n_msgs:
        state.messages += n_msgs
        state.sent += np.bincount(src[moved], minlength=state.n)
        per_edge = np.unique(src[moved] * state.n + dst[moved], return_counts=True)[1]
        state.max_edge_messages = max(state.max_edge_messages, int(per_edge.max()))

    done = hops == 0
    if done.any():
        state.sampled_by.append(dst[done])
        state.sampled_payload.append(payload[done])

    stay = np.ones(state.in_flight, dtype=bool)
    stay[popped] = False
    live = ~done
    state.holder = np.concatenate((state.holder[stay], dst[live].astype(state.holder.dtype)))
    state.hops = np.concatenate((state.hops[stay], hops[live]))
    state.payload = np.concatenate((state.payload[stay], payload[live]))
    state.slot += 1
    return state


@dataclass(frozen=True)
class RoundResult:
    counts: np.ndarray  # (n, m) sampled bits set per option
    v: np.ndarray  # (n,) sampled vectors per agent
    slots: int
    messages: int
    max_edge_messages: int
    launched: int
    dropped: int
    truncated: bool

    @property
    def sampled(self) -> int:
        return int(self.v.sum())


def run_round(
    state: DisseminationState, tm: TransitionModel, rng: np.random.Generator
) -> RoundResult:
    """Step until every queue is empty, or until ``slot_cap`` slots have passed.

    On hitting the slot cap, surviving tokens are dropped and the round is
    flagged as truncated.
    """
    while state.in_flight:
        if state.slot_cap is not None and state.slot >= state.slot_cap:
            state.dropped += state.in_flight
            state.truncated = True
            state.holder = state.holder[:0]
            state.hops = state.hops[:0]
            state.payload = state.payload[:0]
            break
        step_slot(state, tm, rng)
    counts, v = state.sample_counts()
    return RoundResult(
        counts=counts,
        v=v,
        slots=state.slot,
        messages=state.messages,
        max_edge_messages=state.max_edge_messages,
        launched=state.launched,
        dropped=state.dropped,
        truncated=state.truncated,
    )
