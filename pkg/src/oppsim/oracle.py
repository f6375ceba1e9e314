"""Independent verification oracles.

Everything in this module recomputes quantities the closed-form layer also
produces, but by brute force: exhaustive subset enumeration for single-hop
election, absorbing-state expectations for short multi-hop paths, and
per-bit Monte Carlo for frame reception.  Nothing here imports the
closed-form code or shares arithmetic helpers with it; agreement between
the two routes is what the verification suite checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .model import ForwarderSet, FrameParams, NodeId

MAX_ENUMERATION_SIZE = 20
MAX_PATH_DEPTH = 3
MAX_FORWARDERS_PER_HOP = 2
MAX_STATE_SPACE = 64

_MC_CHUNK = 65536


@dataclass(frozen=True)
class SingleHopExact:
    """Exact single-hop election quantities.

    ``expected_cost``
        expected total cost of delivering through the set, i.e. expected
        transmissions until some member receives plus the elected member's
        remaining cost; ``inf`` when no member can ever receive.
    ``overhead``
        unconditioned expectation of the elected member's remaining cost
        over a single transmission (zero contribution when nobody hears).
    """

    expected_cost: float
    overhead: float


def exact_single_hop(forwarder_set: ForwarderSet) -> SingleHopExact:
    """Enumerate all 2^N reception outcomes of one forwarder set.

    The elected member of a reception subset is the one earliest in the
    canonical order (lowest remaining cost, ties by node id).  Expected
    cost follows from the geometric number of attempts until a non-empty
    subset occurs, plus the elected member's remaining cost conditioned on
    non-empty reception.
    """

    entries = forwarder_set.entries
    n = len(entries)
    if n == 0:
        raise ValueError("empty forwarder set")
    if n > MAX_ENUMERATION_SIZE:
        raise ValueError(
            f"forwarder set of size {n} exceeds enumeration bound {MAX_ENUMERATION_SIZE}"
        )

    p_none = 0.0
    elected_cost_mass = 0.0
    for bits in product((False, True), repeat=n):
        prob = 1.0
        for hit, entry in zip(bits, entries):
            prob *= entry.p_link if hit else (1.0 - entry.p_link)
        if prob == 0.0:
            continue
        if not any(bits):
            p_none += prob
            continue
        winner = next(i for i, hit in enumerate(bits) if hit)
        elected_cost_mass += prob * entries[winner].remaining_cost

    p_some = 1.0 - p_none
    if p_some <= 0.0:
        return SingleHopExact(expected_cost=float("inf"), overhead=0.0)
    expected_cost = 1.0 / p_some + elected_cost_mass / p_some
    return SingleHopExact(expected_cost=expected_cost, overhead=elected_cost_mass)


@dataclass(frozen=True)
class ChainSpec:
    """A small delivery graph for the absorbing-state oracle.

    ``links`` maps each relaying node to the candidates it can hand the
    packet to, as ``(candidate, delivery_probability)`` pairs.  The walk
    starts at ``source`` and is absorbed at ``gateway``.
    """

    source: NodeId
    gateway: NodeId
    links: Mapping[NodeId, tuple[tuple[NodeId, float], ...]]

    def __post_init__(self) -> None:
        links = {node: tuple(cands) for node, cands in dict(self.links).items()}
        object.__setattr__(self, "links", links)


def exact_two_hop(chain: ChainSpec) -> float:
    """Exact expected end-to-end cost of a short opportunistic path.

    Treats delivery as an absorbing walk: at each holder the transmission
    repeats until at least one candidate receives, then the packet moves to
    the receiving candidate with the lowest onward expectation (ties by node
    id).  Intended for cross-checking path-cost composition; bounded to
    paths of at most MAX_PATH_DEPTH hops with at most
    MAX_FORWARDERS_PER_HOP candidates per hop.
    """

    states = set(chain.links) | {chain.gateway}
    for cands in chain.links.values():
        states.update(c for c, _ in cands)
    if len(states) > MAX_STATE_SPACE:
        raise ValueError(f"state space of {len(states)} exceeds configured bound {MAX_STATE_SPACE}")
    for node, cands in chain.links.items():
        if len(cands) > MAX_FORWARDERS_PER_HOP:
            raise ValueError(
                f"node {node!r} has {len(cands)} forwarders, bound is {MAX_FORWARDERS_PER_HOP}"
            )

    expectations: dict[NodeId, float] = {chain.gateway: 0.0}

    def depth(node: NodeId, seen: frozenset[NodeId]) -> int:
        if node == chain.gateway:
            return 0
        if node in seen:
            raise ValueError(f"cycle through node {node!r}")
        cands = chain.links.get(node)
        if not cands:
            raise ValueError(f"node {node!r} has no forwarders and is not the gateway")
        return 1 + max(depth(c, seen | {node}) for c, _ in cands)

    if depth(chain.source, frozenset()) > MAX_PATH_DEPTH:
        raise ValueError(f"path deeper than bound {MAX_PATH_DEPTH}")

    def expectation(node: NodeId) -> float:
        if node in expectations:
            return expectations[node]
        cands = chain.links[node]
        onward = sorted(((expectation(c), c, p) for c, p in cands), key=lambda t: (t[0], t[1]))
        p_none = 0.0
        continuation = 0.0
        n = len(onward)
        for bits in product((False, True), repeat=n):
            prob = 1.0
            for hit, (_, _, p) in zip(bits, onward):
                prob *= p if hit else (1.0 - p)
            if prob == 0.0:
                continue
            if not any(bits):
                p_none += prob
                continue
            winner = next(i for i, hit in enumerate(bits) if hit)
            continuation += prob * onward[winner][0]
        p_some = 1.0 - p_none
        if p_some <= 0.0:
            raise ValueError(f"node {node!r} can never progress")
        value = (1.0 + continuation) / p_some
        expectations[node] = value
        return value

    return expectation(chain.source)


@dataclass(frozen=True)
class FrameMissEstimates:
    """Monte Carlo estimates of the three frame-level miss factors."""

    preamble_miss: float
    data_miss: float
    joint_miss: float
    trials: int


def bit_level_frame_oracle(
    p: float, frame: FrameParams, trials: int, seed: int
) -> FrameMissEstimates:
    """Simulate individual bit errors for every micro-frame and the data
    frame of ``trials`` independent transmissions.

    A micro-frame decodes iff none of its bits errored; the preamble is
    missed iff every micro-frame failed; the data frame is missed iff any
    of its bits errored.  Estimates come back as plain frequencies.
    """

    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"bit error probability must be in [0, 1], got {p!r}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")

    rng = np.random.default_rng(seed)
    m = frame.micro_frame_bits
    r_m = frame.preamble_frames
    d = frame.data_frame_bits

    preamble_missed = 0
    data_missed = 0
    joint_missed = 0
    remaining = trials
    while remaining > 0:
        chunk = min(remaining, _MC_CHUNK)
        all_micro_failed = np.ones(chunk, dtype=bool)
        for _ in range(r_m):
            frame_bits_errored = rng.random((chunk, m)) < p
            all_micro_failed &= frame_bits_errored.any(axis=1)
        data_failed = (rng.random((chunk, d)) < p).any(axis=1)
        preamble_missed += int(all_micro_failed.sum())
        data_missed += int(data_failed.sum())
        joint_missed += int((all_micro_failed & data_failed).sum())
        remaining -= chunk

    return FrameMissEstimates(
        preamble_miss=preamble_missed / trials,
        data_miss=data_missed / trials,
        joint_miss=joint_missed / trials,
        trials=trials,
    )
