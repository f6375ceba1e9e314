"""Closed-form reliability and cost model of receiver-based opportunistic
forwarding.

Conventions
-----------
* A transmission is a preamble of ``preamble_frames`` micro-frames followed
  by one data frame; bits error independently at the link's rate.
* ``link_success`` is the complement of the coordination-failure event: a
  candidate stays silent iff it hears at least one micro-frame *or* the
  data frame, so the failure needs both to be missed (times the channel
  switching probability).  ``reception_probability`` is the stricter
  decode-and-forward law (a wake-up micro-frame *and* the data frame) used
  by the packet-level simulator; keeping both exposes the difference
  instead of papering over it.
* ``expected_retransmissions`` excludes the first attempt: a per-attempt
  failure probability f costs f / (1 - f) extra transmissions.

Floating-point policy: probabilities are computed in double precision and
``(1 - p) ** n`` switches to ``exp(n * log1p(-p))`` only in the
underflow-risk regime ``n * p < 1e-8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .model import (
    BitErrorRate,
    ForwarderEntry,
    ForwarderSet,
    FrameParams,
    NodeId,
    Topology,
)


class UnreachableForwarderSetError(ValueError):
    """Raised when no member of a forwarder set can ever receive."""


class DisconnectedNodeError(ValueError):
    """Raised when a node has no forwarder toward the gateway."""


def _ber_value(p: float | BitErrorRate) -> float:
    if isinstance(p, BitErrorRate):
        return p.p
    p = float(p)
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise ValueError(f"bit error probability must be in [0, 1], got {p!r}")
    return p


def _probability(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


def _survival_power(p: float, n: int) -> float:
    """(1 - p) ** n under the module's floating-point policy."""
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    if n * p < 1e-8:
        return math.exp(n * math.log1p(-p))
    return (1.0 - p) ** n


def preamble_miss_probability(p: float | BitErrorRate, frame: FrameParams) -> float:
    """Probability that every micro-frame of the preamble fails to decode:
    [1 - (1 - p)^m]^r for m bits per micro-frame and r micro-frames."""
    p = _ber_value(p)
    single_miss = 1.0 - _survival_power(p, frame.micro_frame_bits)
    return single_miss**frame.preamble_frames


def data_miss_probability(p: float | BitErrorRate, frame: FrameParams) -> float:
    """Probability the data frame fails to decode: 1 - (1 - p)^d."""
    return 1.0 - _survival_power(_ber_value(p), frame.data_frame_bits)


def failure_probability(p: float | BitErrorRate, frame: FrameParams, p_sw: float) -> float:
    """Probability a listening candidate hears neither the preamble nor the
    data frame of a transmission switched onto the evaluated channel.

    The switching probability multiplies the joint miss, so p_sw = 0 makes
    the failure 0 by convention; callers needing "no transmission at all"
    semantics must gate on channel selection themselves.
    """
    p_sw = _probability("p_sw", p_sw)
    return p_sw * preamble_miss_probability(p, frame) * data_miss_probability(p, frame)


def link_success(p: float | BitErrorRate, frame: FrameParams, p_sw: float) -> float:
    """Complement of failure_probability: the candidate hears at least one
    micro-frame or the data frame."""
    return 1.0 - failure_probability(p, frame, p_sw)


def reception_probability(p: float | BitErrorRate, frame: FrameParams, p_sw: float) -> float:
    """Probability a listener can actually decode and forward the packet:
    the transmission is on the evaluated channel, at least one micro-frame
    wakes the listener, and the data frame decodes.

    Stricter than link_success; the packet-level simulator uses this law
    for reception while suppression follows link_success's complement.
    """
    p = _ber_value(p)
    p_sw = _probability("p_sw", p_sw)
    return (
        p_sw
        * (1.0 - preamble_miss_probability(p, frame))
        * _survival_power(p, frame.data_frame_bits)
    )


def _ordered_probs_costs(forwarder_set: ForwarderSet) -> tuple[list[float], list[float]]:
    if len(forwarder_set) == 0:
        raise ValueError("empty forwarder set")
    probs = [e.p_link for e in forwarder_set]
    costs = [e.remaining_cost for e in forwarder_set]
    return probs, costs


def total_path_cost(forwarder_set: ForwarderSet) -> float:
    """Expected total cost of delivering through a forwarder set.

    First term: expected transmissions until at least one member receives
    (geometric in the all-miss probability).  Second term: expected
    remaining cost of the elected member - the first receiver in canonical
    order - conditioned on somebody receiving.
    """
    probs, costs = _ordered_probs_costs(forwarder_set)
    all_miss = 1.0
    elected_mass = 0.0
    for p, y in zip(probs, costs):
        elected_mass += y * p * all_miss
        all_miss *= 1.0 - p
    p_some = 1.0 - all_miss
    if p_some <= 0.0:
        raise UnreachableForwarderSetError(
            "unreachable forwarder set: every link probability is 0"
        )
    return 1.0 / p_some + elected_mass / p_some


def coordination_overhead(forwarder_set: ForwarderSet) -> float:
    """Cost-weighted single-transmission election expectation: sum over
    members of p_b * Y_b * prod_(earlier r) (1 - p_r).

    Equals the expected remaining cost routed through whichever member is
    elected on one transmission, counting zero when nobody hears.  Grows
    with every added member; for N identical members it is
    Y * (1 - (1 - p)^N).
    """
    probs, costs = _ordered_probs_costs(forwarder_set)
    all_miss = 1.0
    acc = 0.0
    for p, y in zip(probs, costs):
        acc += p * y * all_miss
        all_miss *= 1.0 - p
    return acc


@dataclass(frozen=True)
class PathCostTable:
    """Per-node expected cost to reach the gateway.  The gateway entry is
    pinned at zero; every other entry is >= 1 (at least one transmission)."""

    gateway: NodeId
    costs: Mapping[NodeId, float]

    def __post_init__(self) -> None:
        costs = dict(self.costs)
        if self.gateway not in costs:
            raise ValueError("cost table must include the gateway")
        if costs[self.gateway] != 0.0:
            raise ValueError(f"gateway cost must be 0, got {costs[self.gateway]!r}")
        for node, y in costs.items():
            y = float(y)
            if not math.isfinite(y):
                raise ValueError(f"cost of node {node!r} is not finite")
            if node != self.gateway and y < 1.0:
                raise ValueError(f"cost of node {node!r} must be >= 1, got {y!r}")
            costs[node] = y
        object.__setattr__(self, "costs", costs)

    def __getitem__(self, node: NodeId) -> float:
        try:
            return self.costs[node]
        except KeyError:
            raise ValueError(f"unknown node id: {node!r}") from None

    def __contains__(self, node: NodeId) -> bool:
        return node in self.costs

    def items(self):
        return self.costs.items()


def forwarder_entries(
    topology: Topology, node: NodeId, costs: Mapping[NodeId, float]
) -> ForwarderSet:
    """Build a node's forwarder set: upstream neighbors (strictly smaller
    hop id) with link_success probabilities under the evaluated channel."""
    p_sw = topology.channel.evaluated.p_sw
    entries = []
    for nbr in topology.upstream_neighbors(node):
        entries.append(
            ForwarderEntry(
                node=nbr,
                p_link=link_success(topology.ber(node, nbr), topology.frame, p_sw),
                remaining_cost=costs[nbr],
            )
        )
    if not entries:
        raise DisconnectedNodeError(f"disconnected node: {node!r} has no upstream neighbor")
    return ForwarderSet(tuple(entries))


def network_path_costs(topology: Topology) -> PathCostTable:
    """Solve every node's expected path cost in ascending hop-id order.

    Each node's forwarder set only contains smaller-hop neighbors, so their
    costs are already final when the node is processed; the gateway anchors
    the recursion at zero.
    """
    order = sorted(
        (n.id for n in topology.nodes if n.id != topology.gateway),
        key=lambda nid: (topology.hop_id(nid), nid),
    )
    costs: dict[NodeId, float] = {topology.gateway: 0.0}
    for node in order:
        fs = forwarder_entries(topology, node, costs)
        costs[node] = total_path_cost(fs)
    return PathCostTable(gateway=topology.gateway, costs=costs)


def set_failure_probability(forwarder_set: ForwarderSet) -> float:
    """Probability a single transmission reaches no member of the set."""
    all_miss = 1.0
    for e in forwarder_set:
        all_miss *= 1.0 - e.p_link
    return all_miss


def expected_retransmissions(failure: float) -> float:
    """Expected retransmissions beyond the first attempt when each attempt
    independently fails with probability ``failure``: f / (1 - f)."""
    failure = _probability("failure", failure)
    if failure >= 1.0:
        raise ValueError("failure probability 1 never succeeds")
    return failure / (1.0 - failure)


def potential_bandwidth(p_acc: float, bandwidth_hz: float) -> float:
    """Opportunistically usable bandwidth of a channel: access probability
    times nominal bandwidth."""
    p_acc = _probability("p_acc", p_acc)
    bandwidth_hz = float(bandwidth_hz)
    if not math.isfinite(bandwidth_hz) or bandwidth_hz <= 0.0:
        raise ValueError(f"bandwidth_hz must be positive, got {bandwidth_hz!r}")
    return p_acc * bandwidth_hz
