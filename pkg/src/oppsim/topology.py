"""Topology generation, hop-ID assignment, and the two distance notions.

Hop IDs are breadth-first shortest-path lengths from the gateway.  Ranks
are 1 plus the node's expected path cost, so on lossy links the
rank-difference "distance" between two nodes inflates past their true
hop separation; :func:`witness_topology` builds the minimal chain that
exhibits the gap.

Builders return fully prepared topologies: hop IDs assigned and ranks
computed, ready for both the closed-form layer and the simulator.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import analysis
from .model import (
    BitErrorRate,
    Channel,
    ChannelModel,
    FrameParams,
    Node,
    NodeId,
    Topology,
)

DEFAULT_FRAME = FrameParams(micro_frame_bits=8, preamble_frames=2, data_frame_bits=100)
DEFAULT_CHANNEL = ChannelModel(
    channels=(Channel(p_sw=1.0, p_acc=0.5, bandwidth_hz=2e6),),
    noise_power=1e-9,
)

_BISECTION_STEPS = 200


class DisconnectedTopologyError(ValueError):
    """Raised when a generated placement leaves nodes unreachable."""


@dataclass(frozen=True)
class FixedBer:
    """Every link gets the same bit error rate."""

    p: float


@dataclass(frozen=True)
class DistanceBer:
    """Bit error rate grows quadratically with link distance, from p_min at
    zero range to p_max at the radio range, clamped into [p_min, p_max]."""

    p_min: float
    p_max: float


@dataclass(frozen=True)
class GeneratorConfig:
    nodes: int
    area_side: float
    radio_range: float
    ber_model: FixedBer | DistanceBer
    frame: FrameParams = DEFAULT_FRAME
    channel: ChannelModel = DEFAULT_CHANNEL
    gateway_position: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if isinstance(self.nodes, bool) or not isinstance(self.nodes, int) or self.nodes < 1:
            raise ValueError(f"nodes must be a positive integer, got {self.nodes!r}")
        if not self.area_side > 0.0:
            raise ValueError("area_side must be positive")
        if not self.radio_range > 0.0:
            raise ValueError("radio_range must be positive")


def _link_ber(model: FixedBer | DistanceBer, distance: float, radio_range: float) -> float:
    if isinstance(model, FixedBer):
        return model.p
    span = model.p_max - model.p_min
    p = model.p_min + span * (distance / radio_range) ** 2
    return min(max(p, min(model.p_min, model.p_max)), max(model.p_min, model.p_max))


def generate(config: GeneratorConfig, seed: int) -> Topology:
    """Place nodes uniformly at random, link every pair within radio range,
    then assign hop IDs and ranks.  Node 0 is the gateway, at the area
    center unless a position is configured.  Raises
    DisconnectedTopologyError when some node cannot reach the gateway;
    callers may retry with another seed.
    """
    rng = np.random.default_rng(seed)
    side = config.area_side
    gw_pos = config.gateway_position or (side / 2.0, side / 2.0)
    positions: dict[NodeId, tuple[float, float]] = {0: (float(gw_pos[0]), float(gw_pos[1]))}
    for nid in range(1, config.nodes):
        positions[nid] = (float(rng.uniform(0.0, side)), float(rng.uniform(0.0, side)))

    links: dict[tuple[NodeId, NodeId], BitErrorRate] = {}
    ids = sorted(positions)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            ax, ay = positions[a]
            bx, by = positions[b]
            dist = math.hypot(ax - bx, ay - by)
            if dist <= config.radio_range:
                ber = BitErrorRate(_link_ber(config.ber_model, dist, config.radio_range))
                links[(a, b)] = ber
                links[(b, a)] = ber

    nodes = tuple(
        Node(id=nid, rank=1.0, hop_id=0, position=positions[nid]) for nid in ids
    )
    topo = Topology(nodes=nodes, gateway=0, links=links, frame=config.frame, channel=config.channel)
    topo = assign_hop_ids(topo)
    return compute_ranks(topo)


def _bfs_hops(topology: Topology) -> dict[NodeId, int]:
    hops = {topology.gateway: 0}
    frontier = deque([topology.gateway])
    while frontier:
        current = frontier.popleft()
        for nbr in topology.neighbors(current):
            if nbr not in hops:
                hops[nbr] = hops[current] + 1
                frontier.append(nbr)
    return hops


def assign_hop_ids(topology: Topology) -> Topology:
    """Return a copy with hop IDs set to breadth-first distances from the
    gateway.  Raises DisconnectedTopologyError naming the first unreachable
    node."""
    hops = _bfs_hops(topology)
    for n in topology.nodes:
        if n.id not in hops:
            raise DisconnectedTopologyError(f"disconnected node: {n.id!r} cannot reach the gateway")
    nodes = tuple(replace(n, hop_id=hops[n.id]) for n in topology.nodes)
    return replace(topology, nodes=nodes)


def compute_ranks(topology: Topology) -> Topology:
    """Return a copy with rank = 1 + expected path cost (gateway rank 1)."""
    costs = analysis.network_path_costs(topology)
    nodes = tuple(replace(n, rank=1.0 + costs[n.id]) for n in topology.nodes)
    return replace(topology, nodes=nodes)


def forwarder_set(topology: Topology, node: NodeId, costs: analysis.PathCostTable):
    """A node's candidate forwarders: upstream neighbors with link_success
    probabilities and their path costs.  Empty only for the gateway."""
    from .model import ForwarderSet

    if node == topology.gateway:
        return ForwarderSet(())
    return analysis.forwarder_entries(topology, node, costs)


def hop_distance(topology: Topology, a: NodeId, b: NodeId) -> int:
    """Distance in hop-ID space: |hop(a) - hop(b)|."""
    return abs(topology.hop_id(a) - topology.hop_id(b))


def rank_difference_distance(topology: Topology, a: NodeId, b: NodeId) -> float:
    """Distance in rank space: |rank(a) - rank(b)|.  On lossy links this is
    an expected-cost gap, not a hop count, and exceeds hop_distance."""
    return abs(topology.rank(a) - topology.rank(b))


def ber_for_link_success(target: float, frame: FrameParams, p_sw: float) -> float:
    """Invert link_success: the bit error rate at which a candidate's
    hear-anything probability equals ``target``.  Needs
    target >= 1 - p_sw (the failure ceiling is p_sw)."""
    if not 0.0 <= target <= 1.0:
        raise ValueError(f"target must be in [0, 1], got {target!r}")
    if target < 1.0 - p_sw:
        raise ValueError(f"link success {target!r} unreachable with p_sw={p_sw!r}")
    if target == 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(_BISECTION_STEPS):
        mid = (lo + hi) / 2.0
        if analysis.link_success(mid, frame, p_sw) > target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def ber_for_reception(target: float, frame: FrameParams, p_sw: float) -> float:
    """Invert reception_probability: the bit error rate at which the
    decode-and-forward probability equals ``target`` (at most p_sw)."""
    if not 0.0 <= target <= 1.0:
        raise ValueError(f"target must be in [0, 1], got {target!r}")
    if target > p_sw:
        raise ValueError(f"reception probability {target!r} unreachable with p_sw={p_sw!r}")
    if target == p_sw:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(_BISECTION_STEPS):
        mid = (lo + hi) / 2.0
        if analysis.reception_probability(mid, frame, p_sw) > target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def _prepared(nodes, gateway, links, frame, channel) -> Topology:
    topo = Topology(nodes=nodes, gateway=gateway, links=links, frame=frame, channel=channel)
    return compute_ranks(assign_hop_ids(topo))


def chain_topology(
    link_successes: list[float] | tuple[float, ...],
    frame: FrameParams = DEFAULT_FRAME,
    channel: ChannelModel = DEFAULT_CHANNEL,
) -> Topology:
    """A gateway-rooted line: node 0 is the gateway, node k sits k hops out,
    and the k-th link's bit error rate is solved so its hear-anything
    probability equals link_successes[k]."""
    if not link_successes:
        raise ValueError("chain needs at least one link")
    p_sw = channel.evaluated.p_sw
    links: dict[tuple[NodeId, NodeId], BitErrorRate] = {}
    nodes = [Node(id=0, rank=1.0, hop_id=0, position=(0.0, 0.0))]
    for k, target in enumerate(link_successes):
        ber = BitErrorRate(ber_for_link_success(float(target), frame, p_sw))
        links[(k, k + 1)] = ber
        links[(k + 1, k)] = ber
        nodes.append(Node(id=k + 1, rank=1.0, hop_id=0, position=(float(k + 1), 0.0)))
    return _prepared(tuple(nodes), 0, links, frame, channel)


def witness_topology(
    far_cost: float = 3.04,
    frame: FrameParams = DEFAULT_FRAME,
    channel: ChannelModel = DEFAULT_CHANNEL,
) -> Topology:
    """The minimal chain where hop-ID distance and rank-difference distance
    disagree: gateway (id 1), one relay (id 3), and a far node (id 5) two
    hops out.  Both links share the link-success probability 2 / far_cost,
    so the far node's expected path cost is exactly ``far_cost`` and its
    rank 1 + far_cost, while its hop-ID distance from the gateway stays 2.
    """
    if not far_cost >= 2.0:
        raise ValueError(f"far_cost must be >= 2 (two lossless hops), got {far_cost!r}")
    p_sw = channel.evaluated.p_sw
    success = 2.0 / far_cost
    ber = BitErrorRate(ber_for_link_success(success, frame, p_sw))
    links = {(1, 3): ber, (3, 1): ber, (3, 5): ber, (5, 3): ber}
    nodes = (
        Node(id=1, rank=1.0, hop_id=0, position=(0.0, 0.0)),
        Node(id=3, rank=1.0, hop_id=0, position=(1.0, 0.0)),
        Node(id=5, rank=1.0, hop_id=0, position=(2.0, 0.0)),
    )
    return _prepared(nodes, 1, links, frame, channel)


def star_topology(
    forwarders: int,
    p_link: float,
    remaining_cost: float = 1.0,
    intercandidate_ber: float = 0.0,
    frame: FrameParams = DEFAULT_FRAME,
    channel: ChannelModel = DEFAULT_CHANNEL,
) -> Topology:
    """One source two hops out, N relay candidates one hop out, one gateway.

    Source-to-relay links are solved so the simulator's decode-and-forward
    probability equals ``p_link`` exactly; relay-to-gateway links are solved
    so each relay's expected path cost equals ``remaining_cost``.  Relays
    are pairwise linked at ``intercandidate_ber`` (0 = perfect overhearing).
    Node ids: gateway 0, relays 1..N, source N+1.
    """
    if isinstance(forwarders, bool) or not isinstance(forwarders, int) or forwarders < 1:
        raise ValueError(f"forwarders must be a positive integer, got {forwarders!r}")
    if not remaining_cost >= 1.0:
        raise ValueError(f"remaining_cost must be >= 1, got {remaining_cost!r}")
    p_sw = channel.evaluated.p_sw
    up_ber = BitErrorRate(ber_for_reception(float(p_link), frame, p_sw))
    relay_ber = BitErrorRate(ber_for_link_success(1.0 / remaining_cost, frame, p_sw))
    cross_ber = BitErrorRate(float(intercandidate_ber))

    source = forwarders + 1
    nodes = [Node(id=0, rank=1.0, hop_id=0, position=(0.0, 0.0))]
    links: dict[tuple[NodeId, NodeId], BitErrorRate] = {}
    for r in range(1, forwarders + 1):
        nodes.append(Node(id=r, rank=1.0, hop_id=0, position=(1.0, float(r))))
        links[(0, r)] = relay_ber
        links[(r, 0)] = relay_ber
        links[(r, source)] = up_ber
        links[(source, r)] = up_ber
        for other in range(1, r):
            links[(other, r)] = cross_ber
            links[(r, other)] = cross_ber
    nodes.append(Node(id=source, rank=1.0, hop_id=0, position=(2.0, 0.0)))
    return _prepared(tuple(nodes), 0, links, frame, channel)


def diamond_topology(
    source_ber: tuple[float, float] = (0.02, 0.02),
    relay_ber: tuple[float, float] = (0.01, 0.01),
    intercandidate_ber: float = 0.0,
    frame: FrameParams = DEFAULT_FRAME,
    channel: ChannelModel = DEFAULT_CHANNEL,
) -> Topology:
    """Gateway 0, relays 1 and 2, source 3 linked to both relays - the
    smallest topology where two candidates can hear the same transmission
    and must coordinate.  Bit error rates are taken literally (no
    inversion); relays are linked to each other at ``intercandidate_ber``.
    """
    b1, b2 = (BitErrorRate(float(b)) for b in source_ber)
    g1, g2 = (BitErrorRate(float(b)) for b in relay_ber)
    cross = BitErrorRate(float(intercandidate_ber))
    links = {
        (0, 1): g1, (1, 0): g1,
        (0, 2): g2, (2, 0): g2,
        (1, 3): b1, (3, 1): b1,
        (2, 3): b2, (3, 2): b2,
        (1, 2): cross, (2, 1): cross,
    }
    nodes = (
        Node(id=0, rank=1.0, hop_id=0, position=(0.0, 0.0)),
        Node(id=1, rank=1.0, hop_id=0, position=(1.0, 1.0)),
        Node(id=2, rank=1.0, hop_id=0, position=(1.0, -1.0)),
        Node(id=3, rank=1.0, hop_id=0, position=(2.0, 0.0)),
    )
    return _prepared(nodes, 0, links, frame, channel)


def deepest_node(topology: Topology) -> NodeId:
    """The node with the largest hop ID (smallest id on ties) - the natural
    source for the built-in shapes."""
    max_hop = max(n.hop_id for n in topology.nodes)
    return min(n.id for n in topology.nodes if n.hop_id == max_hop)
