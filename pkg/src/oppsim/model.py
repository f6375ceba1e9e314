"""Shared domain types for the opportunistic-forwarding toolkit.

Every type is a frozen dataclass: field-level invariants are checked at
construction time and instances are safe to share between threads.
Whole-topology invariants (link symmetry, connectivity toward the gateway)
are deliberately *not* enforced at construction; :func:`validate` reports
them as a list of violations so a caller can surface every problem at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Iterator, Mapping

NodeId = int | str


def _probability(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {value!r}")
    return value


def _positive_int(name: str, value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def _nonnegative_int(name: str, value: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")
    return value


def _positive_real(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite real, got {value!r}")
    return value


@dataclass(frozen=True)
class FrameParams:
    """Preamble and payload geometry of one transmission.

    ``micro_frame_bits``
        size of a single wake-up micro-frame, in bits.
    ``preamble_frames``
        how many micro-frames are sent back to back ahead of the payload.
    ``data_frame_bits``
        payload frame size, in bits.
    """

    micro_frame_bits: int
    preamble_frames: int
    data_frame_bits: int

    def __post_init__(self) -> None:
        _positive_int("micro_frame_bits", self.micro_frame_bits)
        _positive_int("preamble_frames", self.preamble_frames)
        _positive_int("data_frame_bits", self.data_frame_bits)

    @property
    def bits_per_transmission(self) -> int:
        return self.preamble_frames * self.micro_frame_bits + self.data_frame_bits


@dataclass(frozen=True)
class BitErrorRate:
    """Independent per-bit error probability on one link."""

    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _probability("bit error rate", self.p))


@dataclass(frozen=True)
class Channel:
    """One cognitive channel: switching probability, access probability,
    nominal bandwidth in hertz."""

    p_sw: float
    p_acc: float
    bandwidth_hz: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_sw", _probability("p_sw", self.p_sw))
        object.__setattr__(self, "p_acc", _probability("p_acc", self.p_acc))
        object.__setattr__(self, "bandwidth_hz", _positive_real("bandwidth_hz", self.bandwidth_hz))


@dataclass(frozen=True)
class ChannelModel:
    """The set of channels a transmitter may switch onto, plus receiver
    noise power.

    The first channel in ``channels`` is the channel under evaluation: the
    one whose switching probability gates link computations and simulated
    transmissions.
    """

    channels: tuple[Channel, ...]
    noise_power: float

    def __post_init__(self) -> None:
        channels = tuple(self.channels)
        if not channels:
            raise ValueError("ChannelModel requires at least one channel")
        if not all(isinstance(c, Channel) for c in channels):
            raise ValueError("channels must be Channel instances")
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "noise_power", _positive_real("noise_power", self.noise_power))

    @property
    def evaluated(self) -> Channel:
        return self.channels[0]


@dataclass(frozen=True)
class ForwarderEntry:
    """One candidate forwarder as seen from a sender: delivery probability
    of the link toward it and its remaining cost to the gateway."""

    node: NodeId
    p_link: float
    remaining_cost: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_link", _probability("p_link", self.p_link))
        cost = float(self.remaining_cost)
        if not math.isfinite(cost) or cost < 0.0:
            raise ValueError(f"remaining_cost must be finite and >= 0, got {cost!r}")
        object.__setattr__(self, "remaining_cost", cost)


@dataclass(frozen=True)
class ForwarderSet:
    """An ordered set of candidate forwarders.

    Entries are canonicalized at construction: ascending remaining cost,
    ties broken by ascending node id.  Node ids inside one set must be
    mutually orderable (all ints or all strings).
    """

    entries: tuple[ForwarderEntry, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        if not all(isinstance(e, ForwarderEntry) for e in entries):
            raise ValueError("entries must be ForwarderEntry instances")
        ordered = tuple(sorted(entries, key=lambda e: (e.remaining_cost, e.node)))
        object.__setattr__(self, "entries", ordered)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ForwarderEntry]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> ForwarderEntry:
        return self.entries[index]


@dataclass(frozen=True)
class Node:
    """A network node.  ``position`` is decorative; distances never feed the
    model directly (the generator maps them to bit error rates instead)."""

    id: NodeId
    rank: float
    hop_id: int
    position: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rank", _positive_real("rank", self.rank))
        _nonnegative_int("hop_id", self.hop_id)
        if self.position is not None:
            x, y = self.position
            object.__setattr__(self, "position", (float(x), float(y)))


@dataclass(frozen=True)
class Topology:
    """An immutable network snapshot: nodes, one designated gateway, a link
    map keyed by ordered node pairs, frame geometry, and the channel model.

    The link map is expected to hold both directions of every link with the
    same bit error rate; :func:`validate` reports asymmetries instead of the
    constructor rejecting them, so that diagnostics cover whole files.
    """

    nodes: tuple[Node, ...]
    gateway: NodeId
    links: Mapping[tuple[NodeId, NodeId], BitErrorRate]
    frame: FrameParams
    channel: ChannelModel

    def __post_init__(self) -> None:
        nodes = tuple(self.nodes)
        if not nodes or not all(isinstance(n, Node) for n in nodes):
            raise ValueError("nodes must be a non-empty sequence of Node instances")
        object.__setattr__(self, "nodes", nodes)
        links = {}
        for key, ber in dict(self.links).items():
            a, b = key
            if a == b:
                raise ValueError(f"self-link on node {a!r}")
            if not isinstance(ber, BitErrorRate):
                ber = BitErrorRate(float(ber))
            links[(a, b)] = ber
        object.__setattr__(self, "links", links)
        if not isinstance(self.frame, FrameParams):
            raise ValueError("frame must be a FrameParams instance")
        if not isinstance(self.channel, ChannelModel):
            raise ValueError("channel must be a ChannelModel instance")

    @cached_property
    def _index(self) -> dict[NodeId, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _adjacency(self) -> dict[NodeId, tuple[NodeId, ...]]:
        nbrs: dict[NodeId, set[NodeId]] = {n.id: set() for n in self.nodes}
        for a, b in self.links:
            if a in nbrs and b in nbrs:
                nbrs[a].add(b)
                nbrs[b].add(a)
        return {nid: tuple(sorted(ns)) for nid, ns in nbrs.items()}

    def node(self, node_id: NodeId) -> Node:
        try:
            return self._index[node_id]
        except KeyError:
            raise ValueError(f"unknown node id: {node_id!r}") from None

    def neighbors(self, node_id: NodeId) -> tuple[NodeId, ...]:
        self.node(node_id)
        return self._adjacency.get(node_id, ())

    def upstream_neighbors(self, node_id: NodeId) -> tuple[NodeId, ...]:
        """Neighbors with a strictly smaller hop id, ascending by node id."""
        own = self.node(node_id).hop_id
        return tuple(n for n in self.neighbors(node_id) if self.node(n).hop_id < own)

    def has_link(self, a: NodeId, b: NodeId) -> bool:
        return (a, b) in self.links

    def ber(self, a: NodeId, b: NodeId) -> float:
        try:
            return self.links[(a, b)].p
        except KeyError:
            raise ValueError(f"no link between {a!r} and {b!r}") from None

    def hop_id(self, node_id: NodeId) -> int:
        return self.node(node_id).hop_id

    def rank(self, node_id: NodeId) -> float:
        return self.node(node_id).rank

    def non_gateway_ids(self) -> tuple[NodeId, ...]:
        return tuple(sorted(n.id for n in self.nodes if n.id != self.gateway))


@dataclass(frozen=True)
class Violation:
    """One broken topology invariant, with a stable machine-readable code."""

    code: str
    message: str


def validate(topology: Topology) -> list[Violation]:
    """Check whole-topology invariants and report every breach.

    Returns an empty list iff the topology is internally consistent:
    unique node ids, a known gateway at hop id 0, a symmetric link map
    over known endpoints, and every non-gateway node owning at least one
    neighbor with a strictly smaller hop id (a route toward the gateway).
    """

    violations: list[Violation] = []
    seen: set[NodeId] = set()
    for n in topology.nodes:
        if n.id in seen:
            violations.append(Violation("node-ids", f"duplicate node id {n.id!r}"))
        seen.add(n.id)

    if topology.gateway not in seen:
        violations.append(Violation("gateway", f"gateway {topology.gateway!r} is not a node"))
    else:
        gw = topology._index[topology.gateway]
        if gw.hop_id != 0:
            violations.append(
                Violation("gateway-hop-id", f"gateway hop id must be 0, got {gw.hop_id}")
            )

    reported_pairs: set[frozenset[NodeId]] = set()
    for (a, b), ber in topology.links.items():
        if a not in seen or b not in seen:
            violations.append(Violation("link-endpoints", f"link ({a!r}, {b!r}) references an unknown node"))
            continue
        pair = frozenset((a, b))
        if pair in reported_pairs:
            continue
        reverse = topology.links.get((b, a))
        if reverse is None:
            reported_pairs.add(pair)
            violations.append(Violation("symmetry", f"link ({a!r}, {b!r}) has no reverse entry"))
        elif reverse.p != ber.p:
            reported_pairs.add(pair)
            violations.append(
                Violation(
                    "symmetry",
                    f"link ({a!r}, {b!r}) bit error rate {ber.p!r} != reverse {reverse.p!r}",
                )
            )

    if topology.gateway in seen:
        for n in topology.nodes:
            if n.id == topology.gateway:
                continue
            if not topology.upstream_neighbors(n.id):
                violations.append(
                    Violation(
                        "connectivity",
                        f"node {n.id!r} has no neighbor with a smaller hop id",
                    )
                )
    return violations


class EventKind(Enum):
    TRANSMIT_PREAMBLE = "transmit-preamble"
    TRANSMIT_DATA = "transmit-data"
    RECEIVE = "receive"
    ELECT = "elect"
    SUPPRESS = "suppress"
    DUPLICATE_FORWARD = "duplicate-forward"
    GATEWAY_ARRIVAL = "gateway-arrival"


@dataclass(frozen=True)
class TraceEvent:
    """One timestamped protocol event.  ``time`` is the slot index of the
    transmission the event belongs to; ``detail`` is free-form text such as
    ``"from=3 hops=2"``."""

    time: int
    kind: EventKind
    actor: NodeId
    detail: str = ""

    def __post_init__(self) -> None:
        _nonnegative_int("time", self.time)
        if not isinstance(self.kind, EventKind):
            raise ValueError(f"kind must be an EventKind, got {self.kind!r}")


@dataclass(frozen=True)
class DeliveryTrace:
    """Complete event record of one end-to-end delivery attempt.

    ``delivered`` and ``duplicate_arrivals`` are redundant with the event
    list and are cross-checked at construction: delivered iff at least one
    gateway arrival occurred, and duplicate arrivals count every arrival
    past the first.
    """

    source: NodeId
    events: tuple[TraceEvent, ...]
    delivered: bool
    duplicate_arrivals: int
    transmissions: int

    def __post_init__(self) -> None:
        events = tuple(self.events)
        if not all(isinstance(e, TraceEvent) for e in events):
            raise ValueError("events must be TraceEvent instances")
        object.__setattr__(self, "events", events)
        _nonnegative_int("duplicate_arrivals", self.duplicate_arrivals)
        _nonnegative_int("transmissions", self.transmissions)
        arrivals = sum(1 for e in events if e.kind is EventKind.GATEWAY_ARRIVAL)
        if self.delivered != (arrivals >= 1):
            raise ValueError(
                f"delivered={self.delivered!r} but trace has {arrivals} gateway arrivals"
            )
        if self.duplicate_arrivals != max(0, arrivals - 1):
            raise ValueError(
                f"duplicate_arrivals={self.duplicate_arrivals} but trace has {arrivals} arrivals"
            )

    @classmethod
    def from_events(cls, source: NodeId, events: Iterable[TraceEvent]) -> "DeliveryTrace":
        events = tuple(events)
        arrivals = sum(1 for e in events if e.kind is EventKind.GATEWAY_ARRIVAL)
        transmissions = sum(1 for e in events if e.kind is EventKind.TRANSMIT_DATA)
        return cls(
            source=source,
            events=events,
            delivered=arrivals >= 1,
            duplicate_arrivals=max(0, arrivals - 1),
            transmissions=transmissions,
        )

    def count(self, kind: EventKind) -> int:
        return sum(1 for e in self.events if e.kind is kind)


@dataclass(frozen=True)
class Metrics:
    """Aggregated outcome of a batch of independent delivery replications."""

    deliveries_attempted: int
    deliveries_succeeded: int
    pdr: float
    mean_duplicates: float
    empirical_coordination_overhead: float
    mean_transmissions: float
    mean_hops: float

    def __post_init__(self) -> None:
        _nonnegative_int("deliveries_attempted", self.deliveries_attempted)
        _nonnegative_int("deliveries_succeeded", self.deliveries_succeeded)
        if self.deliveries_succeeded > self.deliveries_attempted:
            raise ValueError("deliveries_succeeded exceeds deliveries_attempted")
        pdr = _probability("pdr", self.pdr)
        if self.deliveries_attempted > 0:
            expected = self.deliveries_succeeded / self.deliveries_attempted
            if abs(pdr - expected) > 1e-9:
                raise ValueError(f"pdr={pdr!r} inconsistent with {expected!r}")
        elif pdr != 0.0:
            raise ValueError("pdr must be 0 when no deliveries were attempted")
        for name in ("mean_duplicates", "empirical_coordination_overhead",
                     "mean_transmissions", "mean_hops"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)
