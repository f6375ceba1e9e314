"""Analysis and simulation of receiver-based opportunistic forwarding
over a cognitive-radio control channel.

Closed forms live in :mod:`oppsim.analysis`, independent reference
implementations in :mod:`oppsim.oracle`, topology builders in
:mod:`oppsim.topology`, and the packet-level simulator in
:mod:`oppsim.engine`.
"""

from .analysis import (
    DisconnectedNodeError,
    PathCostTable,
    UnreachableForwarderSetError,
    coordination_overhead,
    data_miss_probability,
    expected_retransmissions,
    failure_probability,
    forwarder_entries,
    link_success,
    network_path_costs,
    potential_bandwidth,
    preamble_miss_probability,
    reception_probability,
    set_failure_probability,
    total_path_cost,
)
from .engine import (
    ProtocolMode,
    SimConfig,
    empirical_link_success,
    energy_bits,
    first_arrival_hops,
    replication_seed,
    run_experiment,
    simulate_delivery,
)
from .model import (
    BitErrorRate,
    Channel,
    ChannelModel,
    DeliveryTrace,
    EventKind,
    ForwarderEntry,
    ForwarderSet,
    FrameParams,
    Metrics,
    Node,
    NodeId,
    Topology,
    TraceEvent,
    Violation,
    validate,
)
from .oracle import (
    ChainSpec,
    FrameMissEstimates,
    SingleHopExact,
    bit_level_frame_oracle,
    exact_single_hop,
    exact_two_hop,
)
from .topology import (
    DEFAULT_CHANNEL,
    DEFAULT_FRAME,
    DisconnectedTopologyError,
    DistanceBer,
    FixedBer,
    GeneratorConfig,
    assign_hop_ids,
    ber_for_link_success,
    ber_for_reception,
    chain_topology,
    compute_ranks,
    deepest_node,
    diamond_topology,
    forwarder_set,
    generate,
    hop_distance,
    rank_difference_distance,
    star_topology,
    witness_topology,
)

__version__ = "0.1.0"

__all__ = [
    "BitErrorRate",
    "Channel",
    "ChannelModel",
    "ChainSpec",
    "DEFAULT_CHANNEL",
    "DEFAULT_FRAME",
    "DeliveryTrace",
    "DisconnectedNodeError",
    "DisconnectedTopologyError",
    "DistanceBer",
    "EventKind",
    "FixedBer",
    "ForwarderEntry",
    "ForwarderSet",
    "FrameMissEstimates",
    "FrameParams",
    "GeneratorConfig",
    "Metrics",
    "Node",
    "NodeId",
    "PathCostTable",
    "ProtocolMode",
    "SimConfig",
    "SingleHopExact",
    "Topology",
    "TraceEvent",
    "UnreachableForwarderSetError",
    "Violation",
    "assign_hop_ids",
    "ber_for_link_success",
    "ber_for_reception",
    "bit_level_frame_oracle",
    "chain_topology",
    "compute_ranks",
    "coordination_overhead",
    "data_miss_probability",
    "deepest_node",
    "diamond_topology",
    "empirical_link_success",
    "energy_bits",
    "exact_single_hop",
    "exact_two_hop",
    "expected_retransmissions",
    "failure_probability",
    "first_arrival_hops",
    "forwarder_entries",
    "forwarder_set",
    "generate",
    "hop_distance",
    "link_success",
    "network_path_costs",
    "potential_bandwidth",
    "preamble_miss_probability",
    "rank_difference_distance",
    "reception_probability",
    "replication_seed",
    "run_experiment",
    "set_failure_probability",
    "simulate_delivery",
    "star_topology",
    "total_path_cost",
    "validate",
    "witness_topology",
]
