import math

import pytest

from oppsim.model import (
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
    Topology,
    TraceEvent,
    validate,
)


def make_frame(**kw):
    base = dict(micro_frame_bits=8, preamble_frames=2, data_frame_bits=100)
    base.update(kw)
    return FrameParams(**base)


def make_channel():
    return ChannelModel(channels=(Channel(1.0, 0.5, 2e6),), noise_power=1e-9)


def test_frame_params_bits_per_transmission():
    frame = make_frame()
    assert frame.bits_per_transmission == 8 * 2 + 100


@pytest.mark.parametrize(
    "field,value",
    [
        ("micro_frame_bits", 0),
        ("preamble_frames", 0),
        ("data_frame_bits", -1),
        ("micro_frame_bits", 2.5),
    ],
)
def test_frame_params_rejects_bad_values(field, value):
    with pytest.raises(ValueError):
        make_frame(**{field: value})


@pytest.mark.parametrize("p", [-0.1, 1.1, float("nan")])
def test_bit_error_rate_domain(p):
    with pytest.raises(ValueError):
        BitErrorRate(p)


def test_bit_error_rate_accepts_bounds():
    assert BitErrorRate(0.0).p == 0.0
    assert BitErrorRate(1.0).p == 1.0


def test_channel_validation():
    with pytest.raises(ValueError):
        Channel(p_sw=1.5, p_acc=0.5, bandwidth_hz=1e6)
    with pytest.raises(ValueError):
        Channel(p_sw=0.5, p_acc=0.5, bandwidth_hz=0.0)


def test_channel_model_needs_a_channel():
    with pytest.raises(ValueError):
        ChannelModel(channels=(), noise_power=1e-9)


def test_channel_model_evaluated_is_first():
    first = Channel(0.9, 0.4, 1e6)
    model = ChannelModel(channels=(first, Channel(0.5, 0.5, 2e6)), noise_power=1e-9)
    assert model.evaluated is model.channels[0]
    assert model.evaluated.p_sw == 0.9


def test_forwarder_entry_validation():
    with pytest.raises(ValueError):
        ForwarderEntry(node=1, p_link=1.2, remaining_cost=1.0)
    with pytest.raises(ValueError):
        ForwarderEntry(node=1, p_link=0.5, remaining_cost=-1.0)


def test_forwarder_set_canonical_order():
    # sorted by remaining cost, node id breaking ties
    fs = ForwarderSet(
        (
            ForwarderEntry(node=9, p_link=0.5, remaining_cost=2.0),
            ForwarderEntry(node=4, p_link=0.5, remaining_cost=1.0),
            ForwarderEntry(node=2, p_link=0.5, remaining_cost=2.0),
        )
    )
    assert [e.node for e in fs] == [4, 2, 9]
    assert len(fs) == 3
    assert fs[0].remaining_cost == 1.0


def _tiny_topology(links=None):
    nodes = (
        Node(id=0, rank=1.0, hop_id=0),
        Node(id=1, rank=2.0, hop_id=1),
        Node(id=2, rank=3.0, hop_id=2),
    )
    if links is None:
        links = {(0, 1): 0.01, (1, 0): 0.01, (1, 2): 0.01, (2, 1): 0.01}
    return Topology(
        nodes=nodes, gateway=0, links=links, frame=make_frame(), channel=make_channel()
    )


def test_topology_accessors():
    topo = _tiny_topology()
    assert topo.neighbors(1) == (0, 2)
    assert topo.upstream_neighbors(2) == (1,)
    assert topo.upstream_neighbors(0) == ()
    assert topo.has_link(0, 1) and not topo.has_link(0, 2)
    assert topo.ber(0, 1) == 0.01
    assert topo.hop_id(2) == 2
    assert topo.rank(1) == 2.0
    assert topo.non_gateway_ids() == (1, 2)


def test_topology_coerces_float_links():
    topo = _tiny_topology()
    assert isinstance(topo.links[(0, 1)], BitErrorRate)


def test_topology_rejects_self_link():
    with pytest.raises(ValueError):
        _tiny_topology(links={(1, 1): 0.01})


def test_validate_reports_duplicate_node_ids():
    nodes = (Node(id=0, rank=1.0, hop_id=0), Node(id=0, rank=2.0, hop_id=1))
    topo = Topology(
        nodes=nodes, gateway=0, links={}, frame=make_frame(), channel=make_channel()
    )
    codes = {v.code for v in validate(topo)}
    assert "node-ids" in codes


def test_validate_clean_topology():
    assert validate(_tiny_topology()) == []


def test_validate_reports_asymmetric_link_once():
    topo = _tiny_topology(links={(0, 1): 0.01, (1, 0): 0.01, (1, 2): 0.01})
    codes = [v.code for v in validate(topo)]
    assert codes.count("symmetry") == 1


def test_validate_reports_disconnected_node():
    topo = _tiny_topology(links={(0, 1): 0.01, (1, 0): 0.01})
    codes = {v.code for v in validate(topo)}
    assert "connectivity" in codes


def test_validate_reports_gateway_hop_id():
    nodes = (
        Node(id=0, rank=1.0, hop_id=3),
        Node(id=1, rank=2.0, hop_id=1),
    )
    topo = Topology(
        nodes=nodes,
        gateway=0,
        links={(0, 1): 0.01, (1, 0): 0.01},
        frame=make_frame(),
        channel=make_channel(),
    )
    codes = {v.code for v in validate(topo)}
    assert "gateway-hop-id" in codes


def test_validate_reports_unknown_gateway():
    nodes = (Node(id=1, rank=2.0, hop_id=1),)
    topo = Topology(
        nodes=nodes, gateway=7, links={}, frame=make_frame(), channel=make_channel()
    )
    codes = {v.code for v in validate(topo)}
    assert "gateway" in codes


def test_validate_reports_dangling_link_endpoint():
    topo_nodes = (Node(id=0, rank=1.0, hop_id=0), Node(id=1, rank=2.0, hop_id=1))
    topo = Topology(
        nodes=topo_nodes,
        gateway=0,
        links={(0, 9): 0.01, (9, 0): 0.01},
        frame=make_frame(),
        channel=make_channel(),
    )
    codes = {v.code for v in validate(topo)}
    assert "link-endpoints" in codes


def _ev(kind, actor=1, detail=""):
    return TraceEvent(time=0, kind=kind, actor=actor, detail=detail)


def test_delivery_trace_from_events():
    events = (
        _ev(EventKind.TRANSMIT_PREAMBLE),
        _ev(EventKind.TRANSMIT_DATA),
        _ev(EventKind.RECEIVE, actor=0),
        _ev(EventKind.GATEWAY_ARRIVAL, actor=0, detail="hops=1 from=1"),
    )
    trace = DeliveryTrace.from_events(source=1, events=events)
    assert trace.delivered
    assert trace.duplicate_arrivals == 0
    assert trace.transmissions == 1
    assert trace.count(EventKind.RECEIVE) == 1


def test_delivery_trace_counts_duplicate_arrivals():
    events = (
        _ev(EventKind.GATEWAY_ARRIVAL, actor=0, detail="hops=1 from=1"),
        _ev(EventKind.GATEWAY_ARRIVAL, actor=0, detail="hops=2 from=2"),
    )
    trace = DeliveryTrace.from_events(source=1, events=events)
    assert trace.delivered and trace.duplicate_arrivals == 1


def test_delivery_trace_rejects_inconsistent_fields():
    arrival = (_ev(EventKind.GATEWAY_ARRIVAL, actor=0),)
    with pytest.raises(ValueError):
        DeliveryTrace(source=1, events=arrival, delivered=False, duplicate_arrivals=0, transmissions=0)
    with pytest.raises(ValueError):
        DeliveryTrace(source=1, events=arrival, delivered=True, duplicate_arrivals=3, transmissions=0)


def test_metrics_consistency_checks():
    with pytest.raises(ValueError):
        Metrics(
            deliveries_attempted=10,
            deliveries_succeeded=5,
            pdr=0.9,  # disagrees with 5/10
            mean_duplicates=0.0,
            empirical_coordination_overhead=0.0,
            mean_transmissions=1.0,
            mean_hops=1.0,
        )
    with pytest.raises(ValueError):
        # zero attempts pins pdr to zero
        Metrics(
            deliveries_attempted=0,
            deliveries_succeeded=0,
            pdr=0.5,
            mean_duplicates=0.0,
            empirical_coordination_overhead=0.0,
            mean_transmissions=0.0,
            mean_hops=0.0,
        )


def test_metrics_accepts_consistent_values():
    m = Metrics(
        deliveries_attempted=4,
        deliveries_succeeded=3,
        pdr=0.75,
        mean_duplicates=0.25,
        empirical_coordination_overhead=1.5,
        mean_transmissions=2.0,
        mean_hops=2.0,
    )
    assert m.pdr == 0.75


def test_event_kind_values_are_stable():
    # trace details and downstream parsers key off these literals
    assert EventKind.TRANSMIT_PREAMBLE.value == "transmit-preamble"
    assert EventKind.DUPLICATE_FORWARD.value == "duplicate-forward"
    assert EventKind.GATEWAY_ARRIVAL.value == "gateway-arrival"
