"""Command-line interface: analyze, simulate, sweep, verify.

Configs are YAML mappings (the one supported dialect; see README for the
schema).  Tables come out as CSV with ``#``-prefixed provenance comments;
reports come out as one-record-per-line ``key=value`` text.  Every record
carries the seed and a short config digest so any row can be reproduced
from the file alone.

Exit codes: 0 success, 1 validation or config error, 2 verification
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from itertools import product
from pathlib import Path

import yaml

from . import analysis, engine, oracle, topology as topo
from .model import (
    BitErrorRate,
    Channel,
    ChannelModel,
    ForwarderEntry,
    ForwarderSet,
    FrameParams,
    Node,
    NodeId,
    Topology,
    validate,
)

RETRY_CONVENTION = "excludes-first-attempt"

DEFAULT_VERIFY_SIZES = (1, 2, 3, 4)
DEFAULT_VERIFY_PROBS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_VERIFY_COSTS = (0.0, 1.0, 2.5)
SINGLE_HOP_TOLERANCE = 1e-12
COMPOSITION_TOLERANCE = 1e-12
FRAME_SIGMA_TOLERANCE = 3.0


class ConfigError(ValueError):
    """Configuration could not be parsed or failed validation."""


# ---------------------------------------------------------------- config --


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return format(value, ".12g")
    return str(value)


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return raw


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return value


def _opt(section: dict, sec_name: str, key: str, default, kind):
    value = section.get(key, default)
    if value is None:
        return None
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{sec_name}.{key} must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{sec_name}.{key} must be an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{sec_name}.{key} must be a boolean, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{sec_name}.{key} must be a string, got {value!r}")
        return value
    return value


def parse_frame(cfg: dict) -> FrameParams:
    section = _section(cfg, "frame")
    try:
        return FrameParams(
            micro_frame_bits=_opt(section, "frame", "micro_frame_bits", 8, int),
            preamble_frames=_opt(section, "frame", "preamble_frames", 2, int),
            data_frame_bits=_opt(section, "frame", "data_frame_bits", 100, int),
        )
    except ValueError as exc:
        raise ConfigError(f"frame: {exc}") from exc


def parse_channel(cfg: dict) -> ChannelModel:
    section = _section(cfg, "channel")
    raw_channels = section.get("channels", [{"p_sw": 1.0, "p_acc": 0.5, "bandwidth_hz": 2e6}])
    if not isinstance(raw_channels, list) or not raw_channels:
        raise ConfigError("channel.channels must be a non-empty list")
    channels = []
    for i, entry in enumerate(raw_channels):
        if not isinstance(entry, dict):
            raise ConfigError(f"channel.channels[{i}] must be a mapping")
        try:
            channels.append(
                Channel(
                    p_sw=_opt(entry, f"channel.channels[{i}]", "p_sw", 1.0, float),
                    p_acc=_opt(entry, f"channel.channels[{i}]", "p_acc", 0.5, float),
                    bandwidth_hz=_opt(entry, f"channel.channels[{i}]", "bandwidth_hz", 2e6, float),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"channel.channels[{i}]: {exc}") from exc
    noise = _opt(section, "channel", "noise_power", 1e-9, float)
    try:
        return ChannelModel(channels=tuple(channels), noise_power=noise)
    except ValueError as exc:
        raise ConfigError(f"channel: {exc}") from exc


def _float_list(section: dict, sec_name: str, key: str, expected_len: int | None = None):
    value = section.get(key)
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{sec_name}.{key} must be a non-empty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{sec_name}.{key} must contain numbers, got {v!r}")
        out.append(float(v))
    if expected_len is not None and len(out) != expected_len:
        raise ConfigError(f"{sec_name}.{key} must have exactly {expected_len} entries")
    return out


def build_topology(cfg: dict, frame: FrameParams, channel: ChannelModel) -> Topology:
    section = _section(cfg, "topology")
    if not section:
        raise ConfigError("missing 'topology' section")
    kind = _opt(section, "topology", "kind", None, str)
    if kind is None:
        raise ConfigError("topology.kind is required")
    try:
        if kind == "chain":
            return topo.chain_topology(
                _float_list(section, "topology", "link_success"), frame, channel
            )
        if kind == "star":
            forwarders = _opt(section, "topology", "forwarders", None, int)
            p_link = _opt(section, "topology", "p_link", None, float)
            if forwarders is None or p_link is None:
                raise ConfigError("topology kind 'star' needs forwarders and p_link")
            return topo.star_topology(
                forwarders,
                p_link,
                remaining_cost=_opt(section, "topology", "remaining_cost", 1.0, float),
                intercandidate_ber=_opt(section, "topology", "intercandidate_ber", 0.0, float),
                frame=frame,
                channel=channel,
            )
        if kind == "diamond":
            return topo.diamond_topology(
                source_ber=tuple(_float_list(section, "topology", "source_ber", 2))
                if "source_ber" in section
                else (0.02, 0.02),
                relay_ber=tuple(_float_list(section, "topology", "relay_ber", 2))
                if "relay_ber" in section
                else (0.01, 0.01),
                intercandidate_ber=_opt(section, "topology", "intercandidate_ber", 0.0, float),
                frame=frame,
                channel=channel,
            )
        if kind == "witness":
            return topo.witness_topology(
                far_cost=_opt(section, "topology", "far_cost", 3.04, float),
                frame=frame,
                channel=channel,
            )
        if kind == "generated":
            ber_cfg = section.get("ber", {"kind": "fixed", "p": 0.01})
            if not isinstance(ber_cfg, dict):
                raise ConfigError("topology.ber must be a mapping")
            ber_kind = ber_cfg.get("kind", "fixed")
            if ber_kind == "fixed":
                model = topo.FixedBer(p=_opt(ber_cfg, "topology.ber", "p", 0.01, float))
            elif ber_kind == "distance":
                model = topo.DistanceBer(
                    p_min=_opt(ber_cfg, "topology.ber", "p_min", 0.0, float),
                    p_max=_opt(ber_cfg, "topology.ber", "p_max", 0.05, float),
                )
            else:
                raise ConfigError(f"unknown topology.ber.kind {ber_kind!r}")
            position = section.get("gateway_position")
            if position is not None:
                position = tuple(_float_list(section, "topology", "gateway_position", 2))
            gen = topo.GeneratorConfig(
                nodes=_opt(section, "topology", "nodes", None, int) or 0,
                area_side=_opt(section, "topology", "area_side", 100.0, float),
                radio_range=_opt(section, "topology", "radio_range", 30.0, float),
                ber_model=model,
                frame=frame,
                channel=channel,
                gateway_position=position,
            )
            return topo.generate(gen, seed=_opt(section, "topology", "seed", 1, int))
        if kind == "file":
            path = _opt(section, "topology", "path", None, str)
            if path is None:
                raise ConfigError("topology kind 'file' needs a path")
            return read_topology_file(path, frame, channel)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"topology: {exc}") from exc
    raise ConfigError(f"unknown topology.kind {kind!r}")


_MODES = {
    "receiver_based": (engine.ProtocolMode.RECEIVER_BASED,),
    "sender_prioritized": (engine.ProtocolMode.SENDER_PRIORITIZED,),
    "both": (engine.ProtocolMode.RECEIVER_BASED, engine.ProtocolMode.SENDER_PRIORITIZED),
}


def parse_sim(cfg: dict) -> dict:
    section = _section(cfg, "sim")
    mode = _opt(section, "sim", "mode", "receiver_based", str)
    if mode not in _MODES:
        raise ConfigError(f"sim.mode must be one of {sorted(_MODES)}, got {mode!r}")
    source = section.get("source")
    if source is not None and not isinstance(source, (int, str)):
        raise ConfigError(f"sim.source must be a node id or null, got {source!r}")
    params = {
        "mode": mode,
        "replications": _opt(section, "sim", "replications", 1000, int),
        "seed": _opt(section, "sim", "seed", 0, int),
        "source": source,
        "max_hops": _opt(section, "sim", "max_hops", 32, int),
        "election_slots": _opt(section, "sim", "election_slots", 32, int),
        "suppression": _opt(section, "sim", "suppression", True, bool),
    }
    if params["replications"] < 1:
        raise ConfigError("sim.replications must be >= 1")
    if params["seed"] < 0:
        raise ConfigError("sim.seed must be >= 0")
    return params


def effective_config(cfg: dict) -> dict:
    """The fully defaulted configuration: re-ingesting it reproduces the
    run exactly."""
    frame = parse_frame(cfg)
    channel = parse_channel(cfg)
    out: dict = {
        "frame": {
            "micro_frame_bits": frame.micro_frame_bits,
            "preamble_frames": frame.preamble_frames,
            "data_frame_bits": frame.data_frame_bits,
        },
        "channel": {
            "noise_power": channel.noise_power,
            "channels": [
                {"p_sw": c.p_sw, "p_acc": c.p_acc, "bandwidth_hz": c.bandwidth_hz}
                for c in channel.channels
            ],
        },
    }
    if "topology" in cfg:
        out["topology"] = dict(_section(cfg, "topology"))
    if "forwarder_sets" in cfg:
        out["forwarder_sets"] = cfg["forwarder_sets"]
    if "sim" in cfg or "topology" in cfg:
        out["sim"] = parse_sim(cfg)
    if "sweep" in cfg:
        sweep = _section(cfg, "sweep")
        out["sweep"] = {"parameter": sweep.get("parameter"), "values": sweep.get("values")}
    return out


def config_digest(cfg: dict) -> str:
    effective = effective_config(cfg)
    canonical = json.dumps(effective, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


# ------------------------------------------------------- topology files --


def format_topology(topology: Topology) -> str:
    """Line-oriented serialization: a header, one node line per node, one
    link line per direction-collapsed link (bit error rate as the third
    field).  Floats are written round-trip exact."""
    lines = [f"nodes {len(topology.nodes)} gateway {topology.gateway}"]
    for n in topology.nodes:
        x, y = n.position if n.position is not None else (0.0, 0.0)
        lines.append(f"node {n.id} {x!r} {y!r}")
    seen = set()
    for a, b in sorted(topology.links, key=lambda k: (str(k[0]), str(k[1]))):
        if (b, a) in seen:
            continue
        seen.add((a, b))
        lines.append(f"link {a} {b} {topology.links[(a, b)].p!r}")
    return "\n".join(lines) + "\n"


def write_topology_file(topology: Topology, path: str | Path) -> None:
    Path(path).write_text(format_topology(topology))


def _node_token(token: str) -> NodeId:
    try:
        return int(token)
    except ValueError:
        return token


def read_topology_file(path: str | Path, frame: FrameParams, channel: ChannelModel) -> Topology:
    """Parse the line-oriented topology format, then assign hop IDs and
    ranks.  Parse failures name the offending line."""
    path = Path(path)
    try:
        raw_lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read topology {path}: {exc}") from exc

    nodes: list[Node] = []
    links: dict[tuple[NodeId, NodeId], BitErrorRate] = {}
    declared = None
    gateway: NodeId | None = None
    known: set[NodeId] = set()
    for lineno, line in enumerate(raw_lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        where = f"{path}:{lineno}"
        if tokens[0] == "nodes":
            if len(tokens) != 4 or tokens[2] != "gateway":
                raise ConfigError(f"{where}: header must be 'nodes N gateway G'")
            try:
                declared = int(tokens[1])
            except ValueError:
                raise ConfigError(f"{where}: bad node count {tokens[1]!r}") from None
            gateway = _node_token(tokens[3])
        elif tokens[0] == "node":
            if len(tokens) != 4:
                raise ConfigError(f"{where}: node line must be 'node id x y'")
            nid = _node_token(tokens[1])
            try:
                x, y = float(tokens[2]), float(tokens[3])
            except ValueError:
                raise ConfigError(f"{where}: bad coordinates") from None
            if nid in known:
                raise ConfigError(f"{where}: duplicate node id {nid!r}")
            known.add(nid)
            nodes.append(Node(id=nid, rank=1.0, hop_id=0, position=(x, y)))
        elif tokens[0] == "link":
            if len(tokens) != 4:
                raise ConfigError(f"{where}: link line must be 'link a b p'")
            a, b = _node_token(tokens[1]), _node_token(tokens[2])
            for end in (a, b):
                if end not in known:
                    raise ConfigError(f"{where}: link refers to unknown node {end!r}")
            try:
                ber = BitErrorRate(float(tokens[3]))
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from exc
            links[(a, b)] = ber
            links[(b, a)] = ber
        else:
            raise ConfigError(f"{where}: unknown directive {tokens[0]!r}")

    if gateway is None:
        raise ConfigError(f"{path}: missing 'nodes N gateway G' header")
    if declared != len(nodes):
        raise ConfigError(f"{path}: header declares {declared} nodes, file has {len(nodes)}")
    if gateway not in known:
        raise ConfigError(f"{path}: gateway {gateway!r} has no node line")
    try:
        built = Topology(nodes=tuple(nodes), gateway=gateway, links=links, frame=frame, channel=channel)
        return topo.compute_ranks(topo.assign_hop_ids(built))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# -------------------------------------------------------------- emission --


def _provenance(seed: int, digest: str) -> str:
    return f"seed={seed} config={digest} retransmissions_convention={RETRY_CONVENTION}"


def _csv_preamble(seed: int, digest: str) -> list[str]:
    return [
        f"# seed={seed}",
        f"# config={digest}",
        f"# retransmissions_convention={RETRY_CONVENTION} (f / (1 - f); the first attempt is not a retry)",
    ]


def _guarded_cost(fs: ForwarderSet) -> float:
    try:
        return analysis.total_path_cost(fs)
    except analysis.UnreachableForwarderSetError:
        return float("inf")


def _guarded_retransmissions(failure: float) -> float:
    if failure >= 1.0:
        return float("inf")
    return analysis.expected_retransmissions(failure)


def _topology_for_run(cfg: dict, frame: FrameParams, channel: ChannelModel) -> Topology:
    built = build_topology(cfg, frame, channel)
    violations = validate(built)
    if violations:
        raise ConfigError(
            "invalid topology: " + "; ".join(f"[{v.code}] {v.message}" for v in violations)
        )
    return built


def _resolve_source(topology_obj: Topology, sim: dict) -> NodeId | None:
    source = sim["source"]
    if source is not None:
        topology_obj.node(source)
        return source
    return None


# ------------------------------------------------------------- analyze --


def cmd_analyze(cfg: dict) -> str:
    frame = parse_frame(cfg)
    channel = parse_channel(cfg)
    sim = parse_sim(cfg)
    digest = config_digest(cfg)
    suffix = _provenance(sim["seed"], digest)
    lines: list[str] = []

    explicit = cfg.get("forwarder_sets")
    if explicit is not None:
        if not isinstance(explicit, list) or not explicit:
            raise ConfigError("forwarder_sets must be a non-empty list")
        for i, raw_set in enumerate(explicit):
            if not isinstance(raw_set, list) or not raw_set:
                raise ConfigError(f"forwarder_sets[{i}] must be a non-empty list of entries")
            entries = []
            for j, raw in enumerate(raw_set):
                if not isinstance(raw, dict):
                    raise ConfigError(f"forwarder_sets[{i}][{j}] must be a mapping")
                try:
                    entries.append(
                        ForwarderEntry(
                            node=raw.get("node", j),
                            p_link=float(raw.get("p_link", 1.0)),
                            remaining_cost=float(raw.get("remaining_cost", 0.0)),
                        )
                    )
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"forwarder_sets[{i}][{j}]: {exc}") from exc
            fs = ForwarderSet(tuple(entries))
            failure = analysis.set_failure_probability(fs)
            lines.append(
                f"set index={i} size={len(fs)}"
                f" cost={_fmt(_guarded_cost(fs))}"
                f" overhead={_fmt(analysis.coordination_overhead(fs))}"
                f" failure={_fmt(failure)} retransmissions={_fmt(_guarded_retransmissions(failure))} {suffix}"
            )

    if "topology" in cfg:
        topology_obj = _topology_for_run(cfg, frame, channel)
        costs = analysis.network_path_costs(topology_obj)
        p_sw = channel.evaluated.p_sw
        lines.append(
            f"topology nodes={len(topology_obj.nodes)}"
            f" links={len(topology_obj.links) // 2} gateway={topology_obj.gateway} {suffix}"
        )
        seen = set()
        for a, b in sorted(topology_obj.links, key=lambda k: (str(k[0]), str(k[1]))):
            if (b, a) in seen:
                continue
            seen.add((a, b))
            ber = topology_obj.ber(a, b)
            lines.append(
                f"link a={a} b={b} ber={_fmt(ber)}"
                f" preamble_miss={_fmt(analysis.preamble_miss_probability(ber, frame))}"
                f" data_miss={_fmt(analysis.data_miss_probability(ber, frame))}"
                f" failure={_fmt(analysis.failure_probability(ber, frame, p_sw))}"
                f" success={_fmt(analysis.link_success(ber, frame, p_sw))} {suffix}"
            )
        for node in topology_obj.nodes:
            base = (
                f"node id={node.id} hop_id={node.hop_id} rank={_fmt(node.rank)}"
                f" cost={_fmt(costs[node.id])}"
            )
            if node.id != topology_obj.gateway:
                fs = topo.forwarder_set(topology_obj, node.id, costs)
                failure = analysis.set_failure_probability(fs)
                base += (
                    f" overhead={_fmt(analysis.coordination_overhead(fs))}"
                    f" failure={_fmt(failure)} retransmissions={_fmt(_guarded_retransmissions(failure))}"
                )
            base += (
                f" hop_distance_gateway={topo.hop_distance(topology_obj, node.id, topology_obj.gateway)}"
                f" rank_distance_gateway={_fmt(topo.rank_difference_distance(topology_obj, node.id, topology_obj.gateway))}"
            )
            lines.append(base + f" {suffix}")
        for i, ch in enumerate(channel.channels):
            lines.append(
                f"channel index={i} p_sw={_fmt(ch.p_sw)} p_acc={_fmt(ch.p_acc)}"
                f" bandwidth_hz={_fmt(ch.bandwidth_hz)}"
                f" potential_bandwidth_hz={_fmt(analysis.potential_bandwidth(ch.p_acc, ch.bandwidth_hz))}"
                f" noise_power={_fmt(channel.noise_power)} {suffix}"
            )

    if not lines:
        raise ConfigError("nothing to analyze: provide a topology or forwarder_sets")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- simulate --


def _sim_config(sim: dict, mode: engine.ProtocolMode, source: NodeId | None) -> engine.SimConfig:
    return engine.SimConfig(
        mode=mode,
        replications=sim["replications"],
        seed=sim["seed"],
        source=source,
        max_hops=sim["max_hops"],
        election_slots=sim["election_slots"],
        suppression=sim["suppression"],
    )


def cmd_simulate(cfg: dict) -> str:
    frame = parse_frame(cfg)
    channel = parse_channel(cfg)
    sim = parse_sim(cfg)
    digest = config_digest(cfg)
    topology_obj = _topology_for_run(cfg, frame, channel)
    source = _resolve_source(topology_obj, sim)

    rows = [
        "mode,replications,pdr,mean_duplicates,mean_transmissions,mean_hops,"
        "empirical_overhead,mean_energy_bits,hop_energy_ratio,seed,config"
    ]
    for mode in _MODES[sim["mode"]]:
        metrics = engine.run_experiment(topology_obj, _sim_config(sim, mode, source))
        mean_energy = metrics.mean_transmissions * frame.bits_per_transmission
        ratio = metrics.mean_hops / mean_energy if mean_energy > 0 else 0.0
        rows.append(
            ",".join(
                [
                    mode.value,
                    str(metrics.deliveries_attempted),
                    _fmt(metrics.pdr),
                    _fmt(metrics.mean_duplicates),
                    _fmt(metrics.mean_transmissions),
                    _fmt(metrics.mean_hops),
                    _fmt(metrics.empirical_coordination_overhead),
                    _fmt(mean_energy),
                    _fmt(ratio),
                    str(sim["seed"]),
                    digest,
                ]
            )
        )
    return "\n".join(_csv_preamble(sim["seed"], digest) + rows) + "\n"


# ---------------------------------------------------------------- sweep --


_SWEEP_AXES = ("forwarders", "ber", "p_sw", "preamble_frames", "data_frame_bits")


def _swept_topology(
    cfg: dict, frame: FrameParams, channel: ChannelModel, axis: str, value
) -> tuple[Topology, FrameParams, ChannelModel]:
    if axis == "preamble_frames":
        frame = FrameParams(frame.micro_frame_bits, int(value), frame.data_frame_bits)
    elif axis == "data_frame_bits":
        frame = FrameParams(frame.micro_frame_bits, frame.preamble_frames, int(value))
    elif axis == "p_sw":
        first = channel.channels[0]
        swapped = (Channel(float(value), first.p_acc, first.bandwidth_hz),) + channel.channels[1:]
        channel = ChannelModel(channels=swapped, noise_power=channel.noise_power)
    built = _topology_for_run(cfg, frame, channel)
    if axis == "ber":
        ber = BitErrorRate(float(value))
        links = {key: ber for key in built.links}
        from dataclasses import replace

        built = topo.compute_ranks(topo.assign_hop_ids(replace(built, links=links)))
    return built, frame, channel


def cmd_sweep(cfg: dict) -> str:
    sweep = _section(cfg, "sweep")
    if not sweep:
        raise ConfigError("missing 'sweep' section")
    axis = sweep.get("parameter")
    if isinstance(axis, list):
        raise ConfigError("single-axis sweeps only: 'parameter' must be one name")
    if axis not in _SWEEP_AXES:
        raise ConfigError(f"sweep.parameter must be one of {_SWEEP_AXES}, got {axis!r}")
    values = sweep.get("values")
    if values is None or not isinstance(values, list):
        raise ConfigError("sweep.values must be a list")
    if not values:
        raise ConfigError("empty sweep: no values to run")

    frame = parse_frame(cfg)
    channel = parse_channel(cfg)
    sim = parse_sim(cfg)
    digest = config_digest(cfg)
    topo_section = _section(cfg, "topology")

    header = [
        axis,
        "analytic_overhead",
        "empirical_overhead",
        "pdr",
        "mean_duplicates",
        "retransmissions",
        "mean_transmissions",
        "mode",
        "seed",
        "config",
    ]
    rows = [",".join(header)]
    for value in values:
        if axis == "forwarders":
            if topo_section.get("kind") != "star":
                raise ConfigError("sweeping 'forwarders' requires topology.kind 'star'")
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"forwarder counts must be positive integers, got {value!r}")
            p_link = _opt(topo_section, "topology", "p_link", None, float)
            if p_link is None:
                raise ConfigError("topology kind 'star' needs p_link")
            remaining = _opt(topo_section, "topology", "remaining_cost", 1.0, float)
            built = topo.star_topology(
                value,
                p_link,
                remaining_cost=remaining,
                intercandidate_ber=_opt(topo_section, "topology", "intercandidate_ber", 0.0, float),
                frame=frame,
                channel=channel,
            )
            # the declared per-candidate delivery probability and remaining
            # cost define the analytic set; the builder realizes the same
            # probability inside the simulator
            analytic = ForwarderSet(
                tuple(
                    ForwarderEntry(node=r, p_link=p_link, remaining_cost=remaining)
                    for r in range(1, value + 1)
                )
            )
            source: NodeId | None = value + 1
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"sweep values must be numbers, got {value!r}")
            built, row_frame, _ = _swept_topology(cfg, frame, channel, axis, value)
            source = sim["source"]
            if source is None:
                source = topo.deepest_node(built)
            costs = analysis.network_path_costs(built)
            analytic = topo.forwarder_set(built, source, costs)

        analytic_overhead = analysis.coordination_overhead(analytic)
        failure = analysis.set_failure_probability(analytic)
        retries = _guarded_retransmissions(failure)
        for mode in _MODES[sim["mode"]]:
            metrics = engine.run_experiment(built, _sim_config(sim, mode, source))
            rows.append(
                ",".join(
                    [
                        _fmt(value),
                        _fmt(analytic_overhead),
                        _fmt(metrics.empirical_coordination_overhead),
                        _fmt(metrics.pdr),
                        _fmt(metrics.mean_duplicates),
                        _fmt(retries),
                        _fmt(metrics.mean_transmissions),
                        mode.value,
                        str(sim["seed"]),
                        digest,
                    ]
                )
            )
    return "\n".join(_csv_preamble(sim["seed"], digest) + rows) + "\n"


# --------------------------------------------------------------- verify --


def _parse_grid(spec: str | None):
    sizes = list(DEFAULT_VERIFY_SIZES)
    probs = list(DEFAULT_VERIFY_PROBS)
    costs = list(DEFAULT_VERIFY_COSTS)
    if spec:
        for part in spec.split(";"):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ConfigError(f"bad grid fragment {part!r}; expected key=values")
            key, _, body = part.partition("=")
            key = key.strip()
            body = body.strip()
            items = [i for i in body.split(",") if i.strip()]
            if key == "sizes":
                sizes = []
                for item in items:
                    if "-" in item:
                        lo, _, hi = item.partition("-")
                        try:
                            sizes.extend(range(int(lo), int(hi) + 1))
                        except ValueError:
                            raise ConfigError(f"bad size range {item!r}") from None
                    else:
                        try:
                            sizes.append(int(item))
                        except ValueError:
                            raise ConfigError(f"bad size {item!r}") from None
            elif key in ("probs", "costs"):
                try:
                    parsed = [float(i) for i in items]
                except ValueError:
                    raise ConfigError(f"bad {key} list {body!r}") from None
                if key == "probs":
                    probs = parsed
                else:
                    costs = parsed
            else:
                raise ConfigError(f"unknown grid key {key!r}")
    if not sizes or not probs or not costs:
        raise ConfigError("empty verification grid")
    if any(s < 1 for s in sizes):
        raise ConfigError("grid sizes must be >= 1")
    return sizes, probs, costs


def run_verification(
    grid: str | None = None, trials: int = 200_000, seed: int = 20_240
) -> tuple[str, int]:
    """Closed-form versus oracle checks; returns (report, exit_code)."""
    sizes, probs, costs = _parse_grid(grid)
    lines: list[str] = []
    breaches: list[str] = []

    sets_checked = 0
    max_err = 0.0
    for n in sizes:
        for prob_combo in product(probs, repeat=n):
            for cost_combo in product(costs, repeat=n):
                fs = ForwarderSet(
                    tuple(
                        ForwarderEntry(node=i, p_link=p, remaining_cost=y)
                        for i, (p, y) in enumerate(zip(prob_combo, cost_combo))
                    )
                )
                exact = oracle.exact_single_hop(fs)
                closed_overhead = analysis.coordination_overhead(fs)
                err = abs(closed_overhead - exact.overhead)
                if math.isinf(exact.expected_cost):
                    try:
                        analysis.total_path_cost(fs)
                        breaches.append(
                            "verify breach case=single-hop-grid"
                            f" probs={prob_combo} costs={cost_combo}"
                            " closed-form accepted an unreachable set"
                        )
                    except analysis.UnreachableForwarderSetError:
                        pass
                else:
                    err = max(err, abs(analysis.total_path_cost(fs) - exact.expected_cost))
                max_err = max(max_err, err)
                sets_checked += 1
                if err > SINGLE_HOP_TOLERANCE:
                    breaches.append(
                        "verify breach case=single-hop-grid"
                        f" probs={prob_combo} costs={cost_combo}"
                        f" closed=({_fmt(_guarded_cost(fs))}, {_fmt(closed_overhead)})"
                        f" oracle=({_fmt(exact.expected_cost)}, {_fmt(exact.overhead)})"
                        f" error={err:.3e}"
                    )
    lines.append(
        f"verify case=single-hop-grid sets={sets_checked} max_abs_error={max_err:.3e}"
        f" tolerance={SINGLE_HOP_TOLERANCE:g}"
        f" status={'pass' if max_err <= SINGLE_HOP_TOLERANCE else 'fail'}"
    )

    compositions = [
        ("lossless-two-hop", [1.0, 1.0], 2.0),
        ("partial-two-hop", [0.8, 0.8], 2.5),
        ("single-lossy-hop", [0.5], 2.0),
    ]
    comp_err = 0.0
    for name, successes, expected in compositions:
        chain = topo.chain_topology(successes)
        far = len(successes)
        closed = analysis.network_path_costs(chain)[far]
        spec_links = {
            node: ((node - 1, analysis.link_success(chain.ber(node, node - 1), chain.frame, 1.0)),)
            for node in range(1, far + 1)
        }
        exact_cost = oracle.exact_two_hop(oracle.ChainSpec(source=far, gateway=0, links=spec_links))
        err = max(abs(closed - exact_cost), abs(closed - expected))
        comp_err = max(comp_err, err)
        if err > COMPOSITION_TOLERANCE:
            breaches.append(
                f"verify breach case=two-hop-composition scenario={name}"
                f" closed={_fmt(closed)} oracle={_fmt(exact_cost)} expected={_fmt(expected)}"
            )
    lines.append(
        f"verify case=two-hop-composition scenarios={len(compositions)}"
        f" max_abs_error={comp_err:.3e} tolerance={COMPOSITION_TOLERANCE:g}"
        f" status={'pass' if comp_err <= COMPOSITION_TOLERANCE else 'fail'}"
    )

    frame = topo.DEFAULT_FRAME
    p = 0.01
    estimates = oracle.bit_level_frame_oracle(p, frame, trials, seed)
    closed_factors = {
        "preamble_miss": analysis.preamble_miss_probability(p, frame),
        "data_miss": analysis.data_miss_probability(p, frame),
        "joint_miss": analysis.failure_probability(p, frame, 1.0),
    }
    max_sigma = 0.0
    for name, closed_value in closed_factors.items():
        est = getattr(estimates, name)
        se = math.sqrt(closed_value * (1.0 - closed_value) / trials)
        sigma = abs(est - closed_value) / se if se > 0 else 0.0
        max_sigma = max(max_sigma, sigma)
        if sigma > FRAME_SIGMA_TOLERANCE:
            breaches.append(
                f"verify breach case=bit-level-frames factor={name}"
                f" closed={_fmt(closed_value)} estimate={_fmt(est)} sigma={sigma:.2f}"
            )
    lines.append(
        f"verify case=bit-level-frames trials={trials} max_sigma={max_sigma:.2f}"
        f" tolerance={FRAME_SIGMA_TOLERANCE:g}"
        f" status={'pass' if max_sigma <= FRAME_SIGMA_TOLERANCE else 'fail'}"
    )

    lines.extend(breaches)
    code = 2 if breaches else 0
    lines.append(f"verify result={'fail' if breaches else 'pass'} breaches={len(breaches)}")
    return "\n".join(lines) + "\n", code


# ----------------------------------------------------------------- main --


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="oppsim",
        description="Analyze and simulate receiver-based opportunistic forwarding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analyze", "closed-form records for a topology or explicit forwarder sets"),
        ("simulate", "packet-level replications, metrics as CSV"),
        ("sweep", "one-axis parameter sweep, analytic and empirical columns"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name != "verify":
            p.add_argument("config", help="YAML config file")
        p.add_argument("--out", help="write output to this file instead of stdout")
    pv = sub.add_parser("verify", help="closed-form vs oracle verification grid")
    pv.add_argument("--grid", help="override, e.g. 'sizes=1-3;probs=0,0.5,1;costs=0,1'")
    pv.add_argument("--trials", type=int, default=200_000, help="bit-level oracle trials")
    pv.add_argument("--seed", type=int, default=20_240, help="bit-level oracle seed")
    pv.add_argument("--out", help="write output to this file instead of stdout")

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            if args.trials < 1:
                raise ConfigError("--trials must be >= 1")
            report, code = run_verification(args.grid, args.trials, args.seed)
            _write_output(report, args.out)
            return code
        cfg = load_config(args.config)
        if args.command == "analyze":
            text = cmd_analyze(cfg)
        elif args.command == "simulate":
            text = cmd_simulate(cfg)
        else:
            text = cmd_sweep(cfg)
        _write_output(text, args.out)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (analysis.DisconnectedNodeError, analysis.UnreachableForwarderSetError,
            topo.DisconnectedTopologyError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
