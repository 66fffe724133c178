"""Scenario file parsing and validation.

Flat sectioned key-value text, one scenario per file:

    [topology]
    grid = 3 6
    spacing = 2.5 2.8
    tx_range = 3.0
    latency_range = 5 15
    # or an explicit survey:
    # node = 0 0.0 0.0
    # link = 0 1 [latency_ms]

    [data]
    consumer_fraction = 0.35
    rate_range = 1 8
    piece_size_bytes = 9
    # piece = id source consumer rate      (explicit pieces)

    [energy]
    initial_range = 1600000 4000000
    cfg_reserve = 18
    cost_per_byte = 1
    controller_cost_ratio = 1000
    integer_units = true

    [protocol]
    kind = distr                 # distr | pdd | pdd_cr | rpl_ns, comma list, or all
    ttl = 2
    l_max_ms = 100
    controller_latency_ms = 100
    k_paths = 10

    [events]
    fail = 3000 7
    interfere = 2000 3 4 3.0 [duration]
    revive = 9000 7 1.0
    activate = 5000 9 2 15 4     # t piece_id source consumer rate
    gen_failures = 6 2700 4500 1400 2600
    gen_revive_delay = 1500 3000
    gen_interference = 0.02 3.0 1
    initially_offline = 4 9

    [run]
    horizon = 20000
    replications = 20
    base_seed = 1
    bucket_fraction = 0.01
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import ConsumerActivation, InterferenceSpike, NodeFailure, NodeRevival
from .topology import DataPiece

_SECTIONS = ("topology", "data", "energy", "protocol", "events", "run")

_KNOWN_KEYS = {
    "topology": {"grid", "spacing", "tx_range", "latency_range", "node", "link"},
    "data": {"consumer_fraction", "rate_range", "piece_size_bytes",
             "feasibility_margin", "piece"},
    "energy": {"initial_range", "cfg_reserve", "cost_per_byte",
               "controller_cost_ratio", "integer_units"},
    "protocol": {"kind", "ttl", "l_max_ms", "aodv_timeout_intervals",
                 "controller_latency_ms", "k_paths", "repair_latency_slack"},
    "events": {"fail", "interfere", "revive", "activate", "gen_failures",
               "gen_revive_delay", "gen_interference", "initially_offline"},
    "run": {"horizon", "replications", "base_seed", "bucket_fraction"},
}

PROTOCOL_NAMES = ("distr", "pdd", "pdd_cr", "rpl_ns")


class ScenarioError(ValueError):
    """Validation failure; carries (line_number, message) entries."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in self.errors))


@dataclass
class ScenarioConfig:
    # topology
    grid_rows: int = 3
    grid_cols: int = 6
    spacing_x: float = 2.5
    spacing_y: float = 2.8
    tx_range: float = 3.0
    latency_lo: float = 5.0
    latency_hi: float = 15.0
    latency_overrides: dict = field(default_factory=dict)
    explicit_nodes: list = field(default_factory=list)   # (id, x, y)
    explicit_links: list = field(default_factory=list)   # (u, v)
    # data
    consumer_fraction: float = 0.35
    rate_lo: int = 1
    rate_hi: int = 8
    piece_size_bytes: int = 9
    feasibility_margin: float = 0.6  # generated pairs start within this
                                     # fraction of the latency budget
    explicit_pieces: list = field(default_factory=list)  # (id, src, dst, rate)
    late_piece_ids: set = field(default_factory=set)
    # energy
    energy_lo: float = 1_600_000
    energy_hi: float = 4_000_000
    cfg_reserve: float = 18.0
    cost_per_byte: float = 1.0
    controller_cost_ratio: float = 1000.0
    integer_units: bool = True
    # protocol
    kinds: list = field(default_factory=lambda: ["distr"])
    ttl: int = 2
    repair_latency_slack: float = 0.25  # bridge may be 'similar': within
                                        # this fraction above the old segment
    l_max_ms: float = 100.0
    aodv_timeout: int | None = None
    controller_latency_ms: float = 100.0
    k_paths: int = 10
    # events
    explicit_events: list = field(default_factory=list)
    gen_failures: tuple | None = None
    gen_revive: tuple | None = None
    gen_interference: tuple | None = None
    initially_offline: list = field(default_factory=list)
    # run
    horizon: int = 20000
    replications: int = 20
    base_seed: int = 1
    bucket_fraction: float = 0.01


def _parse_bool(raw):
    low = raw.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def parse_scenario(text) -> ScenarioConfig:
    """Parse and validate; raises ScenarioError with line numbers."""
    cfg = ScenarioConfig()
    errors = []
    section = None
    seen_topology = False
    explicit_piece_mode = False
    late = []

    def err(ln, msg):
        errors.append((ln, msg))

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                err(ln, f"unknown section [{section}]")
                section = None
            elif section == "topology":
                seen_topology = True
            continue
        if "=" not in line:
            err(ln, "expected key = value")
            continue
        if section is None:
            err(ln, "key outside any section")
            continue
        key, _, raw_val = line.partition("=")
        key = key.strip().lower()
        val = raw_val.strip()
        if key not in _KNOWN_KEYS[section]:
            err(ln, f"unknown key {key!r} in [{section}]")
            continue
        try:
            _apply(cfg, section, key, val, late)
        except (ValueError, IndexError) as exc:
            err(ln, f"{key}: {exc}")

    if not seen_topology:
        errors.append((0, "missing [topology] section"))
    _validate(cfg, errors)
    if errors:
        raise ScenarioError(errors)
    cfg.late_piece_ids = set(late)
    return cfg


def _apply(cfg, section, key, val, late):
    parts = val.split()
    if section == "topology":
        if key == "grid":
            cfg.grid_rows, cfg.grid_cols = int(parts[0]), int(parts[1])
        elif key == "spacing":
            cfg.spacing_x, cfg.spacing_y = float(parts[0]), float(parts[1])
        elif key == "tx_range":
            cfg.tx_range = float(val)
        elif key == "latency_range":
            cfg.latency_lo, cfg.latency_hi = float(parts[0]), float(parts[1])
        elif key == "node":
            cfg.explicit_nodes.append((int(parts[0]), float(parts[1]), float(parts[2])))
        elif key == "link":
            u, v = int(parts[0]), int(parts[1])
            cfg.explicit_links.append((u, v))
            if len(parts) > 2:
                cfg.latency_overrides[(u, v)] = float(parts[2])
    elif section == "data":
        if key == "consumer_fraction":
            cfg.consumer_fraction = float(val)
        elif key == "rate_range":
            cfg.rate_lo, cfg.rate_hi = int(parts[0]), int(parts[1])
        elif key == "piece_size_bytes":
            cfg.piece_size_bytes = int(val)
        elif key == "feasibility_margin":
            cfg.feasibility_margin = float(val)
        elif key == "piece":
            cfg.explicit_pieces.append((int(parts[0]), int(parts[1]),
                                        int(parts[2]), int(parts[3])))
    elif section == "energy":
        if key == "initial_range":
            cfg.energy_lo, cfg.energy_hi = float(parts[0]), float(parts[1])
        elif key == "cfg_reserve":
            cfg.cfg_reserve = float(val)
        elif key == "cost_per_byte":
            cfg.cost_per_byte = float(val)
        elif key == "controller_cost_ratio":
            cfg.controller_cost_ratio = float(val)
        elif key == "integer_units":
            cfg.integer_units = _parse_bool(val)
    elif section == "protocol":
        if key == "kind":
            names = [k.strip().lower() for k in val.split(",")]
            if names == ["all"]:
                names = list(PROTOCOL_NAMES)
            cfg.kinds = names
        elif key == "ttl":
            cfg.ttl = int(val)
        elif key == "l_max_ms":
            cfg.l_max_ms = float(val)
        elif key == "aodv_timeout_intervals":
            cfg.aodv_timeout = int(val)
        elif key == "controller_latency_ms":
            cfg.controller_latency_ms = float(val)
        elif key == "k_paths":
            cfg.k_paths = int(val)
        elif key == "repair_latency_slack":
            cfg.repair_latency_slack = float(val)
    elif section == "events":
        if key == "fail":
            cfg.explicit_events.append(NodeFailure(int(parts[0]), int(parts[1])))
        elif key == "interfere":
            dur = int(parts[4]) if len(parts) > 4 else None
            u = None if parts[1] == "*" else int(parts[1])
            v = None if parts[2] == "*" else int(parts[2])
            cfg.explicit_events.append(InterferenceSpike(
                int(parts[0]), u, v, float(parts[3]), dur))
        elif key == "revive":
            frac = float(parts[2]) if len(parts) > 2 else 1.0
            cfg.explicit_events.append(NodeRevival(int(parts[0]), int(parts[1]), frac))
        elif key == "activate":
            t, pid, src, dst, rate = (int(x) for x in parts[:5])
            piece = DataPiece(pid, src, dst, rate)
            cfg.explicit_pieces.append((pid, src, dst, rate))
            late.append(pid)
            cfg.explicit_events.append(ConsumerActivation(t, (piece,)))
        elif key == "gen_failures":
            cfg.gen_failures = tuple(int(x) for x in parts[:5])
        elif key == "gen_revive_delay":
            frac = float(parts[2]) if len(parts) > 2 else 1.0
            cfg.gen_revive = (int(parts[0]), int(parts[1]), frac)
        elif key == "gen_interference":
            dur = int(parts[2]) if len(parts) > 2 else 1
            cfg.gen_interference = (float(parts[0]), float(parts[1]), dur)
        elif key == "initially_offline":
            cfg.initially_offline = [int(x) for x in parts]
    elif section == "run":
        if key == "horizon":
            cfg.horizon = int(val)
        elif key == "replications":
            cfg.replications = int(val)
        elif key == "base_seed":
            cfg.base_seed = int(val)
        elif key == "bucket_fraction":
            cfg.bucket_fraction = float(val)


def _validate(cfg, errors):
    def check(ok, msg):
        if not ok:
            errors.append((0, msg))

    if cfg.explicit_nodes:
        ids = [n for n, _x, _y in cfg.explicit_nodes]
        check(sorted(ids) == list(range(len(ids))), "explicit node ids must be 0..n-1")
    else:
        check(cfg.grid_rows >= 1 and cfg.grid_cols >= 1, "grid dimensions must be positive")
        check(cfg.grid_rows * cfg.grid_cols >= 2, "need at least two nodes")
        check(cfg.spacing_x > 0 and cfg.spacing_y > 0, "grid spacings must be positive")
    check(cfg.tx_range > 0, "tx_range must be positive")
    check(0 < cfg.latency_lo <= cfg.latency_hi, "latency range must be positive and ordered")
    check(0 < cfg.consumer_fraction <= 1.0 or cfg.explicit_pieces,
          "consumer_fraction must be in (0, 1]")
    check(1 <= cfg.rate_lo <= cfg.rate_hi, "rate range must be ordered and >= 1")
    check(cfg.piece_size_bytes > 0, "piece size must be positive")
    check(0 < cfg.feasibility_margin <= 1, "feasibility_margin must be in (0, 1]")
    check(0 < cfg.energy_lo <= cfg.energy_hi, "energy range must be positive and ordered")
    check(cfg.cfg_reserve >= 0, "cfg_reserve must be non-negative")
    check(cfg.cost_per_byte > 0, "cost_per_byte must be positive")
    check(cfg.controller_cost_ratio > 1, "controller_cost_ratio must exceed 1")
    for k in cfg.kinds:
        check(k in PROTOCOL_NAMES, f"unknown protocol kind {k!r}")
    check(cfg.ttl >= 1, "ttl must be at least 1")
    check(cfg.l_max_ms > 0, "l_max_ms must be positive")
    check(cfg.k_paths >= 1, "k_paths must be at least 1")
    check(cfg.repair_latency_slack >= 0, "repair_latency_slack must be >= 0")
    check(cfg.horizon >= 1, "horizon must be at least 1")
    check(cfg.replications >= 1, "replications must be at least 1")
    check(0 < cfg.bucket_fraction <= 1, "bucket_fraction must be in (0, 1]")
    if cfg.gen_interference:
        frac = cfg.gen_interference[0]
        check(0 <= frac < 1, "interference fraction must be in [0, 1)")


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
