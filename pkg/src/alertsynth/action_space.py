"""Action space definition and alert-to-action mapping tables.

An action is the categorical encoding of one alert in its stream context,
with four components: intent category (how), service (what), maneuver
(where), and elapsed-time bin (when).  This module owns the vocabularies of
all four components and the config-loaded lookup tables that map raw alert
fields onto them.
"""

import ipaddress
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple


class ConfigError(Exception):
    """Fatal configuration problem; raised before the pipeline starts."""


# Default intent-category vocabulary.  The list is closed per run but
# loadable from config, so its size is not hard-coded anywhere else.
DEFAULT_AIS_CATEGORIES: Tuple[str, ...] = (
    "Benign",
    "Discovery",
    "VulnerabilityDiscovery",
    "BruteForce",
    "PrivilegeEscalation",
    "ArbitraryCodeExecution",
    "Persistence",
    "DefenseEvasion",
    "Collection",
    "DataExfiltration",
    "CommandAndControl",
    "Disruption",
)

DIRECTIONS: Tuple[str, ...] = ("inbound", "outbound", "internal")

TRANSITIONS: Tuple[str, ...] = (
    "stream_start",
    "same_src_same_dst",
    "same_src_new_dst",
    "new_src_same_dst",
    "src_is_last_dst",
    "dst_is_last_src",
    "internal_pivot",
)

# 3 directions x 7 transitions, fixed 21-cell vocabulary.
MANEUVER_LABELS: Tuple[str, ...] = tuple(
    f"{d}:{t}" for d in DIRECTIONS for t in TRANSITIONS)

# Elapsed-time bins, closed-left / open-right, plus the stream-start sentinel.
TIME_BIN_LABELS: Tuple[str, ...] = (
    "stream_start",
    "0s_to_1ms",
    "1ms_to_100ms",
    "100ms_to_1s",
    "1s_to_10s",
    "10s_to_60s",
    "60s_to_600s",
    "600s_to_1h",
    "1h_to_6h",
    "6h_plus",
)
_BIN_EDGES: Tuple[float, ...] = (0.001, 0.1, 1.0, 10.0, 60.0, 600.0, 3600.0, 21600.0)

EPHEMERAL_PORT_FLOOR = 49152

# Component order used for every per-component vector in the package.
COMPONENTS: Tuple[str, ...] = ("ais", "service", "maneuver", "timebin")


@dataclass(frozen=True)
class WeightConfig:
    """Per-component weights (w_a, w_s, w_v, w_t), normalized to sum 1."""

    w_a: float
    w_s: float
    w_v: float
    w_t: float

    @classmethod
    def normalized(cls, w_a: float, w_s: float, w_v: float, w_t: float) -> "WeightConfig":
        raw = (w_a, w_s, w_v, w_t)
        if any(w < 0 for w in raw):
            raise ConfigError(f"negative component weight in {raw}")
        total = sum(raw)
        if total <= 0:
            raise ConfigError("component weights sum to zero")
        return cls(*(w / total for w in raw))

    @property
    def vector(self) -> Tuple[float, float, float, float]:
        return (self.w_a, self.w_s, self.w_v, self.w_t)


@dataclass(frozen=True)
class Action:
    """One alert encoded as a point in the action space.

    Component values are stored as vocabulary indices; the mapping tables
    hold the index-to-label correspondence.
    """

    __slots__ = ("ais", "service", "maneuver", "timebin", "ts", "stream_id", "raw_seq")

    ais: int
    service: int
    maneuver: int
    timebin: int
    ts: int            # microseconds since epoch, UTC
    stream_id: str
    raw_seq: int


class Homenet:
    """Set of CIDR ranges defining which addresses count as internal."""

    def __init__(self, networks: Sequence) -> None:
        self._v4: List[Tuple[int, int]] = []
        self._v6: List[Tuple[int, int]] = []
        for net in networks:
            masked = (int(net.network_address), int(net.netmask))
            if net.version == 4:
                self._v4.append(masked)
            else:
                self._v6.append(masked)

    def contains(self, ip: str) -> bool:
        version, value = _ip_key(ip)
        ranges = self._v4 if version == 4 else self._v6
        return any(value & mask == base for base, mask in ranges)


@lru_cache(maxsize=1 << 20)
def _ip_key(ip: str) -> Tuple[int, int]:
    addr = ipaddress.ip_address(ip)
    return addr.version, int(addr)


class MappingTables:
    """Immutable lookup tables built once at startup and shared read-only."""

    def __init__(self, ais_by_id: Dict[int, str], keyword_rules: List[Tuple[str, str]],
                 port_labels: Dict[Tuple[int, str], str], homenet: Homenet,
                 ais_categories: Sequence[str]) -> None:
        self.ais_by_id = ais_by_id
        self.keyword_rules = keyword_rules
        self.port_labels = port_labels
        self.homenet = homenet

        self.ais_labels: Tuple[str, ...] = tuple(ais_categories)
        table_labels = sorted(set(port_labels.values()))
        self.service_labels: Tuple[str, ...] = tuple(table_labels) + (
            "ephemeral", "reserved", "other")
        self.maneuver_labels = MANEUVER_LABELS
        self.timebin_labels = TIME_BIN_LABELS

        self._ais_index = {name: i for i, name in enumerate(self.ais_labels)}
        self._service_index = {name: i for i, name in enumerate(self.service_labels)}
        if "Discovery" not in self._ais_index:
            raise ConfigError("intent categories must include Discovery (the default)")
        self._default_ais = self._ais_index["Discovery"]
        self._service_cache: Dict[Tuple[Optional[int], str], int] = {}

        for rules in (self.ais_by_id.values(), (a for _, a in keyword_rules)):
            for name in rules:
                if name not in self._ais_index:
                    raise ConfigError(f"unknown intent category {name!r} in mapping")

    @property
    def cardinalities(self) -> Tuple[int, int, int, int]:
        return (len(self.ais_labels), len(self.service_labels),
                len(self.maneuver_labels), len(self.timebin_labels))

    @property
    def vocabularies(self) -> Tuple[Tuple[str, ...], ...]:
        return (self.ais_labels, self.service_labels,
                self.maneuver_labels, self.timebin_labels)

    def ais_index(self, name: str) -> int:
        return self._ais_index[name]

    def service_index(self, label: str) -> int:
        return self._service_index[label]


def load_mappings(ais_map_file: str, port_table_file: str, homenet_file: str,
                  ais_categories: Optional[Sequence[str]] = None) -> MappingTables:
    """Load the three mapping files into lookup tables.

    Duplicate signature ids, duplicate (port, proto) rows, and unknown
    intent-category names are all fatal config errors.
    """
    categories = tuple(ais_categories) if ais_categories else DEFAULT_AIS_CATEGORIES
    if len(set(categories)) != len(categories):
        raise ConfigError("duplicate intent category in configured list")

    ais_by_id: Dict[int, str] = {}
    keyword_rules: List[Tuple[str, str]] = []
    for line in _data_lines(ais_map_file):
        parts = [p.strip() for p in line.rsplit(",", 1)]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ConfigError(f"bad intent-map row {line!r}")
        key, ais = parts
        if key in ("signature_id", "keyword") and ais == "ais":
            continue  # header row
        try:
            sig_id = int(key)
        except ValueError:
            keyword_rules.append((key.lower(), ais))
            continue
        if sig_id in ais_by_id:
            raise ConfigError(f"duplicate signature id {sig_id} in intent map")
        ais_by_id[sig_id] = ais

    port_labels: Dict[Tuple[int, str], str] = {}
    for line in _data_lines(port_table_file):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"bad port-table row {line!r}")
        port_s, proto, label = parts
        if (port_s, proto, label) == ("port", "proto", "label"):
            continue  # header row
        try:
            port = int(port_s)
        except ValueError:
            raise ConfigError(f"bad port number {port_s!r}")
        if not 0 <= port <= 65535:
            raise ConfigError(f"port {port} out of range")
        protos = ("tcp", "udp") if proto == "any" else (proto,)
        for p in protos:
            if (port, p) in port_labels:
                raise ConfigError(f"duplicate port-table row for ({port}, {p})")
            port_labels[(port, p)] = label

    networks = []
    for line in _data_lines(homenet_file):
        try:
            networks.append(ipaddress.ip_network(line, strict=False))
        except ValueError as exc:
            raise ConfigError(f"bad homenet line {line!r}: {exc}")

    tables = MappingTables(ais_by_id, keyword_rules, port_labels,
                           Homenet(networks), categories)
    return tables


def _data_lines(path: str) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read mapping file {path}: {exc}")
    out = []
    for line in raw:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def map_ais(alert, tables: MappingTables) -> str:
    """Intent category for an alert: exact id hit, keyword rule, or default."""
    hit = tables.ais_by_id.get(alert.signature_id)
    if hit is not None:
        return hit
    text = alert.signature_text.lower()
    for keyword, ais in tables.keyword_rules:
        if keyword in text:
            return ais
    return tables.ais_labels[tables._default_ais]


def map_ais_index(alert, tables: MappingTables) -> int:
    return tables._ais_index[map_ais(alert, tables)]


def map_service(port: Optional[int], proto: str, tables: MappingTables) -> str:
    """Service label for a (port, proto) pair; total over all inputs."""
    if port is not None:
        hit = tables.port_labels.get((port, proto))
        if hit is not None:
            return hit
    if port is None or port == 0:
        return "reserved"
    if port >= EPHEMERAL_PORT_FLOOR:
        return "ephemeral"
    return "other"


def map_service_index(port: Optional[int], proto: str, tables: MappingTables) -> int:
    cache = tables._service_cache
    key = (port, proto)
    idx = cache.get(key)
    if idx is None:
        idx = tables._service_index[map_service(port, proto, tables)]
        cache[key] = idx
    return idx


def bin_elapsed(dt: Optional[float]) -> str:
    """Time bin label for an elapsed gap in seconds; None marks stream start."""
    return TIME_BIN_LABELS[bin_elapsed_index(dt)]


def bin_elapsed_index(dt: Optional[float]) -> int:
    if dt is None:
        return 0
    if dt < 0:
        dt = 0.0  # negative gaps are clamped upstream; stay total anyway
    return 1 + bisect_right(_BIN_EDGES, dt)


def maneuver_index(direction: str, transition: str) -> int:
    return DIRECTIONS.index(direction) * len(TRANSITIONS) + TRANSITIONS.index(transition)
