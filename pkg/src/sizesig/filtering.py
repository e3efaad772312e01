"""Relevance filter over packet traces.

A record is dropped when it matches any enabled rule; each removal is
attributed to the first rule that matched, in this fixed order:

    protocol    protocol class in the excluded set (ARP, DHCP, NTP by default)
    ap_dns      DNS to or from an access-point / infrastructure address
    keepalive   TCP keep-alive probe or the pure ACK answering it
    size        frame smaller than ``min_size_bytes``
    not_device  neither endpoint is the monitored device
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .errors import NotDeviceTrafficError
from .ingest import TCP_FIN, TCP_SYN, DeviceProfile, PacketRecord, PacketTrace, ProtocolClass
from .model import SizeToken

RULES = ("protocol", "ap_dns", "keepalive", "size", "not_device")

DEFAULT_EXCLUDED = frozenset({ProtocolClass.ARP, ProtocolClass.DHCP, ProtocolClass.NTP})

_SEQ_MOD = 1 << 32


@dataclass(frozen=True)
class FilterConfig:
    excluded_protocols: frozenset[ProtocolClass] = DEFAULT_EXCLUDED
    exclude_ap_dns: bool = True
    exclude_keepalive: bool = True
    # every event-specific packet observed was larger than 97 bytes
    min_size_bytes: int = 98
    profile: Optional[DeviceProfile] = None

    def __post_init__(self):
        if self.min_size_bytes < 0:
            raise ValueError("min_size_bytes must be >= 0")
        object.__setattr__(self, "excluded_protocols", frozenset(self.excluded_protocols))

    def to_dict(self) -> dict:
        return {
            "excluded_protocols": sorted(p.value for p in self.excluded_protocols),
            "exclude_ap_dns": self.exclude_ap_dns,
            "exclude_keepalive": self.exclude_keepalive,
            "min_size_bytes": self.min_size_bytes,
            "profile": self.profile.to_dict() if self.profile else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FilterConfig":
        known = {"excluded_protocols", "exclude_ap_dns", "exclude_keepalive", "min_size_bytes", "profile"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown filter config fields: {sorted(unknown)}")
        kwargs = {}
        if "excluded_protocols" in d:
            kwargs["excluded_protocols"] = frozenset(ProtocolClass(p) for p in d["excluded_protocols"])
        for key in ("exclude_ap_dns", "exclude_keepalive"):
            if key in d:
                kwargs[key] = bool(d[key])
        if "min_size_bytes" in d:
            kwargs["min_size_bytes"] = int(d["min_size_bytes"])
        if d.get("profile"):
            kwargs["profile"] = DeviceProfile.from_dict(d["profile"])
        return cls(**kwargs)


@dataclass(frozen=True)
class FilterReport:
    input_count: int
    output_count: int
    removed_by_rule: dict[str, int] = field(default_factory=lambda: dict.fromkeys(RULES, 0))

    @property
    def retention_ratio(self) -> float:
        # nothing removed from an empty trace
        if self.input_count == 0:
            return 1.0
        return self.output_count / self.input_count

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "output_count": self.output_count,
            "removed_by_rule": {r: self.removed_by_rule.get(r, 0) for r in RULES},
            "retention_ratio": self.retention_ratio,
        }


def _newer(a: int, b: int) -> bool:
    """Serial-number comparison: is sequence number ``a`` after ``b``."""
    d = (a - b) % _SEQ_MOD
    return 0 < d < (1 << 31)


@dataclass
class _FlowState:
    next_seq: Optional[int] = None
    max_ack: Optional[int] = None
    # ack value expected in the reply to an outstanding keep-alive probe
    probe_ack: Optional[int] = None


def keepalive_positions(records: tuple[PacketRecord, ...] | list[PacketRecord]) -> set[int]:
    """Positions of TCP keep-alive probes and their answering pure ACKs.

    A probe carries at most one payload byte and a sequence number one below
    what the receiver expects next, known either from the sender's own
    earlier segments or from the highest ACK the peer has sent. The first
    pure ACK from the peer acknowledging ``probe.seq + 1`` is its answer.
    State is kept per directional 4-tuple and never outlives one call.
    """
    flows: dict[tuple, _FlowState] = {}
    hits: set[int] = set()
    for pos, rec in enumerate(records):
        m = rec.tcp_meta
        if m is None or rec.protocol not in (ProtocolClass.TCP, ProtocolClass.TLS):
            continue
        key = (rec.src_addr, m.src_port, rec.dst_addr, m.dst_port)
        rkey = (rec.dst_addr, m.dst_port, rec.src_addr, m.src_port)
        mine = flows.setdefault(key, _FlowState())
        peer = flows.setdefault(rkey, _FlowState())

        if (
            mine.probe_ack is not None
            and m.payload_len == 0
            and m.is_ack
            and not m.has_control
            and m.ack == mine.probe_ack
        ):
            hits.add(pos)
            mine.probe_ack = None
            continue

        if m.payload_len <= 1 and not m.has_control:
            expected = {
                (v - 1) % _SEQ_MOD for v in (mine.next_seq, peer.max_ack) if v is not None
            }
            if m.seq in expected:
                hits.add(pos)
                peer.probe_ack = (m.seq + 1) % _SEQ_MOD
                continue

        end = (m.seq + m.payload_len + (1 if m.flags & (TCP_SYN | TCP_FIN) else 0)) % _SEQ_MOD
        if mine.next_seq is None or _newer(end, mine.next_seq):
            mine.next_seq = end
        if m.is_ack and (mine.max_ack is None or _newer(m.ack, mine.max_ack)):
            mine.max_ack = m.ack
    return hits


def _first_rule(rec: PacketRecord, pos: int, config: FilterConfig, keepalives: set[int]) -> Optional[str]:
    if rec.protocol in config.excluded_protocols:
        return "protocol"
    if (
        config.exclude_ap_dns
        and rec.protocol is ProtocolClass.DNS
        and config.profile is not None
        and (
            (rec.src_addr or "").lower() in config.profile.ap_addresses
            or (rec.dst_addr or "").lower() in config.profile.ap_addresses
        )
    ):
        return "ap_dns"
    if config.exclude_keepalive and pos in keepalives:
        return "keepalive"
    if rec.size < config.min_size_bytes:
        return "size"
    if rec.direction is None:
        return "not_device"
    return None


def apply_filter(trace: PacketTrace, config: FilterConfig = FilterConfig()) -> tuple[PacketTrace, FilterReport]:
    keepalives = keepalive_positions(trace.records) if config.exclude_keepalive else set()
    kept = []
    removed = dict.fromkeys(RULES, 0)
    for pos, rec in enumerate(trace.records):
        rule = _first_rule(rec, pos, config, keepalives)
        if rule is None:
            kept.append(rec)
        else:
            removed[rule] += 1
    out = PacketTrace(tuple(kept), trace.source_label, trace.warnings)
    return out, FilterReport(len(trace.records), len(kept), removed)


def protocol_summary(trace: PacketTrace) -> dict[ProtocolClass, tuple[int, float]]:
    counts = Counter(r.protocol for r in trace.records)
    total = len(trace.records)
    return {p: (counts[p], counts[p] / total) for p in ProtocolClass if counts[p]}


def tokenize(trace: PacketTrace) -> list[SizeToken]:
    out = []
    for rec in trace.records:
        if rec.direction is None:
            raise NotDeviceTrafficError(
                f"record {rec.index} has no device endpoint; run apply_filter first"
            )
        out.append(rec.token())
    return out
