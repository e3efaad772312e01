"""Capture ingestion: classic pcap decoding and the token CSV format.

Only classic (libpcap) captures with an Ethernet link layer are supported;
frames are decoded just far enough to classify the protocol, resolve the
direction relative to the monitored device and pick out DNS response names
and TCP sequence state.
"""

from __future__ import annotations

import enum
import io
import logging
import socket
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

from .errors import (
    MalformedFrameError,
    TokenParseError,
    UnsupportedFormatError,
    UnsupportedLinkTypeError,
)
from .model import Direction, SizeToken

log = logging.getLogger(__name__)

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_SWAPPED = 0xD4C3B2A1
PCAPNG_MAGIC = 0x0A0D0D0A
LINKTYPE_ETHERNET = 1

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_ARP = 0x0806
ETHERTYPE_VLAN = 0x8100

IPPROTO_TCP = 6
IPPROTO_UDP = 17

TLS_PORTS = frozenset({443, 8883})
DHCP_PORTS = frozenset({67, 68})

TCP_FIN = 0x01
TCP_SYN = 0x02
TCP_RST = 0x04
TCP_ACK = 0x10

CSV_HEADER = "direction,size"


class ProtocolClass(enum.Enum):
    DNS = "DNS"
    ARP = "ARP"
    DHCP = "DHCP"
    NTP = "NTP"
    TCP = "TCP"
    TLS = "TLS-over-TCP"
    OTHER_UDP = "OtherUDP"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DeviceProfile:
    """Addresses of the monitored device and of the network infrastructure."""

    device_addresses: frozenset[str]
    ap_addresses: frozenset[str] = frozenset()

    def __post_init__(self):
        dev = frozenset(_norm_addr(a) for a in self.device_addresses)
        ap = frozenset(_norm_addr(a) for a in self.ap_addresses)
        if not dev:
            raise ValueError("device_addresses must not be empty")
        if dev & ap:
            raise ValueError(f"addresses both device and AP: {sorted(dev & ap)}")
        object.__setattr__(self, "device_addresses", dev)
        object.__setattr__(self, "ap_addresses", ap)

    def to_dict(self) -> dict:
        return {
            "device_addresses": sorted(self.device_addresses),
            "ap_addresses": sorted(self.ap_addresses),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceProfile":
        return cls(frozenset(d["device_addresses"]), frozenset(d.get("ap_addresses", ())))


def _norm_addr(addr: str) -> str:
    return addr.strip().lower()


@dataclass(frozen=True)
class TcpMeta:
    src_port: int
    dst_port: int
    seq: int
    ack: int
    payload_len: int
    flags: int

    @property
    def is_ack(self) -> bool:
        return bool(self.flags & TCP_ACK)

    @property
    def has_control(self) -> bool:
        """SYN, FIN or RST set."""
        return bool(self.flags & (TCP_SYN | TCP_FIN | TCP_RST))


@dataclass(frozen=True)
class PacketRecord:
    index: int
    ts_sec: int
    ts_usec: int
    size: int
    protocol: ProtocolClass
    direction: Optional[Direction]
    src_addr: Optional[str] = None
    dst_addr: Optional[str] = None
    dns_query_name: Optional[str] = None
    tcp_meta: Optional[TcpMeta] = None

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("size must be >= 0")
        if self.dns_query_name is not None and self.protocol is not ProtocolClass.DNS:
            raise ValueError("dns_query_name set on a non-DNS record")

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec / 1e6

    @property
    def is_device_traffic(self) -> bool:
        return self.direction is not None

    def token(self) -> SizeToken:
        return SizeToken(self.direction, self.size)


@dataclass(frozen=True)
class PacketTrace:
    records: tuple[PacketRecord, ...]
    source_label: str = ""
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.index <= prev.index:
                raise ValueError(f"record indices not increasing at {cur.index}")
            if (cur.ts_sec, cur.ts_usec) < (prev.ts_sec, prev.ts_usec):
                raise ValueError(f"timestamps decrease at record {cur.index}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def classify_protocol(
    ethertype: Optional[int],
    ip_proto: Optional[int] = None,
    src_port: Optional[int] = None,
    dst_port: Optional[int] = None,
) -> ProtocolClass:
    """Map decoded header fields to a protocol class. Never raises."""
    if ethertype == ETHERTYPE_ARP:
        return ProtocolClass.ARP
    if ethertype != ETHERTYPE_IPV4:
        return ProtocolClass.OTHER
    ports = {p for p in (src_port, dst_port) if p is not None}
    if ip_proto == IPPROTO_UDP:
        if 53 in ports:
            return ProtocolClass.DNS
        if ports & DHCP_PORTS:
            return ProtocolClass.DHCP
        if 123 in ports:
            return ProtocolClass.NTP
        return ProtocolClass.OTHER_UDP
    if ip_proto == IPPROTO_TCP:
        if ports & TLS_PORTS:
            return ProtocolClass.TLS
        return ProtocolClass.TCP
    return ProtocolClass.OTHER


def resolve_direction(
    src: Optional[str], dst: Optional[str], profile: DeviceProfile
) -> Optional[Direction]:
    """Direction relative to the device, or None for non-device traffic."""
    src_dev = src is not None and _norm_addr(src) in profile.device_addresses
    dst_dev = dst is not None and _norm_addr(dst) in profile.device_addresses
    if src_dev and dst_dev:
        raise MalformedFrameError(f"both endpoints are the device ({src} -> {dst})")
    if src_dev:
        return Direction.FROM_DEVICE
    if dst_dev:
        return Direction.TO_DEVICE
    return None


# -- pcap ------------------------------------------------------------------


@dataclass
class _Decoded:
    ethertype: Optional[int] = None
    ip_proto: Optional[int] = None
    src_addr: Optional[str] = None
    dst_addr: Optional[str] = None
    src_port: Optional[int] = None
    dst_port: Optional[int] = None
    dns_query_name: Optional[str] = None
    tcp_meta: Optional[TcpMeta] = None


def _mac(b: bytes) -> str:
    return ":".join(f"{x:02x}" for x in b)


def _decode_frame(frame: bytes) -> _Decoded:
    out = _Decoded()
    if len(frame) < 14:
        return out
    out.dst_addr, out.src_addr = _mac(frame[0:6]), _mac(frame[6:12])
    (ethertype,) = struct.unpack_from("!H", frame, 12)
    off = 14
    while ethertype == ETHERTYPE_VLAN and len(frame) >= off + 4:
        (ethertype,) = struct.unpack_from("!H", frame, off + 2)
        off += 4
    out.ethertype = ethertype

    if ethertype == ETHERTYPE_ARP:
        if len(frame) >= off + 28:
            out.src_addr = socket.inet_ntoa(frame[off + 14 : off + 18])
            out.dst_addr = socket.inet_ntoa(frame[off + 24 : off + 28])
        return out
    if ethertype != ETHERTYPE_IPV4 or len(frame) < off + 20:
        return out

    ver_ihl, total_len, frag, proto = (
        frame[off],
        struct.unpack_from("!H", frame, off + 2)[0],
        struct.unpack_from("!H", frame, off + 6)[0],
        frame[off + 9],
    )
    if ver_ihl >> 4 != 4:
        return out
    ihl = (ver_ihl & 0x0F) * 4
    out.ip_proto = proto
    out.src_addr = socket.inet_ntoa(frame[off + 12 : off + 16])
    out.dst_addr = socket.inet_ntoa(frame[off + 16 : off + 20])
    if frag & 0x1FFF:
        # non-first fragment: no transport header
        return out
    l4 = off + ihl
    # IP total length excludes Ethernet padding and survives snaplen truncation
    ip_end = off + total_len if total_len else len(frame)

    if proto == IPPROTO_TCP and len(frame) >= l4 + 20:
        sport, dport, seq, ack, doff_flags = struct.unpack_from("!HHIIH", frame, l4)
        thl = (doff_flags >> 12) * 4
        out.src_port, out.dst_port = sport, dport
        out.tcp_meta = TcpMeta(
            src_port=sport,
            dst_port=dport,
            seq=seq,
            ack=ack,
            payload_len=max(0, ip_end - l4 - thl),
            flags=doff_flags & 0x01FF,
        )
    elif proto == IPPROTO_UDP and len(frame) >= l4 + 8:
        sport, dport = struct.unpack_from("!HH", frame, l4)
        out.src_port, out.dst_port = sport, dport
        if 53 in (sport, dport):
            out.dns_query_name = _dns_response_name(frame[l4 + 8 : ip_end])
    return out


def _dns_response_name(msg: bytes) -> Optional[str]:
    """First question name of a DNS response, or None for queries/garbage."""
    if len(msg) < 12:
        return None
    flags, qdcount = struct.unpack_from("!HH", msg, 2)
    if not flags & 0x8000 or qdcount == 0:
        return None
    labels = []
    pos = 12
    while pos < len(msg):
        n = msg[pos]
        if n == 0:
            return ".".join(labels)
        if n & 0xC0:
            # compression pointers do not occur in the question of a well-formed response
            return None
        pos += 1
        if pos + n > len(msg):
            return None
        labels.append(msg[pos : pos + n].decode("ascii", errors="replace"))
        pos += n
    return None


def parse_pcap(
    data: Union[bytes, bytearray, memoryview],
    profile: Optional[DeviceProfile] = None,
    source_label: str = "",
) -> PacketTrace:
    """Decode a classic pcap byte stream into a PacketTrace.

    Records whose endpoints do not include the device get ``direction=None``;
    the filter drops them later. Without a profile every record is undirected,
    which is enough for protocol summaries and the DNS indicator.

    A truncated trailing record ends parsing; the records read so far are
    returned and the problem is noted in ``PacketTrace.warnings``.
    """
    buf = bytes(data)
    if len(buf) < 24:
        raise UnsupportedFormatError("unsupported capture format: short global header", len(buf))
    (magic,) = struct.unpack_from("<I", buf, 0)
    if magic == PCAP_MAGIC:
        endian = "<"
    elif magic == PCAP_MAGIC_SWAPPED:
        endian = ">"
    elif magic == PCAPNG_MAGIC:
        raise UnsupportedFormatError("unsupported capture format: pcapng", 0)
    else:
        raise UnsupportedFormatError(f"unsupported capture format: magic 0x{magic:08x}", 0)
    (linktype,) = struct.unpack_from(endian + "I", buf, 20)
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinkTypeError(f"unsupported link type {linktype}", 20)

    records: list[PacketRecord] = []
    warnings: list[str] = []
    pos = 24
    rec_hdr = struct.Struct(endian + "IIII")
    index = 0
    while pos < len(buf):
        if pos + 16 > len(buf):
            warnings.append(f"truncated record header at byte offset {pos}")
            break
        ts_sec, ts_usec, incl_len, orig_len = rec_hdr.unpack_from(buf, pos)
        if pos + 16 + incl_len > len(buf):
            warnings.append(f"truncated record data at byte offset {pos}")
            break
        frame = buf[pos + 16 : pos + 16 + incl_len]
        d = _decode_frame(frame)
        direction = None
        if profile is not None:
            try:
                direction = resolve_direction(d.src_addr, d.dst_addr, profile)
            except MalformedFrameError as exc:
                warnings.append(f"record {index}: {exc}")
        proto = classify_protocol(d.ethertype, d.ip_proto, d.src_port, d.dst_port)
        records.append(
            PacketRecord(
                index=index,
                ts_sec=ts_sec,
                ts_usec=ts_usec,
                size=orig_len,
                protocol=proto,
                direction=direction,
                src_addr=d.src_addr,
                dst_addr=d.dst_addr,
                dns_query_name=d.dns_query_name if proto is ProtocolClass.DNS else None,
                tcp_meta=d.tcp_meta,
            )
        )
        index += 1
        pos += 16 + incl_len
    for w in warnings:
        log.warning("%s: %s", source_label or "<pcap>", w)
    return PacketTrace(tuple(records), source_label, tuple(warnings))


def read_pcap(path, profile: Optional[DeviceProfile] = None) -> PacketTrace:
    with open(path, "rb") as fh:
        return parse_pcap(fh.read(), profile, source_label=str(path))


# -- token CSV -------------------------------------------------------------


def read_token_csv(source: Union[str, TextIO]) -> list[SizeToken]:
    text = source if isinstance(source, str) else source.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines or lines[0] != CSV_HEADER:
        raise TokenParseError(1, f"expected header {CSV_HEADER!r}")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise TokenParseError(lineno, f"expected 'direction,size', got {line!r}")
        letter, size = parts
        if letter not in ("S", "D"):
            raise TokenParseError(lineno, f"unknown direction {letter!r}")
        if not size.isascii() or not size.isdigit():
            raise TokenParseError(lineno, f"size must be a non-negative integer, got {size!r}")
        out.append(SizeToken(Direction(letter), int(size)))
    return out


def write_token_csv(tokens: Iterable[SizeToken]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for tok in tokens:
        buf.write(f"{tok.direction.value},{tok.size}\n")
    return buf.getvalue()
