"""Hand-assembled pcap bytes for parser tests.

Written straight from the libpcap, Ethernet II, IPv4, UDP, TCP, ARP and
DNS header layouts; deliberately shares no code with the parser.
"""

from __future__ import annotations

import socket
import struct

DEVICE_MAC = bytes.fromhex("50140d0a0b0c")
PEER_MAC = bytes.fromhex("001122334455")


def global_header(linktype: int = 1, magic: int = 0xA1B2C3D4, endian: str = "<") -> bytes:
    return struct.pack(endian + "IHHiIII", magic, 2, 4, 0, 0, 65535, linktype)


def record(frame: bytes, ts_sec: int = 1_700_000_000, ts_usec: int = 0, orig_len: int | None = None,
           endian: str = "<") -> bytes:
    orig = len(frame) if orig_len is None else orig_len
    return struct.pack(endian + "IIII", ts_sec, ts_usec, len(frame), orig) + frame


def ethernet(payload: bytes, ethertype: int, src_mac: bytes = PEER_MAC, dst_mac: bytes = DEVICE_MAC) -> bytes:
    return dst_mac + src_mac + struct.pack("!H", ethertype) + payload


def ipv4(payload: bytes, proto: int, src: str, dst: str) -> bytes:
    total = 20 + len(payload)
    hdr = struct.pack(
        "!BBHHHBBH4s4s",
        0x45, 0, total, 0x1234, 0x4000, 64, proto, 0,
        socket.inet_aton(src), socket.inet_aton(dst),
    )
    return hdr + payload


def udp(payload: bytes, sport: int, dport: int) -> bytes:
    return struct.pack("!HHHH", sport, dport, 8 + len(payload), 0) + payload


def tcp(payload: bytes, sport: int, dport: int, seq: int, ack: int, flags: int = 0x18) -> bytes:
    return struct.pack("!HHIIBBHHH", sport, dport, seq, ack, 5 << 4, flags, 65535, 0, 0) + payload


def dns_message(name: str, response: bool = True) -> bytes:
    flags = 0x8180 if response else 0x0100
    qname = b"".join(bytes([len(p)]) + p.encode() for p in name.split(".")) + b"\x00"
    return struct.pack("!HHHHHH", 0xBEEF, flags, 1, 0, 0, 0) + qname + struct.pack("!HH", 1, 1)


def arp(sender_ip: str, target_ip: str) -> bytes:
    return struct.pack(
        "!HHBBH6s4s6s4s", 1, 0x0800, 6, 4, 1,
        PEER_MAC, socket.inet_aton(sender_ip), b"\x00" * 6, socket.inet_aton(target_ip),
    )


def udp_frame(src: str, dst: str, sport: int, dport: int, payload: bytes = b"") -> bytes:
    return ethernet(ipv4(udp(payload, sport, dport), 17, src, dst), 0x0800)


def tcp_frame(src: str, dst: str, sport: int, dport: int, seq: int = 1, ack: int = 1,
              payload: bytes = b"", flags: int = 0x18) -> bytes:
    return ethernet(ipv4(tcp(payload, sport, dport, seq, ack, flags), 6, src, dst), 0x0800)


def capture(*frames: bytes, endian: str = "<") -> bytes:
    out = global_header(endian=endian, magic=0xA1B2C3D4)
    for i, f in enumerate(frames):
        out += record(f, ts_sec=1_700_000_000 + i, endian=endian)
    return out
