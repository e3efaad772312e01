import json
from collections import Counter

import pytest

import pcapbuild as pb
from conftest import AP_IP, CLOUD_IP, DEVICE_IP
from sizesig.dataset import (
    data_path,
    dump_signatures,
    load_manifest,
    load_signatures,
    load_traces,
    parse_manifest,
    parse_signatures,
    resolve_path,
)
from sizesig.errors import ManifestError
from sizesig.model import EventClass, tokens


@pytest.mark.parametrize("name", ["oslo", "drammen"])
def test_bundled_fixture_shape(name, request):
    traces = request.getfixturevalue(name)
    assert len(traces) == 60
    assert Counter(t.event for t in traces) == {e: 10 for e in EventClass}
    assert {t.environment for t in traces} == {name}
    assert len({t.id for t in traces}) == 60
    assert all(1 <= len(t.tokens) <= 23 for t in traces)


def test_oslo_first_rows(oslo):
    sched = next(t for t in oslo if t.id == "oslo-scheduled-cleaning-01")
    assert sched.tokens[:3] == tuple(tokens("S179 S160 D346"))
    auto = next(t for t in oslo if t.event is EventClass.AUTOMATED_CLEANING)
    assert auto.id == "oslo-automated-cleaning-01"


def test_manifest_events_order(oslo_manifest):
    assert oslo_manifest.events() == list(EventClass)
    assert oslo_manifest.filter_config is None


def test_resolve_path():
    assert resolve_path("bundled:reference") == data_path("reference_signatures.json")
    assert resolve_path("some/file.json").name == "file.json"
    with pytest.raises(ManifestError):
        resolve_path("bundled:bergen")


def test_manifest_errors(tmp_path):
    with pytest.raises(ManifestError):
        parse_manifest({}, tmp_path)
    entry = {"path": "a.csv", "event": "BinRemoval", "environment": "x", "id": "a"}
    with pytest.raises(ManifestError, match="duplicate"):
        parse_manifest({"entries": [entry, entry]}, tmp_path)
    with pytest.raises(ManifestError):
        parse_manifest({"entries": [dict(entry, event="Mopping")]}, tmp_path)
    bad = tmp_path / "m.json"
    bad.write_text("{not json")
    with pytest.raises(ManifestError):
        load_manifest(bad)


def test_event_name_spellings(tmp_path):
    entries = [
        {"path": "a.csv", "event": ev, "environment": "x", "id": str(i)}
        for i, ev in enumerate(["BinRemoval", "bin_removal", "BIN_REMOVAL"])
    ]
    m = parse_manifest({"entries": entries}, tmp_path)
    assert {e.event for e in m.entries} == {EventClass.BIN_REMOVAL}


def test_signature_file_round_trip_is_byte_exact(reference):
    original = data_path("reference_signatures.json").read_text(encoding="utf-8")
    assert dump_signatures(reference) == original
    assert parse_signatures(original) == reference
    assert len(reference) == 9


def test_empty_signature_file(tmp_path):
    assert parse_signatures("") == []
    assert parse_signatures("[]") == []
    f = tmp_path / "s.json"
    f.write_text("")
    assert load_signatures(f) == []


def test_manifest_with_pcap_entries(tmp_path):
    frames = [pb.tcp_frame(DEVICE_IP, CLOUD_IP, 50000, 443, payload=b"x" * 122)]
    frames.append(pb.udp_frame(AP_IP, DEVICE_IP, 53, 33000, pb.dns_message("s3.amazonaws.com")))
    frames.append(pb.tcp_frame(CLOUD_IP, DEVICE_IP, 443, 50000, payload=b"y" * 1054))
    (tmp_path / "c.pcap").write_bytes(pb.capture(*frames))
    (tmp_path / "t.csv").write_text("direction,size\nS,176\n")
    doc = {
        "defaults": {
            "filter": {"profile": {"device_addresses": [DEVICE_IP], "ap_addresses": [AP_IP]}},
        },
        "entries": [
            {"path": "c.pcap", "event": "BinRemoval", "environment": "lab", "id": "p"},
            {"path": "t.csv", "event": "BinRemoval", "environment": "lab", "id": "c"},
        ],
    }
    (tmp_path / "m.json").write_text(json.dumps(doc))
    traces = load_traces(load_manifest(tmp_path / "m.json"))
    assert traces[0].tokens == tuple(tokens("S176 D1108"))
    assert traces[1].tokens == tuple(tokens("S176"))


def test_pcap_entry_needs_profile(tmp_path):
    (tmp_path / "c.pcap").write_bytes(pb.global_header())
    doc = {"entries": [{"path": "c.pcap", "event": "BinRemoval", "environment": "lab", "id": "p"}]}
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(ManifestError, match="profile"):
        load_traces(load_manifest(tmp_path / "m.json"))
