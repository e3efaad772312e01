"""Command line front end.

    sizesig ingest capture.pcap --device 192.168.0.50 --ap 192.168.0.1 --out trace.csv
    sizesig filter capture.pcap --device 192.168.0.50
    sizesig mine --manifest bundled:oslo --event ScheduledCleaning --out sigs.json
    sizesig eval --signatures bundled:reference --manifest bundled:drammen --out report.json
    sizesig indicator capture.pcap
    sizesig report report.json

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .dataset import dump_signatures, load_manifest, load_signatures, load_traces
from .detection import (
    DEFAULT_MATCH_WINDOW,
    DnsIndicatorConfig,
    dns_cleaning_indicator,
    dns_names_seen,
    evaluate_dataset,
    render_table,
)
from .errors import ManifestError, NoSignatureError, SizesigError
from .filtering import FilterConfig, apply_filter, protocol_summary, tokenize
from .ingest import DeviceProfile, read_pcap, write_token_csv
from .mining import (
    MiningParams,
    as_fraction,
    derive_less_strict_signatures,
    derive_strict_signature,
    packet_count_stats,
    transactions_for,
    unique_packet_scan,
)
from .model import EventClass, format_tokens

log = logging.getLogger("sizesig")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _window(text: str) -> Optional[int]:
    if text == "all":
        return None
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("window must be an integer or 'all'") from None
    if n < 0:
        raise argparse.ArgumentTypeError("window must be >= 0")
    return n


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _filter_config(args) -> FilterConfig:
    cfg = FilterConfig()
    if args.config:
        cfg = FilterConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    if args.device:
        ap = args.ap if args.ap is not None else (cfg.profile.ap_addresses if cfg.profile else ())
        try:
            profile = DeviceProfile(frozenset(args.device), frozenset(ap))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cfg = FilterConfig(
            cfg.excluded_protocols, cfg.exclude_ap_dns, cfg.exclude_keepalive, cfg.min_size_bytes, profile
        )
    if cfg.profile is None:
        raise UsageError("a device address is required (--device or profile in --config)")
    return cfg


def _summary_dict(trace) -> dict:
    return {p.value: {"count": c, "fraction": f} for p, (c, f) in protocol_summary(trace).items()}


def cmd_ingest(args) -> int:
    cfg = _filter_config(args)
    trace = read_pcap(args.pcap, cfg.profile)
    filtered, report = apply_filter(trace, cfg)
    Path(args.out).write_text(write_token_csv(tokenize(filtered)), encoding="utf-8")
    sys.stdout.write(_dump_json(report.to_dict()))
    return 0


def cmd_filter(args) -> int:
    cfg = _filter_config(args)
    trace = read_pcap(args.pcap, cfg.profile)
    filtered, report = apply_filter(trace, cfg)
    doc = {
        "filter_config": cfg.to_dict(),
        "report": report.to_dict(),
        "protocols_before": _summary_dict(trace),
        "protocols_after": _summary_dict(filtered),
        "warnings": list(trace.warnings),
    }
    _emit(_dump_json(doc), args.out)
    return 0


def _mining_params(args, manifest) -> MiningParams:
    base = manifest.mining_params or MiningParams()
    return MiningParams(
        min_support=args.min_support if args.min_support is not None else base.min_support,
        min_confidence=args.min_confidence if args.min_confidence is not None else base.min_confidence,
        prefix_len=args.prefix if args.prefix is not None else base.prefix_len,
        verbosity=args.verbosity,
    )


def cmd_mine(args) -> int:
    try:
        target = EventClass.parse(args.event)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = load_manifest(args.manifest)
    try:
        params = _mining_params(args, manifest)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traces = load_traces(manifest)
    tx_by_event = {
        e: transactions_for([(t.id, t.tokens) for t in traces if t.event == e], params.prefix_len)
        for e in manifest.events()
    }
    if len(tx_by_event.get(target, ())) < 2:
        raise ManifestError(f"manifest has fewer than two traces of {target}")

    strict_by_event = {}
    for event, txs in tx_by_event.items():
        if event == target:
            strict_by_event[event] = derive_strict_signature(txs, params, event)
            continue
        if len(txs) < 2:
            continue
        try:
            strict_by_event[event] = derive_strict_signature(txs, params, event)
        except NoSignatureError as exc:
            log.info("skipping %s for uniqueness screening: %s", event, exc)

    sigs = [strict_by_event[target]]
    sigs += derive_less_strict_signatures(strict_by_event, tx_by_event, target)
    _emit(dump_signatures(sigs), args.out)
    return 0


def cmd_eval(args) -> int:
    sigs = load_signatures(args.signatures)
    manifest = load_manifest(args.manifest)
    traces = load_traces(manifest)
    report = evaluate_dataset(sigs, traces, args.window)
    _emit(_dump_json(report.to_dict(audit=not args.no_audit)), args.out)
    if args.out:
        sys.stderr.write(render_table([r for r in report.to_dict(audit=False)["rows"]]))
    return 0


def cmd_indicator(args) -> int:
    profile = DeviceProfile(frozenset(args.device)) if args.device else None
    trace = read_pcap(args.pcap, profile)
    config = DnsIndicatorConfig(frozenset(args.name) if args.name else DnsIndicatorConfig().required_names)
    verdict = dns_cleaning_indicator(trace, config)
    seen = dns_names_seen(trace)
    print(f"cleaning-indicator: {'true' if verdict else 'false'}")
    for name in sorted(config.required_names):
        print(f"  {name}: {'seen' if name in seen else 'missing'}")
    return 0


def cmd_report(args) -> int:
    if not args.eval_report and not args.manifest:
        raise UsageError("give an evaluation report file and/or --manifest")
    parts = []
    if args.manifest:
        parts.append(_dataset_summary(args.manifest, args.prefix))
    if args.eval_report:
        doc = json.loads(Path(args.eval_report).read_text(encoding="utf-8"))
        parts.append(render_table(doc["rows"]))
    _emit("\n".join(parts), args.out)
    return 0


def _dataset_summary(manifest_path: str, prefix: int) -> str:
    manifest = load_manifest(manifest_path)
    traces = load_traces(manifest)
    tx_by_event = {
        e: transactions_for([(t.id, t.tokens) for t in traces if t.event == e], prefix)
        for e in manifest.events()
    }
    unique = unique_packet_scan(tx_by_event) if len(tx_by_event) >= 2 else {}
    rows = [("Event", "Traces", "Mean pkts", "Std pkts", "Unique tokens")]
    for event in manifest.events():
        stats = packet_count_stats([len(t.tokens) for t in traces if t.event == event])
        rows.append(
            (
                event.value,
                str(stats.n),
                f"{stats.mean:.2f}",
                f"{stats.stddev:.2f}" if stats.stddev_defined else "n/a",
                " ".join(format_tokens(unique.get(event, ()))) or "-",
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sizesig", description="Packet-size signatures for smart-device events.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbosity", type=int, default=1, help="0 quiet, 1 info, 2 debug")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def capture_args(p):
        p.add_argument("pcap", help="classic pcap file (Ethernet)")
        p.add_argument("--device", action="append", help="monitored device address (repeatable)")
        p.add_argument("--ap", action="append", help="access point / infrastructure address (repeatable)")
        p.add_argument("--config", help="FilterConfig JSON file")

    p = sub.add_parser("ingest", help="pcap -> filtered token CSV")
    capture_args(p)
    p.add_argument("--out", required=True, help="token CSV to write")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="filter statistics and protocol distribution for a pcap")
    capture_args(p)
    p.add_argument("--out", help="write JSON here instead of standard output")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("mine", help="derive strict and less-strict signatures for one event")
    p.add_argument("--manifest", required=True, help="manifest JSON (or bundled:oslo)")
    p.add_argument("--event", required=True)
    p.add_argument("--min-support", type=_fraction)
    p.add_argument("--min-confidence", type=_fraction)
    p.add_argument("--prefix", type=int)
    p.add_argument("--out", help="signature JSON to write (default standard output)")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("eval", help="TP/FP/FN and precision/recall/F1 of signatures")
    p.add_argument("--signatures", required=True, help="signature JSON (or bundled:reference)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="report JSON to write (default standard output)")
    p.add_argument(
        "--window",
        type=_window,
        default=DEFAULT_MATCH_WINDOW,
        help="leading packets of each trace to match against, or 'all' (default 20)",
    )
    p.add_argument("--no-audit", action="store_true", help="omit per-trace match details")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("indicator", help="DNS cleaning indicator for a pcap")
    p.add_argument("pcap")
    p.add_argument("--name", action="append", help="required DNS response name (repeatable)")
    p.add_argument("--device", action="append")
    p.set_defaults(func=cmd_indicator)

    p = sub.add_parser("report", help="aligned-text tables for an eval report and/or a dataset")
    p.add_argument("eval_report", nargs="?")
    p.add_argument("--manifest")
    p.add_argument("--prefix", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbosity, logging.DEBUG)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(level)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sizesig: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SizesigError, OSError, ValueError, KeyError) as exc:
        print(f"sizesig: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
