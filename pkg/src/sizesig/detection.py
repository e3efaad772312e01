"""Signature matching, the DNS cleaning indicator and TP/FP/FN evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import InvalidSignatureError, UnevaluableSignatureError
from .ingest import PacketTrace, ProtocolClass
from .mining import Signature
from .model import EventClass, SizeToken

DEFAULT_DNS_NAMES = frozenset({"0550315.ingest.sentry.io", "s3.amazonaws.com"})

# Evaluation traces are compared on their first 20 filtered packets, the same
# window signatures are mined from. None means the whole trace.
DEFAULT_MATCH_WINDOW: Optional[int] = 20


@dataclass(frozen=True)
class LabeledTrace:
    tokens: tuple[SizeToken, ...]
    event: EventClass
    environment: str
    id: str

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.environment:
            raise ValueError("environment label must be nonempty")


@dataclass(frozen=True)
class EvalCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass(frozen=True)
class Metrics:
    """Exact precision/recall/F1. ``f1`` is None when P + R = 0 (undefined)."""

    precision: Fraction
    recall: Fraction
    f1: Optional[Fraction]


@dataclass(frozen=True)
class DnsIndicatorConfig:
    required_names: frozenset[str] = DEFAULT_DNS_NAMES

    def __post_init__(self):
        names = frozenset(_norm_name(n) for n in self.required_names)
        if not names:
            raise ValueError("required_names must not be empty")
        object.__setattr__(self, "required_names", names)


@dataclass(frozen=True)
class EvalRow:
    signature: Signature
    counts: EvalCounts
    metrics: Metrics
    audit: tuple[tuple[str, bool], ...] = field(default=())


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]

    def to_dict(self, audit: bool = True) -> dict:
        return {"rows": [row_to_dict(r, audit) for r in self.rows]}


def _norm_name(name: str) -> str:
    return name.strip().rstrip(".").lower()


def match_signature(sig: Signature, tokens: Iterable[SizeToken]) -> bool:
    """True iff every signature token occurs somewhere in ``tokens`` (order and counts ignored)."""
    if not sig.tokens:
        raise InvalidSignatureError("empty signature")
    return sig.tokens <= set(tokens)


def dns_names_seen(trace: PacketTrace) -> set[str]:
    return {
        _norm_name(r.dns_query_name)
        for r in trace.records
        if r.protocol is ProtocolClass.DNS and r.dns_query_name
    }


def dns_cleaning_indicator(trace: PacketTrace, config: DnsIndicatorConfig = DnsIndicatorConfig()) -> bool:
    """True iff the trace holds a DNS response for every required name.

    Must run on the unfiltered trace (or at least one that keeps DNS).
    """
    return config.required_names <= dns_names_seen(trace)


def _window(tokens: Sequence[SizeToken], window: Optional[int]) -> Sequence[SizeToken]:
    return tokens if window is None else tokens[:window]


def evaluate_signature(
    sig: Signature,
    dataset: Sequence[LabeledTrace],
    window: Optional[int] = DEFAULT_MATCH_WINDOW,
) -> EvalCounts:
    return _evaluate(sig, dataset, window)[0]


def _evaluate(sig, dataset, window):
    if not any(t.event == sig.event for t in dataset):
        raise UnevaluableSignatureError(sig.event)
    tp = fp = fn = 0
    audit = []
    for trace in dataset:
        hit = match_signature(sig, _window(trace.tokens, window))
        audit.append((trace.id, hit))
        if trace.event == sig.event:
            if hit:
                tp += 1
            else:
                fn += 1
        elif hit:
            fp += 1
    return EvalCounts(tp, fp, fn), tuple(audit)


def metrics_of(counts: EvalCounts) -> Metrics:
    """P and R are 0 for a 0/0 ratio; F1 is undefined when P + R = 0."""
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    r = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = 2 * p * r / (p + r) if p + r else None
    return Metrics(p, r, f1)


def evaluate_dataset(
    signatures: Sequence[Signature],
    dataset: Sequence[LabeledTrace],
    window: Optional[int] = DEFAULT_MATCH_WINDOW,
) -> EvalReport:
    rows = []
    for sig in signatures:
        counts, audit = _evaluate(sig, dataset, window)
        rows.append(EvalRow(sig, counts, metrics_of(counts), audit))
    return EvalReport(tuple(rows))


def round3(x: Fraction) -> float:
    """Round half up to 3 decimals."""
    return math.floor(x * 1000 + Fraction(1, 2)) / 1000


def _fmt_metric(x: Optional[Fraction]):
    return "undefined" if x is None else round3(x)


def row_to_dict(row: EvalRow, audit: bool = True) -> dict:
    d = {
        "signature": row.signature.canonical_tokens(),
        "event": row.signature.event.value,
        "strictness": row.signature.strictness.value,
        "tp": row.counts.tp,
        "fp": row.counts.fp,
        "fn": row.counts.fn,
        "precision": _fmt_metric(row.metrics.precision),
        "recall": _fmt_metric(row.metrics.recall),
        "f1": _fmt_metric(row.metrics.f1),
    }
    if audit:
        d["audit"] = [{"trace": tid, "matched": hit} for tid, hit in row.audit]
    return d


def render_table(report_rows: Sequence[dict]) -> str:
    """Aligned text table from serialized report rows."""
    header = ("Signature", "Event", "TP", "FP", "FN", "P", "R", "F1")
    body = [
        (
            "[" + ", ".join(r["signature"]) + "]",
            r["event"],
            str(r["tp"]),
            str(r["fp"]),
            str(r["fn"]),
            _fmt_cell(r["precision"]),
            _fmt_cell(r["recall"]),
            _fmt_cell(r["f1"]),
        )
        for r in report_rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        cells = [c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _fmt_cell(v) -> str:
    if isinstance(v, str):
        return v
    return f"{v:g}"
