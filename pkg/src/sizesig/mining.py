"""Signature mining over size-token transactions.

Each event trace contributes one transaction: the set of distinct tokens
among its first ``prefix_len`` filtered packets. Apriori finds the token
sets present in at least ``min_support`` of an event's transactions; the
union of the maximal ones is the event's strict signature. Supports are
exact rationals so thresholds such as 0.99 over ten transactions behave
as intended (9/10 < 99/100).
"""

from __future__ import annotations

import enum
import logging
import math
import statistics
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import NoSignatureError, UndefinedSupportError
from .model import EventClass, SizeToken, canonical, format_tokens

log = logging.getLogger(__name__)

Number = Union[int, float, str, Fraction]


def as_fraction(value: Number) -> Fraction:
    """Exact rational for a threshold; floats go through their shortest repr (0.99 -> 99/100)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _key(tokens: Iterable[SizeToken]) -> tuple:
    return tuple(t.sort_key() for t in canonical(tokens))


class Strictness(enum.Enum):
    STRICT = "strict"
    LESS_STRICT = "less_strict"


@dataclass(frozen=True)
class Transaction:
    token_set: frozenset[SizeToken]
    origin: str = ""


@dataclass(frozen=True)
class MiningParams:
    min_support: Fraction = Fraction(99, 100)
    min_confidence: Fraction = Fraction(1)
    prefix_len: int = 20
    verbosity: int = 1

    def __post_init__(self):
        sup, conf = as_fraction(self.min_support), as_fraction(self.min_confidence)
        if not 0 <= sup <= 1:
            raise ValueError(f"min_support out of [0, 1]: {self.min_support}")
        if not 0 <= conf <= 1:
            raise ValueError(f"min_confidence out of [0, 1]: {self.min_confidence}")
        if self.prefix_len < 0:
            raise ValueError("prefix_len must be >= 0")
        object.__setattr__(self, "min_support", sup)
        object.__setattr__(self, "min_confidence", conf)

    def to_dict(self) -> dict:
        return {
            "min_support": str(self.min_support),
            "min_confidence": str(self.min_confidence),
            "prefix_len": self.prefix_len,
            "verbosity": self.verbosity,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MiningParams":
        kwargs = {}
        for key in ("min_support", "min_confidence"):
            if key in d:
                kwargs[key] = as_fraction(d[key])
        for key in ("prefix_len", "verbosity"):
            if key in d:
                kwargs[key] = int(d[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class Itemset:
    tokens: frozenset[SizeToken]
    support: Fraction

    def __str__(self) -> str:
        return "{" + ",".join(format_tokens(self.tokens)) + f"}}:{self.support}"


@dataclass(frozen=True)
class AssociationRule:
    antecedent: frozenset[SizeToken]
    consequent: frozenset[SizeToken]
    support: Fraction
    confidence: Fraction

    def __str__(self) -> str:
        lhs = ",".join(format_tokens(self.antecedent))
        rhs = ",".join(format_tokens(self.consequent))
        return f"{lhs} -> {rhs} (sup {self.support}, conf {self.confidence})"


@dataclass(frozen=True)
class Signature:
    tokens: frozenset[SizeToken]
    event: EventClass
    strictness: Strictness = Strictness.STRICT

    def __post_init__(self):
        object.__setattr__(self, "tokens", frozenset(self.tokens))
        if not self.tokens:
            raise ValueError("signature must contain at least one token")

    def canonical_tokens(self) -> list[str]:
        return format_tokens(self.tokens)

    def to_dict(self) -> dict:
        return {
            "event": self.event.value,
            "strictness": self.strictness.value,
            "tokens": self.canonical_tokens(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Signature":
        return cls(
            frozenset(SizeToken.parse(t) for t in d["tokens"]),
            EventClass.parse(d["event"]),
            Strictness(d.get("strictness", "strict")),
        )

    def __str__(self) -> str:
        return "[" + ", ".join(self.canonical_tokens()) + "]"


@dataclass(frozen=True)
class CountStats:
    n: int
    mean: float
    # None when n < 2
    stddev: Optional[float]

    @property
    def stddev_defined(self) -> bool:
        return self.stddev is not None


def extract_prefix(tokens: Sequence[SizeToken], n: int) -> list[SizeToken]:
    if n < 0:
        raise ValueError("prefix length must be >= 0")
    return list(tokens[:n])


def to_transaction(tokens: Iterable[SizeToken], origin: str = "") -> Transaction:
    return Transaction(frozenset(tokens), origin)


def _count(tokens: frozenset[SizeToken], transactions: Sequence[Transaction]) -> int:
    return sum(1 for t in transactions if tokens <= t.token_set)


def support_of(tokens: Iterable[SizeToken], transactions: Sequence[Transaction]) -> Fraction:
    if not transactions:
        raise UndefinedSupportError("support is undefined over zero transactions")
    return Fraction(_count(frozenset(tokens), transactions), len(transactions))


def apriori_frequent_itemsets(transactions: Sequence[Transaction], min_support: Number) -> list[Itemset]:
    """All nonempty itemsets with support >= ``min_support``, canonically sorted.

    Level-wise Apriori: k-candidates are joined from frequent (k-1)-itemsets
    sharing a (k-2)-prefix, pruned unless every (k-1)-subset is frequent,
    then counted against the transactions.
    """
    if not transactions:
        raise UndefinedSupportError("support is undefined over zero transactions")
    threshold = as_fraction(min_support)
    total = len(transactions)

    # count / total >= threshold, kept in integers
    min_count = math.ceil(threshold * total)

    def frequent(count: int) -> bool:
        return count >= min_count

    universe = sorted(set().union(*(t.token_set for t in transactions)))
    result: list[Itemset] = []
    level: list[tuple[SizeToken, ...]] = []
    for tok in universe:
        c = _count(frozenset((tok,)), transactions)
        if frequent(c):
            level.append((tok,))
            result.append(Itemset(frozenset((tok,)), Fraction(c, total)))

    while level:
        prev = set(level)
        candidates = []
        for i, a in enumerate(level):
            for b in level[i + 1 :]:
                if a[:-1] != b[:-1]:
                    # level is sorted, so no later b shares a's prefix
                    break
                cand = a + (b[-1],)
                if all(cand[:j] + cand[j + 1 :] in prev for j in range(len(cand))):
                    candidates.append(cand)
        level = []
        for cand in candidates:
            c = _count(frozenset(cand), transactions)
            if frequent(c):
                level.append(cand)
                result.append(Itemset(frozenset(cand), Fraction(c, total)))

    result.sort(key=lambda s: (len(s.tokens), _key(s.tokens)))
    return result


def maximal_itemsets(frequent: Sequence[Itemset]) -> list[Itemset]:
    """Itemsets with no frequent proper superset."""
    out = [s for s in frequent if not any(s.tokens < o.tokens for o in frequent)]
    out.sort(key=lambda s: (len(s.tokens), _key(s.tokens)))
    return out


def association_rules(frequent: Sequence[Itemset], min_confidence: Number) -> list[AssociationRule]:
    threshold = as_fraction(min_confidence)
    support = {s.tokens: s.support for s in frequent}
    rules = []
    for z in frequent:
        if len(z.tokens) < 2:
            continue
        items = canonical(z.tokens)
        for r in range(1, len(items)):
            for lhs in combinations(items, r):
                x = frozenset(lhs)
                conf = z.support / support[x]
                if conf >= threshold:
                    rules.append(AssociationRule(x, z.tokens - x, z.support, conf))
    rules.sort(key=lambda r: (_key(r.antecedent | r.consequent), len(r.antecedent), _key(r.antecedent)))
    return rules


def derive_strict_signature(
    event_transactions: Sequence[Transaction],
    params: MiningParams = MiningParams(),
    event: EventClass = None,
) -> Signature:
    """Union of the maximal frequent itemsets of one event's transactions."""
    if len(event_transactions) < 2:
        raise ValueError("need at least two transactions to derive a signature")
    frequent = apriori_frequent_itemsets(event_transactions, params.min_support)
    if not frequent:
        raise NoSignatureError(
            f"no token reaches support {params.min_support} over {len(event_transactions)} transactions"
            + (f" for {event}" if event else "")
        )
    maximal = maximal_itemsets(frequent)
    if params.verbosity >= 1:
        log.info("%s: %d frequent itemsets, maximal: %s", event, len(frequent), "; ".join(map(str, maximal)))
    if params.verbosity >= 2:
        for rule in association_rules(frequent, params.min_confidence):
            log.debug("%s: rule %s", event, rule)
    tokens = frozenset().union(*(m.tokens for m in maximal))
    return Signature(tokens, event, Strictness.STRICT)


def derive_less_strict_signatures(
    strict_by_event: Mapping[EventClass, Signature],
    transactions_by_event: Mapping[EventClass, Sequence[Transaction]],
    target: EventClass,
) -> list[Signature]:
    """Drop-one subsets of the target's strict signature that still single it out.

    A candidate survives if it is not contained in another event's strict
    signature and matches no training transaction of any other event.
    """
    strict = strict_by_event[target]
    size = len(strict.tokens) - 1
    if size < 2:
        return []
    others_strict = [s.tokens for e, s in strict_by_event.items() if e != target]
    others_tx = [t.token_set for e, txs in transactions_by_event.items() if e != target for t in txs]
    out = []
    for combo in combinations(canonical(strict.tokens), size):
        cand = frozenset(combo)
        if any(cand <= s for s in others_strict):
            continue
        if any(cand <= t for t in others_tx):
            continue
        out.append(Signature(cand, target, Strictness.LESS_STRICT))
    out.sort(key=lambda s: _key(s.tokens))
    return out


def packet_count_stats(counts: Sequence[int]) -> CountStats:
    """Mean and sample standard deviation (n-1 divisor) of per-trace packet counts."""
    if not counts:
        raise ValueError("packet_count_stats needs at least one count")
    mean = statistics.fmean(counts)
    stddev = statistics.stdev(counts) if len(counts) >= 2 else None
    return CountStats(len(counts), mean, stddev)


def unique_packet_scan(
    transactions_by_event: Mapping[EventClass, Sequence[Transaction]],
) -> dict[EventClass, frozenset[SizeToken]]:
    seen = {
        e: frozenset().union(*(t.token_set for t in txs)) if txs else frozenset()
        for e, txs in transactions_by_event.items()
    }
    out = {}
    for e, toks in seen.items():
        others = frozenset().union(*(v for o, v in seen.items() if o != e))
        out[e] = toks - others
    return out


def transactions_for(token_lists: Iterable[tuple[str, Sequence[SizeToken]]], prefix_len: int) -> list[Transaction]:
    """Transactions from ``(origin, tokens)`` pairs after prefix extraction."""
    return [to_transaction(extract_prefix(toks, prefix_len), origin) for origin, toks in token_lists]
