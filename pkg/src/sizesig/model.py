"""Core value types shared by every stage: directions, size tokens, events."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable


class Direction(enum.Enum):
    """Traffic direction relative to the monitored device."""

    FROM_DEVICE = "S"
    TO_DEVICE = "D"

    @classmethod
    def parse(cls, letter: str) -> "Direction":
        return cls(letter)

    def __str__(self) -> str:
        return self.value


# canonical display order: S before D
_DIRECTION_RANK = {Direction.FROM_DEVICE: 0, Direction.TO_DEVICE: 1}

_TOKEN_RE = re.compile(r"([SD])(\d+)")


@total_ordering
@dataclass(frozen=True)
class SizeToken:
    """A frame size paired with its direction, e.g. ``S176`` or ``D1108``."""

    direction: Direction
    size: int
    # mining hashes and sorts tokens constantly; enum hashing is slow
    _key: tuple[int, int] = field(init=False, repr=False, compare=False)
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 0:
            raise ValueError(f"negative frame size {self.size}")
        object.__setattr__(self, "_key", (_DIRECTION_RANK[self.direction], self.size))
        object.__setattr__(self, "_hash", hash(self._key))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def parse(cls, text: str) -> "SizeToken":
        m = _TOKEN_RE.fullmatch(text.strip())
        if not m:
            raise ValueError(f"not a size token: {text!r}")
        return cls(Direction(m.group(1)), int(m.group(2)))

    def sort_key(self) -> tuple[int, int]:
        return self._key

    def __lt__(self, other: "SizeToken") -> bool:
        if not isinstance(other, SizeToken):
            return NotImplemented
        return self._key < other._key

    def __str__(self) -> str:
        return f"{self.direction.value}{self.size}"

    def __repr__(self) -> str:
        return f"SizeToken({self})"


def tokens(text: str) -> list[SizeToken]:
    """Parse a whitespace separated token string: ``tokens("S176 D1108")``."""
    return [SizeToken.parse(t) for t in text.split()]


def canonical(token_set: Iterable[SizeToken]) -> list[SizeToken]:
    return sorted(set(token_set))


def format_tokens(token_set: Iterable[SizeToken]) -> list[str]:
    return [str(t) for t in canonical(token_set)]


class EventClass(enum.Enum):
    AUTOMATED_CLEANING = "AutomatedCleaning"
    APP_TRIGGERED_CLEANING = "AppTriggeredCleaning"
    SCHEDULED_CLEANING = "ScheduledCleaning"
    PHYSICAL_TRIGGERED_CLEANING = "PhysicalTriggeredCleaning"
    APP_ENGAGEMENT = "AppEngagement"
    BIN_REMOVAL = "BinRemoval"

    @classmethod
    def parse(cls, name: str) -> "EventClass":
        """Accept ``AppEngagement``, ``app_engagement`` or ``APP_ENGAGEMENT``."""
        key = name.replace("_", "").replace("-", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown event class: {name!r}")

    def __str__(self) -> str:
        return self.value
