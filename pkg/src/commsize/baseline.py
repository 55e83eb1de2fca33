"""Empirical community sizes from comment-count tables or pre-aggregated sizes.

Two CSV inputs are accepted (UTF-8, comma-delimited, header required):

* events: ``community,user,count`` with one row per (community, user)
  pair; repeated pairs are summed. Without a ``count`` column every row
  is one comment and rows are counted.
* sizes: ``community,size``.

A user is an active member of a community once they have at least
``min_comments`` comments there. Communities above ``size_cap`` active
members are dropped when ``exclude_above_cap`` is set.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

log = logging.getLogger(__name__)


class BaselineParseError(ValueError):
    """A row could not be read; ``line`` is the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class BaselineValidationError(ValueError):
    pass


@dataclass(frozen=True)
class CommentEvent:
    community: str
    user: str
    count: int = 1


@dataclass(frozen=True)
class BaselineConfig:
    min_comments: int = 5
    size_cap: int = 9000
    exclude_above_cap: bool = True

    def __post_init__(self):
        if self.min_comments < 1:
            raise ValueError("min_comments must be at least 1")
        if self.size_cap < 1:
            raise ValueError("size_cap must be at least 1")


def _positive_int(value: str, what: str, line: int) -> int:
    try:
        n = int(value)
    except (TypeError, ValueError):
        raise BaselineParseError(f"{what} {value!r} is not an integer", line) from None
    if n < 0:
        raise BaselineParseError(f"{what} {n} is negative", line)
    return n


def _reader(fh) -> tuple[csv.DictReader, list[str]]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        raise BaselineParseError("empty file, header row missing", 1)
    return reader, [f.strip() for f in reader.fieldnames]


def read_events(path) -> Iterator[CommentEvent]:
    """Stream events from a ``community,user[,count]`` CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader, fields = _reader(fh)
        reader.fieldnames = fields
        if not {"community", "user"} <= set(fields):
            raise BaselineParseError(
                f"expected header with community,user[,count], got {','.join(fields)}", 1
            )
        has_count = "count" in fields
        for row in reader:
            line = reader.line_num
            community, user = row.get("community"), row.get("user")
            if not community or not user:
                raise BaselineParseError("missing community or user", line)
            count = 1
            if has_count:
                count = _positive_int(row.get("count"), "count", line)
                if count == 0:
                    raise BaselineParseError("count must be positive", line)
            yield CommentEvent(community.strip(), user.strip(), count)


def aggregate_members(events: Iterable[CommentEvent],
                      cfg: BaselineConfig = BaselineConfig()) -> dict[str, int]:
    """Active members per community, keyed and sorted by community.

    Communities with no qualifying user are kept with size 0.
    """
    counts: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for ev in events:
        counts[ev.community][ev.user] += ev.count
    sizes = {}
    for community in sorted(counts):
        n = sum(1 for c in counts[community].values() if c >= cfg.min_comments)
        if cfg.exclude_above_cap and n > cfg.size_cap:
            log.info("excluding %s: %d active members exceeds cap %d", community, n, cfg.size_cap)
            continue
        sizes[community] = n
    return sizes


def load_sizes(path, cfg: BaselineConfig = BaselineConfig()) -> dict[str, int]:
    """Read a ``community,size`` table, applying the size cap."""
    sizes: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader, fields = _reader(fh)
        reader.fieldnames = fields
        if not {"community", "size"} <= set(fields):
            raise BaselineParseError(
                f"expected header with community,size, got {','.join(fields)}", 1
            )
        for row in reader:
            line = reader.line_num
            key = (row.get("community") or "").strip()
            if not key:
                raise BaselineParseError("missing community", line)
            size = _positive_int(row.get("size"), "size", line)
            if key in sizes:
                raise BaselineValidationError(f"duplicate community key {key!r} (line {line})")
            sizes[key] = size
    kept = {}
    for key, size in sizes.items():
        if cfg.exclude_above_cap and size > cfg.size_cap:
            log.info("excluding %s: size %d exceeds cap %d", key, size, cfg.size_cap)
            continue
        kept[key] = size
    return kept


def write_sizes(path, sizes: dict[str, int]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["community", "size"])
        for key, size in sizes.items():
            w.writerow([key, size])
