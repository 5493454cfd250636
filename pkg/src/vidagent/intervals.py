"""Closed-interval arithmetic over time spans in seconds.

TimeRange is the single time type shared by clips, graph timelines, tool
arguments, and grounding answers. All set operations return sorted,
non-overlapping lists; touching intervals merge.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple


@dataclass(frozen=True, order=True)
class TimeRange:
    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError(f"non-finite time range ({self.start}, {self.end})")
        if self.start < 0:
            raise ValueError(f"negative start {self.start}")
        if self.end < self.start:
            raise ValueError(f"inverted time range ({self.start}, {self.end})")

    @property
    def length(self) -> float:
        return self.end - self.start

    def contains(self, t: float) -> bool:
        return self.start <= t <= self.end

    def clamped(self, lo: float, hi: float) -> Optional["TimeRange"]:
        """Intersect with [lo, hi]; None when nothing remains."""
        s, e = max(self.start, lo), min(self.end, hi)
        if s > e:
            return None
        return TimeRange(s, e)

    def to_pair(self) -> List[float]:
        return [self.start, self.end]

    @classmethod
    def from_pair(cls, pair) -> "TimeRange":
        return cls(float(pair[0]), float(pair[1]))


def merge_ranges(ranges: Iterable[TimeRange]) -> List[TimeRange]:
    """Union of intervals: sorted, non-overlapping, touching spans merged."""
    items = sorted(ranges)
    if not items:
        return []
    out = [items[0]]
    for r in items[1:]:
        last = out[-1]
        if r.start <= last.end:
            if r.end > last.end:
                out[-1] = TimeRange(last.start, r.end)
        else:
            out.append(r)
    return out


def intersect_ranges(a: Iterable[TimeRange], b: Iterable[TimeRange]) -> List[TimeRange]:
    """Pairwise intersection of two interval unions (positive-length parts only)."""
    left = merge_ranges(a)
    right = merge_ranges(b)
    out: List[TimeRange] = []
    i = j = 0
    while i < len(left) and j < len(right):
        s = max(left[i].start, right[j].start)
        e = min(left[i].end, right[j].end)
        if e > s:
            out.append(TimeRange(s, e))
        if left[i].end <= right[j].end:
            i += 1
        else:
            j += 1
    return out


def total_length(ranges: Iterable[TimeRange]) -> float:
    return sum(r.length for r in merge_ranges(ranges))


def overlap_length(a: TimeRange, b: TimeRange) -> float:
    return max(0.0, min(a.end, b.end) - max(a.start, b.start))


def interval_iou(a: TimeRange, b: TimeRange) -> float:
    """Intersection-over-union of two intervals; 0 when the union is empty."""
    inter = overlap_length(a, b)
    union = a.length + b.length - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def ranges_to_pairs(ranges: Iterable[TimeRange]) -> List[List[float]]:
    return [r.to_pair() for r in ranges]


def pairs_to_ranges(pairs: Iterable) -> List[TimeRange]:
    return [TimeRange.from_pair(p) for p in pairs]


def sample_frame_times(span: TimeRange, fps: float) -> List[float]:
    """Frame timestamps start, start+1/fps, ... never exceeding span.end.

    Times are rounded to 3 decimals, the addressing granularity of the
    perception wire contract.
    """
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    step = 1.0 / fps
    times: List[float] = []
    i = 0
    while True:
        t = span.start + i * step
        if t > span.end + 1e-9:
            break
        times.append(round(min(t, span.end), 3))
        i += 1
    return times


def parse_range_pair(t_start, t_end) -> Tuple[float, float]:
    """Validate a raw (start, end) argument pair into floats."""
    s, e = float(t_start), float(t_end)
    if not (math.isfinite(s) and math.isfinite(e)):
        raise ValueError("non-finite time range")
    return s, e
