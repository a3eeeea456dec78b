"""Interval-based event streams: events, arrival-ordered streams, start/end
pairing, case histories and concurrency.
"""
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np


class Lifecycle(Enum):
    """Lifecycle type of an event: it opens or closes an activity instance."""
    START = "start"
    END = "end"


@dataclass(frozen=True)
class Event:
    """Atomic start or end record of an activity instance.

    Parameters
    ----------
    case : str
        Case identifier.
    activity : str
        Activity label.
    ts : int
        Event timestamp, in ticks.
    lifecycle : Lifecycle
        Whether the event starts or ends the activity.
    arrival : int
        Arrival timestamp, in ticks.
    parent_case : str, optional
        Case containing this case, by default ``None``.
    source : str, optional
        Data source label, by default ``None``.

    Raises
    ------
    ValueError
        If a timestamp is negative or the case is its own parent.
    """
    case: str
    activity: str
    ts: int
    lifecycle: Lifecycle
    arrival: int
    parent_case: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.lifecycle, Lifecycle):
            raise TypeError(
                f"lifecycle must be a Lifecycle, got {self.lifecycle!r}"
            )
        if self.ts < 0 or self.arrival < 0:
            raise ValueError(
                f"Negative timestamp in event ts={self.ts} arrival={self.arrival}"
            )
        if self.parent_case is not None and self.parent_case == self.case:
            raise ValueError(f"Case {self.case!r} cannot contain itself")

    @property
    def is_start(self):
        return self.lifecycle is Lifecycle.START

    @property
    def is_end(self):
        return self.lifecycle is Lifecycle.END


class Stream():
    """Immutable sequence of events indexed by arrival position.

    Parameters
    ----------
    events : iterable of Event
        Events, already in arrival order.

    Raises
    ------
    ValueError
        If arrival timestamps decrease along the sequence.
    """
    def __init__(self, events=()):
        self._events = tuple(events)
        for i in range(1, len(self._events)):
            if self._events[i].arrival < self._events[i - 1].arrival:
                raise ValueError(
                    f"Stream not ordered by arrival at position {i}: "
                    f"{self._events[i - 1].arrival} > {self._events[i].arrival}"
                )

    @classmethod
    def from_events(cls, events):
        """Build a stream from events in any order, sorting them (stably) by
        arrival.
        """
        return cls(sorted(events, key=lambda e: e.arrival))

    @property
    def events(self):
        return self._events

    def __len__(self):
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Stream(self._events[idx])
        return self._events[idx]

    def __eq__(self, other):
        if not isinstance(other, Stream):
            return NotImplemented
        return self._events == other._events

    def __hash__(self):
        return hash(self._events)

    def __repr__(self):
        return f"<Stream of {len(self)} events>"

    def cases(self):
        """Case identifiers in order of first arrival."""
        return list(dict.fromkeys(e.case for e in self._events))


@dataclass(frozen=True)
class ActivityInstance:
    """A start event paired with its end event."""
    case: str
    activity: str
    start_ts: int
    end_ts: int
    parent_case: Optional[str] = None

    def __post_init__(self):
        if self.end_ts < self.start_ts:
            raise ValueError(
                f"Instance of {self.activity!r} ends ({self.end_ts}) before "
                f"it starts ({self.start_ts})"
            )


@dataclass(frozen=True)
class CaseHistory:
    """Events of one case up to a time, ordered by event timestamp."""
    case: str
    events: Tuple[Event, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.events)

    def activities(self):
        return [e.activity for e in self.events]


def pair_intervals(stream):
    """Pair start events with their end events.

    Start and end events are matched FIFO per ``(case, activity)``: each
    start takes the earliest end that follows it in event time and is not
    matched yet.

    Parameters
    ----------
    stream : Stream
        Event stream.

    Returns
    -------
    (list[ActivityInstance], list[Event])
        Paired instances and unmatched events (open starts and orphan ends),
        the latter in arrival order.
    """
    # Starts sort before ends on equal ts so zero-length instances pair.
    order = sorted(
        range(len(stream)),
        key=lambda i: (stream[i].ts, 0 if stream[i].is_start else 1, i)
    )
    open_starts = defaultdict(deque)
    instances = []
    orphans = []
    for i in order:
        e = stream[i]
        key = (e.case, e.activity)
        if e.is_start:
            open_starts[key].append(i)
        elif open_starts[key]:
            s = stream[open_starts[key].popleft()]
            instances.append(ActivityInstance(
                e.case, e.activity, s.ts, e.ts, s.parent_case
            ))
        else:
            orphans.append(i)

    unmatched = orphans + [i for q in open_starts.values() for i in q]
    return instances, [stream[i] for i in sorted(unmatched)]


def is_temporally_ordered(stream):
    """Whether event timestamps are non-decreasing along arrival order."""
    ts = [e.ts for e in stream]
    return all(a <= b for a, b in zip(ts, ts[1:]))


def concurrency_profile(stream, times):
    """Concurrency at each of several timestamps.

    Closed instances count when ``start_ts <= t <= end_ts``; open instances
    (start without end) count from their start onwards.

    Parameters
    ----------
    stream : Stream
        Event stream.
    times : array-like of int
        Query timestamps.

    Returns
    -------
    numpy.ndarray
        Number of running activity instances at each timestamp.
    """
    instances, unmatched = pair_intervals(stream)
    times = np.asarray(times)
    starts = np.sort([i.start_ts for i in instances])
    ends = np.sort([i.end_ts for i in instances])
    open_starts = np.sort([e.ts for e in unmatched if e.is_start])

    running = (
        np.searchsorted(starts, times, side="right")
        - np.searchsorted(ends, times, side="left")
    )
    return running + np.searchsorted(open_starts, times, side="right")


def concurrency_at(stream, t_star):
    """Number of activity instances running at ``t_star`` (bounds
    inclusive).
    """
    return int(concurrency_profile(stream, [t_star])[0])


def case_history(stream, case, t):
    """History of `case` up to time `t`.

    Parameters
    ----------
    stream : Stream
        Event stream.
    case : str
        Case identifier.
    t : int or float
        Inclusive upper bound on event timestamps; ``math.inf`` for the
        full history.

    Returns
    -------
    CaseHistory
        Matching events sorted by timestamp, then arrival, then activity.
    """
    selected = [
        (e.ts, e.arrival, e.activity, pos, e)
        for pos, e in enumerate(stream) if e.case == case and e.ts <= t
    ]
    selected.sort(key=lambda x: x[:4])
    return CaseHistory(case, tuple(x[-1] for x in selected))
