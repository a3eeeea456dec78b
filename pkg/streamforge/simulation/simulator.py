"""Discrete-event simulation of interval-based event streams.

Root cases arrive as a Poisson process; each case walks its Markov chain,
emitting a start and an end event per activity with log-normal durations.
End events may trigger sub-cases whose chain and durations are transformed
copies of the parent's. Arrival disorder is applied online as events are
emitted, so streams can be consumed while they are simulated.
"""
import heapq
import logging
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, replace

import numpy as np
import simpy

from ..eventStream import Event, Lifecycle, Stream
from ..markovChain import END, START, transform_chain

logger = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Raised when a definition cannot produce the requested stream."""


def lognormal_duration(rng, mean, cv):
    """Draw an integer duration with the given mean and coefficient of
    variation.
    """
    if cv == 0:
        return max(int(round(mean)), 0)
    sigma2 = np.log1p(cv ** 2)
    mu = np.log(mean) - sigma2 / 2
    return max(int(round(rng.lognormal(mu, np.sqrt(sigma2)))), 0)


class DisorderBuffer():
    """Online arrival-disorder model.

    Events are pushed in emission order. Each one is held back with
    probability `ooo_prob` until ``U{1..ooo_max_delay}`` on-time events
    have overtaken it; held events falling due together are released most
    recent first, and :meth:`flush` releases what is left in the same
    order. With every event held the arrival order approaches the reverse
    of the emission order. An end event is never released before the start
    it is paired with (FIFO per case and activity), and parks until then.

    Released events carry the largest timestamp emitted so far as their
    arrival stamp.

    Parameters
    ----------
    rng : numpy.random.Generator
        Random generator; two uniforms are drawn per pushed event.
    """
    def __init__(self, rng):
        self.rng = rng
        self.n_pushed = 0
        self.on_time = 0
        self.now = None
        self.held = []
        self.open_starts = defaultdict(deque)
        self.unreleased = set()
        self.match = {}
        self.parked = defaultdict(list)

    def push(self, event, ooo_prob=0.0, ooo_max_delay=0):
        """Add the next emitted event.

        Returns
        -------
        list of Event
            Events released by this push, in arrival order.
        """
        i = self.n_pushed
        self.n_pushed += 1
        self.now = event.ts if self.now is None else max(self.now, event.ts)
        # Both draws are made for every event so that raising ooo_prob only
        # holds back more events, with the same delay sizes.
        u, size = self.rng.random(2)

        pair = (event.case, event.activity)
        if event.is_start:
            self.open_starts[pair].append(i)
            self.unreleased.add(i)
        elif self.open_starts[pair]:
            self.match[i] = self.open_starts[pair].popleft()

        if ooo_max_delay > 0 and u < ooo_prob:
            due = self.on_time + 1 + int(size * ooo_max_delay)
            heapq.heappush(self.held, (due, -i, i, event))
            return []

        out = self._release(i, event)
        if not out:
            return out
        self.on_time += 1
        while self.held and self.held[0][0] <= self.on_time:
            _, _, j, e = heapq.heappop(self.held)
            out.extend(self._release(j, e))
        return out

    def flush(self):
        """Release every held event, most recent first."""
        out = []
        for _, _, j, e in sorted(self.held, key=lambda h: h[1]):
            out.extend(self._release(j, e))
        self.held = []
        return out

    def _release(self, i, event):
        start = self.match.pop(i, None)
        if start in self.unreleased:
            self.parked[start].append((i, event))
            return []
        out = [replace(event, arrival=int(self.now))]
        if i in self.unreleased:
            self.unreleased.discard(i)
            for j, end in self.parked.pop(i, ()):
                out.extend(self._release(j, end))
        return out


def inject_disorder(events, ooo_prob, ooo_max_delay, rng):
    """Stamp the arrival of events and reorder them with a
    :class:`DisorderBuffer`.

    Parameters
    ----------
    events : sequence of Event
        Events in emission order.
    ooo_prob : float or array-like
        Hold-back probability, scalar or one value per event.
    ooo_max_delay : int or array-like
        Largest number of overtaking events, scalar or one value per event.
    rng : numpy.random.Generator
        Random generator.

    Returns
    -------
    list of Event
        Events in arrival order with arrival timestamps set.
    """
    n = len(events)
    probs = np.broadcast_to(np.asarray(ooo_prob, dtype=float), (n,))
    max_delay = np.broadcast_to(np.asarray(ooo_max_delay, dtype=int), (n,))
    buffer = DisorderBuffer(rng)
    out = []
    for e, p, d in zip(events, probs, max_delay):
        out.extend(buffer.push(e, float(p), int(d)))
    out.extend(buffer.flush())
    return out


@dataclass(frozen=True)
class Subcase:
    """A sub-case triggered by an end event."""
    case: str
    parent_case: str
    depth: int
    start_ts: int

    @property
    def source(self):
        return f"src-{self.depth}"


def case_depth(case):
    """Nesting level encoded in a generated case id (``c3.0.1`` is 2)."""
    return case.count(".")


def spawn_subcase(parent_end_event, params, rng, index=0):
    """Possibly trigger a sub-case from an end event.

    Parameters
    ----------
    parent_end_event : Event
        End event of the parent case.
    params : SimulationParams
        Parameters holding ``trigger_prob`` and ``max_depth``.
    rng : numpy.random.Generator
        Random generator.
    index : int, optional
        Number of sub-cases the parent already spawned, by default 0.

    Returns
    -------
    Subcase or None
        The new sub-case, starting at the trigger timestamp, or ``None``.
    """
    depth = case_depth(parent_end_event.case)
    if depth >= params.max_depth or params.trigger_prob <= 0:
        return None
    if rng.random() >= params.trigger_prob:
        return None
    return Subcase(
        case=f"{parent_end_event.case}.{index}",
        parent_case=parent_end_event.case,
        depth=depth + 1,
        start_ts=parent_end_event.ts,
    )


class _Plan():
    """A resolved drift segment: chains per nesting level and parameters."""
    def __init__(self, chain, params, segment, start_at, rng):
        if chain.probability(START, END) >= 1:
            raise SimulationError("Chain never emits an activity")
        self.params = params
        self.transition = segment.transition
        self.start_at = start_at
        self.chains = [chain]
        for level in range(1, params.max_depth + 1):
            relabel = None
            if params.t_abstract:
                def relabel(a, level=level):
                    return f"{a.split('@')[0]}@{level}"
            self.chains.append(transform_chain(
                self.chains[-1], params.t_simplify, rng, relabel
            ))


class StreamSimulator():
    """Process-based simulation of one or more drift segments.

    Parameters
    ----------
    definition : StreamDefinition
        Stream definition; the seed of its base parameters drives all
        randomness.
    drift : bool, optional
        Whether to use every segment, by default ``True``. If ``False`` only
        the first segment is simulated.
    """
    def __init__(self, definition, drift=True):
        self.definition = definition
        resolved = definition.resolved_segments()
        if not drift:
            resolved = resolved[:1]

        walk_seq, disorder_seq, transform_seq = np.random.SeedSequence(
            definition.params.seed
        ).spawn(3)
        transform_rng = np.random.default_rng(transform_seq)
        self._walk_seed = walk_seq
        self._disorder_seed = disorder_seq

        self.plans = []
        start_at = 0
        for chain, params, segment in resolved:
            self.plans.append(
                _Plan(chain, params, segment, start_at, transform_rng)
            )
            start_at += segment.n_events

    def iter_events(self, n_events):
        """Yield exactly `n_events` events in arrival order while the
        simulation advances.

        Only the events held back by the disorder model are buffered.

        Raises
        ------
        ValueError
            If `n_events` is negative.
        """
        if n_events < 0:
            raise ValueError(f"n_events must be >= 0, got {n_events}")
        self.rng = np.random.default_rng(self._walk_seed)
        self.env = simpy.Environment()
        self.n_events = n_events
        self.n_emitted = 0
        self.pending = deque()
        self.case_counter = 0
        self.child_counter = Counter()
        buffer = DisorderBuffer(np.random.default_rng(self._disorder_seed))

        if n_events > 0:
            self.env.process(self._arrivals())
        while True:
            while self.pending:
                event, params = self.pending.popleft()
                yield from buffer.push(
                    event, params.ooo_prob, params.ooo_max_delay
                )
            if self.n_emitted >= n_events:
                break
            self.env.step()
        yield from buffer.flush()
        logger.debug(
            "Simulated %d events over %d root cases until tick %s",
            self.n_emitted, self.case_counter, self.env.now
        )

    def run(self, n_events):
        """Simulate exactly `n_events` events.

        Returns
        -------
        Stream
            Arrival-ordered stream.
        """
        return Stream(self.iter_events(n_events))

    def _emit(self, event, plan):
        if self.n_emitted >= self.n_events:
            return
        self.n_emitted += 1
        self.pending.append((event, plan.params))

    def _choose_plan(self):
        m = self.n_emitted
        idx = 0
        for i, plan in enumerate(self.plans):
            if plan.start_at <= m:
                idx = i
        plan = self.plans[idx]
        if idx > 0 and plan.transition.kind == "gradual":
            progress = (m - plan.start_at) / plan.transition.window
            if progress < 1 and self.rng.random() >= progress:
                return self.plans[idx - 1]
        return plan

    def _arrivals(self):
        while True:
            plan = self._choose_plan()
            case = f"c{self.case_counter}"
            self.case_counter += 1
            self.env.process(self._case(case, plan, 0, None))
            gap = self.rng.exponential(plan.params.case_arrival)
            yield self.env.timeout(int(round(gap)))

    def _case(self, case, plan, depth, parent):
        params = plan.params
        scale = params.t_scale ** depth
        source = f"src-{depth}"
        for activity in plan.chains[depth].walk(self.rng):
            self._emit(Event(
                case, activity, self.env.now, Lifecycle.START, self.env.now,
                parent, source
            ), plan)
            mean, cv = params.duration_of(activity)
            yield self.env.timeout(
                lognormal_duration(self.rng, mean * scale, cv)
            )
            end = Event(
                case, activity, self.env.now, Lifecycle.END, self.env.now,
                parent, source
            )
            self._emit(end, plan)

            sub = spawn_subcase(end, params, self.rng, self.child_counter[case])
            if sub is not None:
                self.child_counter[case] += 1
                self.env.process(
                    self._case(sub.case, plan, sub.depth, sub.parent_case)
                )


def simulate(definition, n_events):
    """Simulate `n_events` events of the first segment of `definition`."""
    return StreamSimulator(definition, drift=False).run(n_events)


def simulate_with_drift(definition, total_events):
    """Simulate `total_events` events switching between the segments of
    `definition`.

    The segment is chosen per case, when the case starts, from the number
    of events emitted so far. A sudden segment takes over every case started
    once its predecessors emitted their share of events. A gradual one takes
    over new cases with a probability ramping linearly from 0 to 1 over its
    window, so during the ramp events of both segments interleave at the
    granularity of whole cases. Cases in flight finish under the segment
    they started with. The last segment stays active beyond its share.
    """
    return StreamSimulator(definition, drift=True).run(total_events)


def iter_stream(definition, total_events, drift=True):
    """Lazily yield the events of :func:`simulate_with_drift` (or of
    :func:`simulate` if `drift` is ``False``) as they are simulated.
    """
    return StreamSimulator(definition, drift=drift).iter_events(total_events)
