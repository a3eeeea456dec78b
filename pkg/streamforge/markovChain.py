"""Order-k Markov chains over activity histories, estimated from traces
played out of a process tree.

States are activity-history tuples of length at most ``k``; the empty tuple
is the start state and :data:`END` the end symbol. A transition from state
``h`` on activity ``a`` leads to ``(h + (a,))[-k:]``.
"""
import logging
from collections import Counter, defaultdict

import numpy as np

from .processTree import sample_log

logger = logging.getLogger(__name__)

START = ()
END = "__end__"
ROW_TOL = 1e-9


def next_state(state, symbol, order):
    """History reached from `state` after emitting activity `symbol`."""
    return (tuple(state) + (symbol,))[-order:]


class MarkovChain():
    """Row-stochastic order-k activity chain.

    Parameters
    ----------
    order : int
        Chain order ``k >= 1``.
    rows : dict
        Mapping ``state -> {symbol: probability}``; symbols are activity
        labels or :data:`END`.

    Raises
    ------
    ValueError
        If the order is invalid, a row does not sum to one or the start
        state is missing.
    """
    def __init__(self, order, rows):
        if not isinstance(order, (int, np.integer)) or order < 1:
            raise ValueError(f"Chain order must be >= 1, got {order}")
        self.order = int(order)
        self._rows = {}
        for state, row in rows.items():
            state = tuple(state)
            row = {s: float(p) for s, p in row.items() if p > 0}
            total = sum(row.values())
            if abs(total - 1) > ROW_TOL:
                raise ValueError(
                    f"Row {state} sums to {total!r} instead of 1"
                )
            self._rows[state] = row
        if START not in self._rows:
            raise ValueError("Chain has no start state")
        self._samplers = {}

    @property
    def states(self):
        """States, start first, then by history length and labels."""
        return sorted(self._rows, key=lambda s: (len(s), s))

    @property
    def activities(self):
        return sorted({s for row in self._rows.values() for s in row} - {END})

    def row(self, state):
        """Outgoing probabilities of `state`, empty for unknown states."""
        return dict(self._rows.get(tuple(state), {}))

    def probability(self, state, symbol):
        return self._rows.get(tuple(state), {}).get(symbol, 0.0)

    def next_state(self, state, symbol):
        return next_state(state, symbol, self.order)

    def __contains__(self, state):
        return tuple(state) in self._rows

    def __eq__(self, other):
        if not isinstance(other, MarkovChain):
            return NotImplemented
        return self.order == other.order and self._rows == other._rows

    def __repr__(self):
        return f"<MarkovChain order={self.order} states={len(self._rows)}>"

    def trace_probability(self, trace):
        """Probability that a walk emits exactly `trace` then ends."""
        state, p = START, 1.0
        for a in trace:
            p *= self.probability(state, a)
            if p == 0:
                return 0.0
            state = self.next_state(state, a)
        return p * self.probability(state, END)

    def next_symbol(self, state, rng):
        """Draw the symbol following `state`."""
        sampler = self._samplers.get(state)
        if sampler is None:
            symbols = sorted(self._rows[state])
            cum = np.cumsum([self._rows[state][s] for s in symbols])
            sampler = self._samplers[state] = (symbols, cum)
        symbols, cum = sampler
        idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        return symbols[min(idx, len(symbols) - 1)]

    def walk(self, rng):
        """Yield the activities of one start-to-end walk."""
        state = START
        while True:
            symbol = self.next_symbol(state, rng)
            if symbol == END:
                return
            yield symbol
            state = self.next_state(state, symbol)

    def relabel(self, fn):
        """Chain with every activity label ``a`` replaced by ``fn(a)``."""
        def lab(s):
            return s if s == END else fn(s)
        rows = {
            tuple(lab(a) for a in state): {lab(s): p for s, p in row.items()}
            for state, row in self._rows.items()
        }
        return MarkovChain(self.order, rows)

    def to_dict(self):
        """Serializable form: explicit state list and sparse
        ``(from_state, to_symbol, p)`` triples.
        """
        return {
            "order": self.order,
            "states": [list(s) for s in self.states],
            "transitions": [
                [list(s), sym, self._rows[s][sym]]
                for s in self.states for sym in sorted(self._rows[s])
            ],
        }

    @classmethod
    def from_dict(cls, data):
        """Inverse of :meth:`to_dict`.

        Raises
        ------
        ValueError
            On unknown keys, transitions from undeclared states or rows not
            summing to one.
        """
        unknown = set(data) - {"order", "states", "transitions"}
        if unknown:
            raise ValueError(f"Unknown chain fields: {sorted(unknown)}")
        states = {tuple(s) for s in data["states"]}
        rows = {s: {} for s in states}
        for from_state, symbol, p in data["transitions"]:
            from_state = tuple(from_state)
            if from_state not in rows:
                raise ValueError(f"Transition from undeclared state {from_state}")
            rows[from_state][symbol] = float(p)
        return cls(data["order"], rows)


def sample_walk(chain, rng):
    """Activity sequence of one start-to-end walk of `chain`."""
    return tuple(chain.walk(rng))


def count_transitions(log, k):
    """Count history-to-symbol transitions of a trace log.

    Parameters
    ----------
    log : sequence of traces
        Each trace is a sequence of activity labels.
    k : int
        Chain order: histories keep the last `k` activities.

    Returns
    -------
    dict
        Count table ``state -> Counter(symbol -> count)``; the total count
        is the sum over traces of their length plus one.

    Raises
    ------
    ValueError
        If the log is empty, `k` is smaller than one or a label collides
        with the end symbol.
    """
    if k < 1:
        raise ValueError(f"Chain order must be >= 1, got {k}")
    if len(log) == 0:
        raise ValueError("Cannot count transitions of an empty log")
    counts = defaultdict(Counter)
    for trace in log:
        state = START
        for a in trace:
            if a == END:
                raise ValueError(f"Activity label {END!r} is reserved")
            counts[state][a] += 1
            state = next_state(state, a, k)
        counts[state][END] += 1
    return dict(counts)


def _prune(rows, order):
    """Drop states unreachable from the start or unable to reach the end,
    renormalizing the affected rows, until stable.
    """
    rows = {s: dict(r) for s, r in rows.items()}
    if START not in rows:
        raise ValueError("Chain has no start state")
    while True:
        reach, todo = {START}, [START]
        while todo:
            s = todo.pop()
            for sym in rows.get(s, {}):
                if sym == END:
                    continue
                t = next_state(s, sym, order)
                if t in rows and t not in reach:
                    reach.add(t)
                    todo.append(t)

        alive = {s for s in reach if END in rows[s]}
        changed = True
        while changed:
            changed = False
            for s in reach - alive:
                if any(
                    sym != END and next_state(s, sym, order) in alive
                    for sym in rows[s]
                ):
                    alive.add(s)
                    changed = True

        if START not in alive:
            raise ValueError("No walk from the start state reaches the end")

        pruned = {}
        for s in alive:
            row = {
                sym: p for sym, p in rows[s].items()
                if sym == END or next_state(s, sym, order) in alive
            }
            total = sum(row.values())
            pruned[s] = {sym: p / total for sym, p in row.items()}

        if pruned.keys() == rows.keys() and all(
            pruned[s].keys() == rows[s].keys() for s in rows
        ):
            return pruned
        rows = pruned


def normalize(counts, order=None):
    """Turn a count table into a Markov chain.

    Parameters
    ----------
    counts : dict
        Count table as returned by :func:`count_transitions`.
    order : int, optional
        Chain order, by default the longest history in the table (at
        least one).

    Returns
    -------
    MarkovChain
        Row-stochastic chain restricted to states on some start-to-end walk.

    Raises
    ------
    ValueError
        If a state has a zero row total.
    """
    if order is None:
        order = max([len(s) for s in counts] + [1])
    rows = {}
    for state, row in counts.items():
        total = sum(row.values())
        if total <= 0:
            raise ValueError(f"State {state} has no outgoing counts")
        rows[tuple(state)] = {sym: c / total for sym, c in row.items()}
    return MarkovChain(order, _prune(rows, order))


def tree_to_chain(tree, n_traces=1000, k=1, seed=None):
    """Estimate an order-`k` chain from `n_traces` traces of `tree`."""
    log = sample_log(tree, n_traces, seed)
    chain = normalize(count_transitions(log, k), k)
    logger.debug("Converted tree to %r from %d traces", chain, n_traces)
    return chain


def transform_chain(chain, t_simplify, rng, relabel=None):
    """Structurally simplify `chain`.

    Every branching row keeps its most probable symbol and loses each other
    symbol with probability `t_simplify`; rows are renormalized and dead
    states pruned.

    Parameters
    ----------
    chain : MarkovChain
        Parent chain.
    t_simplify : float
        Branch removal probability in ``[0, 1]``.
    rng : numpy.random.Generator
        Random generator.
    relabel : callable, optional
        Activity relabeling applied after simplification.

    Returns
    -------
    MarkovChain
        Transformed chain.
    """
    if not 0 <= t_simplify <= 1:
        raise ValueError(f"t_simplify must lie in [0, 1], got {t_simplify}")
    rows = {}
    for state in chain.states:
        row = chain.row(state)
        symbols = sorted(row)
        if len(symbols) > 1 and t_simplify > 0:
            keep = {max(symbols, key=lambda s: (row[s], s)), END}
            drop = rng.random(len(symbols)) < t_simplify
            row = {
                s: row[s] for s, d in zip(symbols, drop)
                if s in keep or not d
            }
        total = sum(row.values())
        rows[state] = {s: p / total for s, p in row.items()}

    try:
        out = MarkovChain(chain.order, _prune(rows, chain.order))
    except ValueError:
        logger.debug("Simplification left no complete walk, keeping structure")
        out = chain
    if relabel is not None:
        out = out.relabel(relabel)
    return out
