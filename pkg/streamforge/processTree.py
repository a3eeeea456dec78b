"""Block-structured process trees: stochastic generation, trace sampling and a
compact textual form.

Textual grammar::

    node   := "'" label "'" | "tau" | op "(" child ("," child)* ")"
            | "*[" exit_prob "](" node "," node ")"
    op     := "->" | "X" | "+"
    child  := node ["[" weight "]"]        (weights only below X)

For instance ``->( 'a0', X( 'a1'[0.3], 'a2'[0.7] ) )``.
"""
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

WEIGHT_TOL = 1e-9


class Operator(Enum):
    LEAF = "leaf"
    SILENT = "tau"
    SEQUENCE = "->"
    CHOICE = "X"
    PARALLEL = "+"
    LOOP = "*"


@dataclass(frozen=True)
class ProcessTree:
    """Process tree node.

    Use the constructors :func:`leaf`, :func:`tau`, :func:`sequence`,
    :func:`choice`, :func:`parallel` and :func:`loop` rather than building
    nodes directly.

    Parameters
    ----------
    kind : Operator
        Node operator.
    children : tuple of ProcessTree
        Ordered subtrees; ``(body, redo)`` for loops.
    activity : str, optional
        Label of a leaf.
    weights : tuple of float, optional
        Branch probabilities of a choice.
    exit_prob : float, optional
        Probability of leaving a loop after each body execution.
    """
    kind: Operator
    children: Tuple["ProcessTree", ...] = field(default_factory=tuple)
    activity: Optional[str] = None
    weights: Optional[Tuple[float, ...]] = None
    exit_prob: Optional[float] = None

    def __post_init__(self):
        n = len(self.children)
        if self.kind is Operator.LEAF:
            if not isinstance(self.activity, str) or not self.activity:
                raise ValueError("Leaf requires a non-empty activity label")
            if "'" in self.activity:
                raise ValueError(
                    f"Activity label {self.activity!r} contains a quote"
                )
        elif self.kind is Operator.LOOP:
            if n != 2:
                raise ValueError(f"Loop requires body and redo, got {n} children")
            if self.exit_prob is None or not 0 < self.exit_prob <= 1:
                raise ValueError(
                    f"Loop exit_prob must lie in (0, 1], got {self.exit_prob}"
                )
        elif self.kind is not Operator.SILENT:
            if n < 2:
                raise ValueError(f"{self.kind.name} requires >= 2 children")
        if self.kind is Operator.CHOICE:
            if self.weights is None or len(self.weights) != n:
                raise ValueError("Choice requires one weight per child")
            if min(self.weights) <= 0:
                raise ValueError(f"Choice weights must be positive: {self.weights}")
            if abs(sum(self.weights) - 1) > WEIGHT_TOL:
                raise ValueError(f"Choice weights must sum to 1: {self.weights}")

    def __str__(self):
        return format_tree(self)


def leaf(activity):
    return ProcessTree(Operator.LEAF, activity=activity)


def tau():
    return ProcessTree(Operator.SILENT)


def sequence(*children):
    return ProcessTree(Operator.SEQUENCE, tuple(children))


def parallel(*children):
    return ProcessTree(Operator.PARALLEL, tuple(children))


def choice(children, weights):
    weights = tuple(float(w) for w in weights)
    return ProcessTree(Operator.CHOICE, tuple(children), weights=weights)


def loop(body, redo, exit_prob):
    return ProcessTree(Operator.LOOP, (body, redo), exit_prob=float(exit_prob))


def activities(tree):
    """Set of activity labels used in the leaves of `tree`."""
    if tree.kind is Operator.LEAF:
        return {tree.activity}
    out = set()
    for child in tree.children:
        out |= activities(child)
    return out


def depth(tree):
    """Depth of `tree`, a single node having depth 1."""
    if not tree.children:
        return 1
    return 1 + max(depth(c) for c in tree.children)


@dataclass(frozen=True)
class TreeGenParams:
    """Parameters of the random tree generator.

    Parameters
    ----------
    n_activities : int
        Alphabet size; labels are ``a0 ... a{n-1}``, each used at most once.
    w_seq, w_choice, w_parallel, w_loop : float
        Operator probabilities, non-negative and summing to one.
    p_silent : float
        Probability that a leaf position holds a silent step.
    max_depth : int
        Maximum tree depth; nodes at this depth are leaves.
    seed : int
        Random seed.
    exit_prob : float
        Exit probability of generated loops, by default 0.5.
    """
    n_activities: int = 5
    w_seq: float = 0.4
    w_choice: float = 0.3
    w_parallel: float = 0.2
    w_loop: float = 0.1
    p_silent: float = 0.0
    max_depth: int = 3
    seed: int = 0
    exit_prob: float = 0.5

    def __post_init__(self):
        if not isinstance(self.n_activities, (int, np.integer)) \
                or self.n_activities < 1:
            raise ValueError(f"n_activities must be >= 1, got {self.n_activities}")
        if not isinstance(self.max_depth, (int, np.integer)) \
                or self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        w = self.operator_weights
        if min(w) < 0 or abs(sum(w) - 1) > WEIGHT_TOL:
            raise ValueError(f"Operator weights must form a simplex, got {w}")
        if not 0 <= self.p_silent <= 1:
            raise ValueError(f"p_silent must lie in [0, 1], got {self.p_silent}")
        if not 0 < self.exit_prob <= 1:
            raise ValueError(f"exit_prob must lie in (0, 1], got {self.exit_prob}")

    @property
    def operator_weights(self):
        return (self.w_seq, self.w_choice, self.w_parallel, self.w_loop)


_GEN_OPERATORS = (
    Operator.SEQUENCE, Operator.CHOICE, Operator.PARALLEL, Operator.LOOP
)


def generate_tree(params):
    """Generate a random process tree top-down.

    Each inner node draws its operator from the operator weights and splits
    its share of the alphabet among its children; nodes at ``max_depth`` or
    holding a single label become leaves (silent with probability
    ``p_silent``). Labels left over when a leaf is forced are not used.

    Parameters
    ----------
    params : TreeGenParams
        Generator parameters.

    Returns
    -------
    ProcessTree
        Generated tree, identical for identical parameters.
    """
    rng = np.random.default_rng(params.seed)
    weights = np.asarray(params.operator_weights, dtype=float)
    weights = weights / weights.sum()

    def make_leaf(labels):
        if rng.random() < params.p_silent:
            return tau()
        return leaf(labels[0])

    def build(labels, level):
        if level >= params.max_depth or len(labels) < 2:
            return make_leaf(labels)

        op = _GEN_OPERATORS[rng.choice(len(_GEN_OPERATORS), p=weights)]
        if op is Operator.LOOP:
            n_children = 2
        elif level + 1 == params.max_depth:
            n_children = len(labels)
        else:
            n_children = int(rng.integers(2, min(len(labels), 3) + 1))

        cuts = np.sort(
            rng.choice(np.arange(1, len(labels)), n_children - 1, replace=False)
        )
        children = [
            build(part, level + 1)
            for part in np.split(np.asarray(labels, dtype=object), cuts)
        ]

        if op is Operator.SEQUENCE:
            return sequence(*children)
        if op is Operator.PARALLEL:
            return parallel(*children)
        if op is Operator.LOOP:
            return loop(children[0], children[1], params.exit_prob)
        w = rng.dirichlet(np.ones(n_children)) + 1e-6
        return choice(children, w / w.sum())

    labels = [f"a{i}" for i in range(params.n_activities)]
    return build(labels, 1)


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _play(tree, rng):
    kind = tree.kind
    if kind is Operator.LEAF:
        return [tree.activity]
    if kind is Operator.SILENT:
        return []
    if kind is Operator.SEQUENCE:
        return [a for c in tree.children for a in _play(c, rng)]
    if kind is Operator.CHOICE:
        idx = rng.choice(len(tree.children), p=np.asarray(tree.weights))
        return _play(tree.children[idx], rng)
    if kind is Operator.PARALLEL:
        traces = [_play(c, rng) for c in tree.children]
        # A uniform shuffle of the multiset of child indices is a uniform
        # draw among the distinct interleavings.
        slots = np.repeat(np.arange(len(traces)), [len(t) for t in traces])
        rng.shuffle(slots)
        positions = [0] * len(traces)
        out = []
        for s in slots:
            out.append(traces[s][positions[s]])
            positions[s] += 1
        return out
    body, redo = tree.children
    out = _play(body, rng)
    while rng.random() >= tree.exit_prob:
        out += _play(redo, rng)
        out += _play(body, rng)
    return out


def sample_trace(tree, rng_seed=None):
    """Play out one trace of `tree`.

    Parameters
    ----------
    tree : ProcessTree
        Process tree.
    rng_seed : int or numpy.random.Generator, optional
        Seed or generator, by default ``None``.

    Returns
    -------
    tuple of str
        Activity sequence.
    """
    return tuple(_play(tree, _as_rng(rng_seed)))


def sample_log(tree, n_traces, seed=None):
    """Play out `n_traces` independent traces of `tree`.

    Raises
    ------
    ValueError
        If `n_traces` is smaller than one.
    """
    if n_traces < 1:
        raise ValueError(f"n_traces must be >= 1, got {n_traces}")
    rng = _as_rng(seed)
    return [tuple(_play(tree, rng)) for _ in range(n_traces)]


##############################
# TEXTUAL FORM

def format_tree(tree):
    """Render `tree` in the textual form parsed by :func:`parse_tree`."""
    kind = tree.kind
    if kind is Operator.LEAF:
        return f"'{tree.activity}'"
    if kind is Operator.SILENT:
        return "tau"
    if kind is Operator.LOOP:
        body, redo = tree.children
        return f"*[{tree.exit_prob!r}]( {format_tree(body)}, {format_tree(redo)} )"
    if kind is Operator.CHOICE:
        parts = [
            f"{format_tree(c)}[{w!r}]"
            for c, w in zip(tree.children, tree.weights)
        ]
    else:
        parts = [format_tree(c) for c in tree.children]
    return f"{kind.value}( {', '.join(parts)} )"


_TOKEN = re.compile(
    r"\s*(?:(?P<op>->|X|\+|\*)|'(?P<label>[^']*)'|(?P<tau>tau\b)"
    r"|\[(?P<num>[^\]]*)\]|(?P<punct>[(),]))"
)


class _TreeParser():
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def error(self, msg):
        raise ValueError(f"Invalid process tree at offset {self.pos}: {msg}")

    def peek(self):
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            if self.text[self.pos:].strip():
                self.error(f"unexpected {self.text[self.pos:self.pos + 10]!r}")
            return None, None
        return m.lastgroup, m

    def take(self, group=None, value=None):
        kind, m = self.peek()
        if kind is None:
            self.error("unexpected end of input")
        if group is not None and kind != group:
            self.error(f"expected {value or group}, found {m.group().strip()!r}")
        if value is not None and m.group(kind) != value:
            self.error(f"expected {value!r}, found {m.group(kind)!r}")
        self.pos = m.end()
        return m.group(kind)

    def number(self):
        raw = self.take("num")
        try:
            return float(raw)
        except ValueError:
            self.error(f"{raw!r} is not a number")

    def node(self):
        kind, m = self.peek()
        if kind == "label":
            try:
                node = leaf(m.group("label"))
            except (TypeError, ValueError) as err:
                self.error(str(err))
            self.take()
            return node
        if kind == "tau":
            self.take()
            return tau()
        if kind != "op":
            self.error("expected a node")
        op = self.take()
        exit_prob = self.number() if op == "*" else None

        self.take("punct", "(")
        children, weights = [], []
        while True:
            children.append(self.node())
            if self.peek()[0] == "num":
                weights.append(self.number())
            sep = self.take("punct")
            if sep == ")":
                break
            if sep != ",":
                self.error("expected ',' or ')'")

        try:
            if op == "->":
                return sequence(*children)
            if op == "+":
                return parallel(*children)
            if op == "*":
                return loop(*children, exit_prob=exit_prob)
            return choice(children, weights)
        except (TypeError, ValueError) as err:
            self.error(str(err))

    def parse(self):
        tree = self.node()
        if self.text[self.pos:].strip():
            self.error("trailing characters")
        return tree


def parse_tree(text):
    """Parse the textual form produced by :func:`format_tree`.

    Raises
    ------
    ValueError
        If the text is malformed, with the character offset of the problem.
    """
    return _TreeParser(text).parse()
