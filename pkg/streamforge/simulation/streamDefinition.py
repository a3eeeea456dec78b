"""Static, replayable generator configuration."""
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping, Optional, Tuple

from ..markovChain import MarkovChain
from ..processTree import ProcessTree, format_tree, parse_tree

DEFINITION_VERSION = "1"


def _strict_keys(data, allowed, what):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ValueError(f"Unknown {what} fields: {sorted(unknown)}")


@dataclass(frozen=True)
class SimulationParams:
    """Timing, disorder and nesting parameters of a simulation.

    Parameters
    ----------
    case_arrival : float
        Mean gap between root case arrivals, in ticks (exponential gaps).
    duration_mean : float
        Mean activity duration, in ticks.
    duration_cv : float
        Coefficient of variation of activity durations.
    duration_overrides : dict, optional
        Per-activity ``(mean, cv)`` overriding the global duration.
    ooo_prob : float
        Probability that an event arrives late.
    ooo_max_delay : int
        Largest number of on-time events overtaking a late event.
    trigger_prob : float
        Probability that an end event spawns a sub-case.
    max_depth : int
        Deepest allowed nesting level of sub-cases (root cases are level 0).
    t_scale : float
        Duration factor between a case and its sub-cases.
    t_simplify : float
        Probability that each non-dominant branch of the parent chain is
        dropped in its sub-process chain.
    t_abstract : bool
        Whether sub-process activities are relabeled with their depth.
    seed : int
        Random seed.
    """
    case_arrival: float = 20.0
    duration_mean: float = 10.0
    duration_cv: float = 0.5
    duration_overrides: Mapping[str, Tuple[float, float]] = field(
        default_factory=dict
    )
    ooo_prob: float = 0.0
    ooo_max_delay: int = 0
    trigger_prob: float = 0.0
    max_depth: int = 1
    t_scale: float = 1.0
    t_simplify: float = 0.0
    t_abstract: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("ooo_prob", "trigger_prob", "t_simplify"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0 < self.t_scale <= 4:
            raise ValueError(f"t_scale must lie in (0, 4], got {self.t_scale}")
        if self.ooo_max_delay < 0:
            raise ValueError(
                f"ooo_max_delay must be >= 0, got {self.ooo_max_delay}"
            )
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.case_arrival <= 0 or self.duration_mean <= 0:
            raise ValueError("case_arrival and duration_mean must be positive")
        if self.duration_cv < 0:
            raise ValueError(f"duration_cv must be >= 0, got {self.duration_cv}")
        for activity, (mean, cv) in self.duration_overrides.items():
            if mean <= 0 or cv < 0:
                raise ValueError(f"Invalid duration override for {activity!r}")

    def duration_of(self, activity):
        """``(mean, cv)`` of `activity`, ignoring any depth suffix."""
        for key in (activity, activity.split("@")[0]):
            if key in self.duration_overrides:
                return tuple(self.duration_overrides[key])
        return self.duration_mean, self.duration_cv

    def to_dict(self):
        out = asdict(self)
        out["duration_overrides"] = {
            k: list(v) for k, v in sorted(self.duration_overrides.items())
        }
        return out

    @classmethod
    def from_dict(cls, data):
        _strict_keys(data, [f.name for f in fields(cls)], "params")
        data = dict(data)
        if "duration_overrides" in data:
            data["duration_overrides"] = {
                k: tuple(v) for k, v in data["duration_overrides"].items()
            }
        return cls(**data)


@dataclass(frozen=True)
class Transition:
    """How a drift segment takes over from its predecessor.

    Parameters
    ----------
    kind : str
        ``"sudden"`` or ``"gradual"``.
    window : int
        Length of the gradual ramp, in emitted events.
    """
    kind: str = "sudden"
    window: int = 0

    def __post_init__(self):
        if self.kind not in ("sudden", "gradual"):
            raise ValueError(f"Unknown transition kind {self.kind!r}")
        if self.kind == "gradual" and self.window < 1:
            raise ValueError("Gradual transitions need a window >= 1")

    def to_dict(self):
        if self.kind == "sudden":
            return {"kind": "sudden"}
        return {"kind": "gradual", "window": self.window}

    @classmethod
    def from_dict(cls, data):
        _strict_keys(data, ["kind", "window"], "transition")
        return cls(**data)


SUDDEN = Transition()


def gradual(window):
    return Transition("gradual", window)


@dataclass(frozen=True)
class DriftSegment:
    """One stretch of a drifting stream.

    Parameters
    ----------
    n_events : int
        Number of emitted events during which the segment is active.
    transition : Transition
        How the segment replaces the previous one.
    chain, tree, params : optional
        Overrides of the definition's base chain, tree and parameters;
        ``None`` inherits them.
    """
    n_events: int
    transition: Transition = SUDDEN
    chain: Optional[MarkovChain] = None
    tree: Optional[ProcessTree] = None
    params: Optional[SimulationParams] = None

    def __post_init__(self):
        if self.n_events < 1:
            raise ValueError(f"Segment n_events must be >= 1, got {self.n_events}")
        if self.transition.window > self.n_events:
            raise ValueError(
                f"Gradual window {self.transition.window} exceeds segment "
                f"length {self.n_events}"
            )


@dataclass(frozen=True)
class StreamDefinition:
    """Replayable stream generator: a chain, its parameters and drift
    segments.

    Parameters
    ----------
    chain : MarkovChain
        Base activity chain.
    params : SimulationParams
        Base simulation parameters.
    segments : tuple of DriftSegment
        At least one segment.
    tree : ProcessTree, optional
        Tree the base chain was derived from.
    version : str
        Definition format version.
    """
    chain: MarkovChain
    params: SimulationParams = SimulationParams()
    segments: Tuple[DriftSegment, ...] = (DriftSegment(1),)
    tree: Optional[ProcessTree] = None
    version: str = DEFINITION_VERSION

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("A definition needs at least one segment")
        if self.version != DEFINITION_VERSION:
            raise ValueError(f"Unsupported definition version {self.version!r}")

    def resolved_segments(self):
        """``(chain, params, segment)`` for each segment, inheriting the
        base values where the segment leaves them unset.
        """
        return [
            (s.chain or self.chain, s.params or self.params, s)
            for s in self.segments
        ]

    def with_seed(self, seed):
        """Copy with the base simulation seed replaced."""
        return replace(self, params=replace(self.params, seed=seed))

    def to_dict(self):
        def segment(s):
            out = {"n_events": s.n_events, "transition": s.transition.to_dict()}
            if s.chain is not None:
                out["chain"] = s.chain.to_dict()
            if s.tree is not None:
                out["tree"] = format_tree(s.tree)
            if s.params is not None:
                out["params"] = s.params.to_dict()
            return out

        return {
            "version": self.version,
            "tree": None if self.tree is None else format_tree(self.tree),
            "chain": self.chain.to_dict(),
            "params": self.params.to_dict(),
            "segments": [segment(s) for s in self.segments],
        }

    @classmethod
    def from_dict(cls, data):
        """Build a definition from its dictionary form, rejecting unknown
        fields.
        """
        _strict_keys(
            data, ["version", "tree", "chain", "params", "segments"],
            "definition"
        )
        for key in ("version", "chain", "params", "segments"):
            if key not in data:
                raise ValueError(f"Definition misses field {key!r}")

        def tree(text):
            return None if text is None else parse_tree(text)

        segments = []
        for s in data["segments"]:
            _strict_keys(
                s, ["n_events", "transition", "chain", "tree", "params"],
                "segment"
            )
            segments.append(DriftSegment(
                n_events=s["n_events"],
                transition=Transition.from_dict(s.get("transition", {})),
                chain=MarkovChain.from_dict(s["chain"]) if "chain" in s else None,
                tree=tree(s.get("tree")),
                params=(
                    SimulationParams.from_dict(s["params"])
                    if "params" in s else None
                ),
            ))
        return cls(
            chain=MarkovChain.from_dict(data["chain"]),
            params=SimulationParams.from_dict(data["params"]),
            segments=tuple(segments),
            tree=tree(data.get("tree")),
            version=data["version"],
        )
