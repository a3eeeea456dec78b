"""Bayesian optimization of generator parameters towards target stream
features.
"""
import logging
from dataclasses import dataclass, field, fields, replace
from itertools import combinations, product
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.stats import norm, qmc
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import RBF, ConstantKernel, WhiteKernel
from tqdm.auto import tqdm

from .markovChain import tree_to_chain
from .processTree import TreeGenParams, generate_tree
from .simulation import (
    SimulationError, SimulationParams, StreamDefinition, simulate
)
from .streamFeatures import (
    ALL_FEATURES, WindowConfig, extract_stream, feature_distance, mean_vector
)
from .utility import stable_softmax

logger = logging.getLogger(__name__)

PENALTY_MARGIN = 1.0
GRID_TARGETS = (0.0, 0.1, 0.5, 0.7, 1.0)
NOISE_FLOOR = 1e-4


@dataclass(frozen=True)
class Dimension:
    """Bounded search dimension; integer dimensions are rounded at decode."""
    name: str
    low: float
    high: float
    integer: bool = False

    def decode(self, u):
        """Value at position `u` of the unit interval."""
        u = float(np.clip(u, 0, 1))
        if self.integer:
            v = round(self.low - 0.5 + u * (self.high - self.low + 1))
            return int(min(max(v, self.low), self.high))
        return self.low + u * (self.high - self.low)

    def contains(self, value):
        return self.low <= value <= self.high


DIMENSIONS = (
    # Operator logits against sequence, which is fixed at 0.
    Dimension("z_choice", -4.0, 4.0),
    Dimension("z_parallel", -4.0, 4.0),
    Dimension("z_loop", -4.0, 4.0),
    Dimension("p_silent", 0.0, 0.5),
    Dimension("ooo_prob", 0.0, 1.0),
    Dimension("trigger_prob", 0.0, 1.0),
    Dimension("t_scale", 0.1, 4.0),
    Dimension("t_simplify", 0.0, 1.0),
    Dimension("duration_cv", 0.05, 2.0),
    Dimension("n_activities", 3, 20, integer=True),
    Dimension("max_depth", 2, 5, integer=True),
    Dimension("ooo_max_delay", 0, 50, integer=True),
    Dimension("markov_order", 1, 3, integer=True),
    Dimension("nesting_depth", 1, 3, integer=True),
)


class ParamSpace():
    """Generator parameter space searched on the unit cube.

    Parameters
    ----------
    dimensions : sequence of Dimension, optional
        All dimensions, by default :data:`DIMENSIONS`.
    pins : dict, optional
        Dimension values excluded from the search.
    """
    def __init__(self, dimensions=DIMENSIONS, pins=None):
        self.dimensions = tuple(dimensions)
        self.pins = dict(pins or {})
        by_name = {d.name: d for d in self.dimensions}
        for name, value in self.pins.items():
            if name not in by_name:
                raise ValueError(f"Unknown dimension {name!r}")
            if not by_name[name].contains(value):
                raise ValueError(
                    f"Pinned {name}={value} outside "
                    f"[{by_name[name].low}, {by_name[name].high}]"
                )
        self.free = tuple(d for d in self.dimensions if d.name not in self.pins)

    @property
    def names(self):
        """Names of the searched dimensions, in cube coordinate order."""
        return [d.name for d in self.free]

    def __len__(self):
        return len(self.free)

    def __repr__(self):
        return f"<ParamSpace free={self.names} pins={self.pins}>"

    def fix(self, **pins):
        """Copy of the space with more dimensions pinned."""
        return ParamSpace(self.dimensions, {**self.pins, **pins})

    def values(self, u):
        """Native values of every dimension at cube point `u`."""
        u = np.asarray(u, dtype=float).reshape(-1)
        if len(u) != len(self.free):
            raise ValueError(f"Expected {len(self.free)} coordinates, got {len(u)}")
        out = dict(self.pins)
        out.update({d.name: d.decode(x) for d, x in zip(self.free, u)})
        return out

    def decode(self, u, seed=0, static=None):
        """Generator parameters at cube point `u`.

        Parameters
        ----------
        u : array-like
            Point of the unit cube over the free dimensions.
        seed : int, optional
            Seed of the tree and of the simulation, by default 0.
        static : dict, optional
            Extra :class:`SimulationParams` fields that are not searched.

        Returns
        -------
        (TreeGenParams, SimulationParams, int)
            Tree parameters, simulation parameters and chain order.
        """
        v = self.values(u)
        w_seq, w_choice, w_parallel, w_loop = stable_softmax(
            [0.0, v["z_choice"], v["z_parallel"], v["z_loop"]]
        )
        tree_params = TreeGenParams(
            n_activities=int(v["n_activities"]),
            w_seq=float(w_seq), w_choice=float(w_choice),
            w_parallel=float(w_parallel), w_loop=float(w_loop),
            p_silent=float(v["p_silent"]),
            max_depth=int(v["max_depth"]),
            seed=int(seed),
        )
        sim_params = SimulationParams(**{
            **dict(static or {}),
            "ooo_prob": float(v["ooo_prob"]),
            "ooo_max_delay": int(v["ooo_max_delay"]),
            "trigger_prob": float(v["trigger_prob"]),
            "max_depth": int(v["nesting_depth"]),
            "t_scale": float(v["t_scale"]),
            "t_simplify": float(v["t_simplify"]),
            "duration_cv": float(v["duration_cv"]),
            "seed": int(seed),
        })
        return tree_params, sim_params, int(v["markov_order"])

    def to_definition(self, u, seed=0, static=None):
        """Stream definition generated at cube point `u`."""
        tree_params, sim_params, order = self.decode(u, seed, static)
        tree = generate_tree(tree_params)
        chain = tree_to_chain(tree, k=order, seed=seed)
        return StreamDefinition(chain=chain, params=sim_params, tree=tree)


@dataclass(frozen=True)
class RunConfig:
    """Settings of one optimization run.

    Parameters
    ----------
    targets : dict
        Feature id to target value in ``[0, 1]``.
    n_init : int
        Quasi-random trials before the surrogate is used, at least 2.
    max_iter : int
        Total trial budget, at least `n_init`.
    epsilon : float
        Distance below which the run stops early.
    n_seeds : int
        Replicate simulations per trial.
    n_eval_windows : int
        Windows simulated per replicate.
    window_size : int
        Events per window.
    master_seed : int
        Seed of every random choice of the run.
    fixed : dict
        Dimension pins applied to the parameter space.
    static : dict
        Simulation parameters that are not searched.
    """
    targets: Mapping[str, float] = field(default_factory=dict)
    n_init: int = 8
    max_iter: int = 50
    epsilon: float = 0.02
    n_seeds: int = 3
    n_eval_windows: int = 4
    window_size: int = 500
    master_seed: int = 0
    fixed: Mapping[str, float] = field(default_factory=dict)
    static: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for key, value in self.targets.items():
            if key not in ALL_FEATURES:
                raise ValueError(f"Unknown target feature {key!r}")
            if not 0 <= value <= 1:
                raise ValueError(f"Target {key}={value} outside [0, 1]")
        if self.n_init < 2:
            raise ValueError(f"n_init must be >= 2, got {self.n_init}")
        if self.max_iter < self.n_init:
            raise ValueError(
                f"max_iter ({self.max_iter}) must be >= n_init ({self.n_init})"
            )
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.n_seeds < 1 or self.n_eval_windows < 1:
            raise ValueError("n_seeds and n_eval_windows must be >= 1")

    @property
    def window(self):
        return WindowConfig(window_size=self.window_size)

    def space(self, base=None):
        """Parameter space with the pins of this run applied."""
        return (base or ParamSpace()).fix(**self.fixed)

    @classmethod
    def from_dict(cls, data):
        """Parse the targets-file layout, rejecting unknown keys.

        ``budget`` holds ``n_init`` and ``max_iter``; the other keys map to
        fields of the same name.
        """
        allowed = {f.name for f in fields(cls)} - {"n_init", "max_iter"}
        unknown = set(data) - allowed - {"budget"}
        if unknown:
            raise ValueError(f"Unknown configuration keys: {sorted(unknown)}")
        if "targets" not in data:
            raise ValueError("Configuration misses 'targets'")
        kwargs = {k: v for k, v in data.items() if k != "budget"}
        budget = data.get("budget", {})
        unknown = set(budget) - {"n_init", "max_iter"}
        if unknown:
            raise ValueError(f"Unknown budget keys: {sorted(unknown)}")
        kwargs.update(budget)
        return cls(**kwargs)

    def to_dict(self):
        return {
            "targets": dict(self.targets),
            "budget": {"n_init": self.n_init, "max_iter": self.max_iter},
            "epsilon": self.epsilon,
            "n_seeds": self.n_seeds,
            "n_eval_windows": self.n_eval_windows,
            "window_size": self.window_size,
            "master_seed": self.master_seed,
            "fixed": dict(self.fixed),
            "static": dict(self.static),
        }


def replicate_seed(master_seed, index):
    """Independent seed number `index` derived from `master_seed`."""
    seq = np.random.SeedSequence([int(master_seed), int(index)])
    return int(seq.generate_state(1)[0])


def measure(definition, config):
    """Mean feature vector of each replicate simulation of `definition`.

    Returns
    -------
    list of FeatureVector
        One window-averaged vector per replicate seed.
    """
    n_events = config.n_eval_windows * config.window_size
    vectors = []
    for r in range(config.n_seeds):
        seed = replicate_seed(config.master_seed, r)
        stream = simulate(definition.with_seed(seed), n_events)
        vectors.append(mean_vector(extract_stream(stream, config.window)))
    return vectors


def evaluate(definition, targets, config):
    """Mean replicate distance of `definition` to `targets`, and the mean
    achieved feature vector.
    """
    vectors = measure(definition, config)
    distances = [feature_distance(v, targets) for v in vectors]
    return float(np.mean(distances)), mean_vector(vectors)


def penalty(targets):
    """Score of a failed trial: one more than the largest distance
    between unit-interval feature vectors with `targets`' features.
    """
    return float(np.sqrt(len(targets))) + PENALTY_MARGIN


def objective(u, targets, config, space=None):
    """Distance achieved by the generator at cube point `u`.

    Simulation failures score :func:`penalty`, which exceeds any distance
    over unit-interval features.

    Returns
    -------
    float
        Mean distance over ``config.n_seeds`` replicate simulations.
    """
    return _score(u, targets, config, space or config.space())[0]


def _score(u, targets, config, space):
    try:
        definition = space.to_definition(
            u, config.master_seed, config.static
        )
        distance, achieved = evaluate(definition, targets, config)
    except (SimulationError, ValueError) as err:
        logger.debug("Candidate %s scored the penalty: %s", space.values(u), err)
        return penalty(targets), None, None
    return distance, achieved, definition


def expected_improvement(mean, std, best, xi=0.0):
    """Expected improvement below `best` of Gaussian predictions."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    improvement = best - mean - xi
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, improvement / std, 0.0)
    ei = improvement * norm.cdf(z) + std * norm.pdf(z)
    ei = np.where(std > 0, ei, np.maximum(improvement, 0.0))
    return np.maximum(ei, 0.0)


def grid_search_theta(obj_func, initial_theta, bounds, n_grid=9, n_sweeps=2):
    """Coordinate-wise grid search of the log-marginal likelihood.

    Follows the optimizer protocol of
    :class:`sklearn.gaussian_process.GaussianProcessRegressor`: `obj_func`
    returns the negative log-marginal likelihood of log-hyperparameters.
    """
    theta = np.array(initial_theta, dtype=float)
    best = obj_func(theta, eval_gradient=False)
    for _ in range(n_sweeps):
        for i, (low, high) in enumerate(bounds):
            for value in np.linspace(low, high, n_grid):
                trial = theta.copy()
                trial[i] = value
                loss = obj_func(trial, eval_gradient=False)
                if loss < best:
                    best, theta = loss, trial
    return theta, best


def make_surrogate(n_dims, random_state=0):
    """Gaussian process with a squared-exponential kernel, one length scale
    per dimension and a noise term.
    """
    kernel = (
        ConstantKernel(1.0, (1e-2, 1e2))
        * RBF(np.full(n_dims, 0.3), length_scale_bounds=(1e-2, 1e1))
        + WhiteKernel(1e-3, noise_level_bounds=(NOISE_FLOOR, 1e-1))
    )
    return GaussianProcessRegressor(
        kernel=kernel, normalize_y=True, optimizer=grid_search_theta,
        random_state=random_state,
    )


@dataclass
class Trial:
    """One evaluated candidate."""
    point: Tuple[float, ...]
    values: Dict[str, float]
    distance: float
    achieved: Optional[Mapping[str, float]] = None


@dataclass
class OptimizationRun:
    """Outcome of :meth:`FeatureOptimizer.optimize`.

    Attributes
    ----------
    config : RunConfig
        Settings of the run.
    trials : list of Trial
        Every evaluated candidate, in order.
    best_definition : StreamDefinition
        Definition of the best trial, ``None`` if every trial failed.
    converged : bool
        Whether the best distance dropped below ``config.epsilon``.
    """
    config: RunConfig
    trials: List[Trial] = field(default_factory=list)
    best_definition: Optional[StreamDefinition] = None
    converged: bool = False

    @property
    def best_index(self):
        return int(np.argmin([t.distance for t in self.trials]))

    @property
    def best(self):
        return self.trials[self.best_index]

    @property
    def best_distance(self):
        return self.best.distance

    def best_so_far(self):
        """Running minimum of the trial distances."""
        return np.minimum.accumulate([t.distance for t in self.trials])

    def info_dict(self):
        """Returns a dictionary describing the run.

        Returns
        -------
        dict
            Information dictionary
        """
        return {
            "config": self.config.to_dict(),
            "n_trials": len(self.trials),
            "converged": self.converged,
            "best_distance": self.best_distance,
            "best_values": self.best.values,
            "best_achieved": (
                dict(self.best.achieved) if self.best.achieved else None
            ),
        }


class FeatureOptimizer():
    """Sequential model-based search of generator parameters matching
    target features.

    Parameters
    ----------
    config : RunConfig
        Targets, budget and seeds.
    space : ParamSpace, optional
        Parameter space, by default the full space with the pins of
        `config` applied.
    n_candidates : int, optional
        Random candidates scored by expected improvement at each step, by
        default 1024.
    n_local : int, optional
        Perturbations of the incumbent scored at each step, by default 64.
    local_scale : float, optional
        Standard deviation of the perturbations on the unit cube, by
        default 0.05.
    progress : bool, optional
        Whether to show a progress bar and print a summary, by default
        ``True``.
    """
    def __init__(self, config, space=None, **kwargs):
        n_candidates = kwargs.get('n_candidates', 1024)
        n_local = kwargs.get('n_local', 64)
        local_scale = kwargs.get('local_scale', 0.05)
        progress = kwargs.get('progress', True)

        if not isinstance(config, RunConfig):
            raise TypeError(f"Expected a RunConfig, got {type(config)}")
        if not config.targets:
            raise ValueError("At least one target feature is required")
        if not isinstance(n_candidates, int) or n_candidates < 1:
            raise ValueError(f"Invalid n_candidates {n_candidates!r}")

        self.config = config
        self.space = config.space(space)
        self.n_candidates = n_candidates
        self.n_local = n_local
        self.local_scale = local_scale
        self.progress = progress

    def objective(self, u):
        return objective(u, self.config.targets, self.config, self.space)

    def _propose(self, X, y, rng):
        gp = make_surrogate(X.shape[1], self.config.master_seed)
        gp.fit(X, y)
        incumbent = X[int(np.argmin(y))]
        candidates = np.vstack([
            rng.random((self.n_candidates, X.shape[1])),
            np.clip(
                incumbent + rng.normal(
                    0, self.local_scale, (self.n_local, X.shape[1])
                ),
                0, 1,
            ),
        ])
        mean, std = gp.predict(candidates, return_std=True)
        ei = expected_improvement(mean, std, float(np.min(y)))
        return candidates[int(np.argmax(ei))]

    def optimize(self):
        """Run the search until the budget is spent or the best distance
        drops below epsilon.

        Returns
        -------
        OptimizationRun
            Trial history and best definition.
        """
        cfg = self.config
        d = len(self.space)
        rng = np.random.default_rng(cfg.master_seed)
        budget = cfg.max_iter if d else 1
        design = (
            qmc.Halton(d=d, scramble=True, seed=rng).random(cfg.n_init)
            if d else np.zeros((1, 0))
        )

        run = OptimizationRun(cfg)
        best = np.inf
        self.pbar = tqdm(
            total=budget, desc="Optimizing", leave=False,
            disable=not self.progress,
        )
        for step in range(budget):
            if step < len(design):
                u = design[step]
            else:
                X = np.array([t.point for t in run.trials])
                y = np.array([t.distance for t in run.trials])
                u = self._propose(X, y, rng)

            distance, achieved, definition = _score(
                u, cfg.targets, cfg, self.space
            )
            run.trials.append(Trial(
                tuple(float(x) for x in u), self.space.values(u), distance,
                achieved,
            ))
            logger.info("Trial %d: distance %.4f", step, distance)
            if definition is not None and distance < best:
                best = distance
                run.best_definition = definition
            self.pbar.update()
            self.pbar.set_postfix(best=f"{best:.4f}")
            if best < cfg.epsilon:
                run.converged = True
                break
        self.pbar.close()
        del self.pbar

        if self.progress:
            if run.converged and len(run.trials) < budget:
                print(f"Early convergence at step {len(run.trials)}")
            elif not run.converged:
                print(f"Budget exhausted after {len(run.trials)} trials")
        return run


def optimize(targets, space=None, config=None, **kwargs):
    """Search generator parameters matching `targets`.

    Parameters
    ----------
    targets : dict
        Feature id to target value.
    space : ParamSpace, optional
        Parameter space, by default the full space.
    config : RunConfig, optional
        Budget and seeds; its targets are replaced by `targets`.
    **kwargs
        Passed to :class:`FeatureOptimizer`.
    """
    config = replace(config or RunConfig(), targets=dict(targets))
    return FeatureOptimizer(config, space, **kwargs).optimize()


@dataclass(frozen=True)
class GridCell:
    """Result of one feature-pair optimization."""
    feature_a: str
    feature_b: str
    target_a: float
    target_b: float
    best_distance: float
    trials_used: int
    achieved: Optional[Mapping[str, float]] = None

    def achieved_value(self, feature):
        if not self.achieved:
            return float("nan")
        return self.achieved.get(feature, float("nan"))


def build_grid(features, targets=GRID_TARGETS, config=None, space=None,
               progress=True):
    """Optimize every feature pair towards every target combination.

    Each cell is an independent run seeded from the master seed and the
    cell index.

    Parameters
    ----------
    features : sequence of str
        At least two feature ids.
    targets : sequence of float, optional
        Target values, by default :data:`GRID_TARGETS`.
    config : RunConfig, optional
        Budget, seeds and pins shared by every cell.
    space : ParamSpace, optional
        Base parameter space.
    progress : bool, optional
        Whether to show a progress bar, by default ``True``.

    Returns
    -------
    list of GridCell
        ``C(len(features), 2) * len(targets) ** 2`` cells.
    """
    features = list(features)
    if len(features) < 2:
        raise ValueError("A grid needs at least two features")
    config = config or RunConfig()
    jobs = [
        (fa, fb, ta, tb)
        for fa, fb in combinations(features, 2)
        for ta, tb in product(targets, targets)
    ]
    cells = []
    for index, (fa, fb, ta, tb) in enumerate(tqdm(
        jobs, desc="Grid", leave=False, disable=not progress
    )):
        cell_config = replace(
            config, targets={fa: ta, fb: tb},
            master_seed=replicate_seed(config.master_seed, index),
        )
        run = FeatureOptimizer(cell_config, space, progress=False).optimize()
        cells.append(GridCell(
            fa, fb, ta, tb, run.best_distance, len(run.trials),
            run.best.achieved,
        ))
        logger.info(
            "Cell %s=%.2f %s=%.2f: best distance %.4f",
            fa, ta, fb, tb, run.best_distance
        )
    return cells


def random_sweep(space, n_points, config=None, progress=True):
    """Features achieved at uniformly random points of `space`.

    Failed simulations are skipped.

    Returns
    -------
    list of (dict, FeatureVector)
        Dimension values and mean achieved features per point.
    """
    config = config or RunConfig()
    space = config.space(space)
    rng = np.random.default_rng(config.master_seed)
    points = rng.random((n_points, len(space)))
    out = []
    for u in tqdm(points, desc="Sweep", leave=False, disable=not progress):
        try:
            definition = space.to_definition(
                u, config.master_seed, config.static
            )
            vector = mean_vector(measure(definition, config))
        except (SimulationError, ValueError) as err:
            logger.debug("Sweep point skipped: %s", err)
            continue
        out.append((space.values(u), vector))
    return out
