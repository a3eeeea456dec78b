__all__ = [
    "Event",
    "Lifecycle",
    "Stream",
    "ProcessTree",
    "TreeGenParams",
    "generate_tree",
    "MarkovChain",
    "tree_to_chain",
    "StreamDefinition",
    "SimulationParams",
    "simulate",
    "simulate_with_drift",
    "FeatureVector",
    "WindowConfig",
    "extract_stream",
    "FeatureOptimizer",
    "RunConfig",
    "ParamSpace",
    "optimize",
    "eventStream",
    "processTree",
    "markovChain",
    "simulation",
    "streamFeatures",
    "featureOptimizer",
    "spaceAnalysis",
    "streamIO",
    "sinks",
    "utility",
]

__version__ = "0.1.0"

from .eventStream import Event, Lifecycle, Stream
from .processTree import ProcessTree, TreeGenParams, generate_tree
from .markovChain import MarkovChain, tree_to_chain
from .simulation import (
    StreamDefinition, SimulationParams, simulate, simulate_with_drift
)
from .streamFeatures import FeatureVector, WindowConfig, extract_stream
from .featureOptimizer import FeatureOptimizer, RunConfig, ParamSpace, optimize

from . import eventStream
from . import processTree
from . import markovChain
from . import simulation
from . import streamFeatures
from . import featureOptimizer
from . import spaceAnalysis
from . import streamIO
from . import sinks
from . import utility
