"""Privacy-preserving social learning over general graphs.

Agents repeatedly choose among options with unknown Bernoulli qualities.
Each round they randomize their last adoption for local differential
privacy, spread it over the network with Metropolis-Hastings random walks,
debias what they receive into popularity estimates, sample a candidate and
adopt it with a bias driven by its current quality signal.
"""

from .dissemination import DisseminationParams, launch_round, run_round, step_slot
from .environment import OptionSet, QualityDraw, draw_qualities
from .graph import (
    Graph,
    TransitionModel,
    build_graph,
    generate_erdos_renyi,
    generate_random_regular,
    mh_transition,
    mixing_model,
    spectral_gap,
    walk_length,
)
from .metrics import RoundMetrics, RunTrace, convergence_check, popularity
from .protocol import (
    PopularityEstimate,
    ProtocolParams,
    adopt_decision,
    estimate_popularity,
    normalize,
    perturb,
    sample_option,
)
from .runner import ExperimentConfig, load_config, run_experiment, run_sweep, simulate

__version__ = "0.1.0"
