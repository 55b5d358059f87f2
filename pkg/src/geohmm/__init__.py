"""Method-of-moments learning of hidden Markov models with observations on
the Poincare disk or on 2x2 SPD matrices."""

from .errors import (
    ComponentCollapseError,
    ConvergenceError,
    DegenerateFitError,
    GeohmmError,
    GeometryError,
    StageError,
)
from .hmm import HmmModel, simulate, stationary
from .learner import (
    LearnConfig,
    LearnReport,
    align_components,
    compute_metrics,
    evaluate,
    learn_discrete,
    learn_full,
    learn_known_sensor,
)
from .manifold import POINCARE_DISK, SPD2, ManifoldKind, get_manifold
from .mixture import MixtureConfig, MixtureModel, fit_mixture
from .moments import EffectiveObservationMatrix, MomentSequence, effective_obs_matrix
from .optim import SolverConfig, project_simplex
from .rgauss import RiemannianGaussian, fit_mle

__all__ = [
    "ComponentCollapseError",
    "ConvergenceError",
    "DegenerateFitError",
    "EffectiveObservationMatrix",
    "GeohmmError",
    "GeometryError",
    "HmmModel",
    "LearnConfig",
    "LearnReport",
    "ManifoldKind",
    "MixtureConfig",
    "MixtureModel",
    "MomentSequence",
    "POINCARE_DISK",
    "RiemannianGaussian",
    "SPD2",
    "SolverConfig",
    "StageError",
    "align_components",
    "compute_metrics",
    "effective_obs_matrix",
    "evaluate",
    "fit_mixture",
    "fit_mle",
    "get_manifold",
    "learn_discrete",
    "learn_full",
    "learn_known_sensor",
    "project_simplex",
    "simulate",
    "stationary",
]

__version__ = "0.1.0"
