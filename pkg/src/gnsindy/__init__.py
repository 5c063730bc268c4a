"""Greedy-sampled neural sparse identification of nonlinear PDEs.

Pipeline: generate a snapshot matrix (:mod:`.snapshot`), pick informative
space-time samples with two-way Q-DEIM (:mod:`.sampling`), fit a SIREN
surrogate whose exact derivative jets (:mod:`.network`) feed a candidate-term
dictionary (:mod:`.dictionary`), and let a scheduled sparse regression
(:mod:`.sparse`, :mod:`.trainer`) pick the active terms.
"""
from .dictionary import Dictionary, DictionaryEvaluation, TermSpec, build_dictionary, evaluate_dictionary
from .network import AdamState, Jet, SirenNetwork, adam_step, backprop, forward_jet, init_siren
from .sampling import QdeimConfig, SampleSet, qdeim_block_ranks, qdeim_sample, subsample, truncated_svd
from .snapshot import PdeKind, PdeSpec, SnapshotMatrix, load_snapshot, save_snapshot, spectral_solve
from .sparse import RegressionProblem, SolverKind, SparseResult, SparseSolverConfig, solve
from .trainer import DiscoveryResult, SparsityState, TrainConfig, discover, random_baseline_samples

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "Dictionary",
    "DictionaryEvaluation",
    "DiscoveryResult",
    "Jet",
    "PdeKind",
    "PdeSpec",
    "QdeimConfig",
    "RegressionProblem",
    "SampleSet",
    "SirenNetwork",
    "SnapshotMatrix",
    "SolverKind",
    "SparseResult",
    "SparseSolverConfig",
    "SparsityState",
    "TermSpec",
    "TrainConfig",
    "adam_step",
    "backprop",
    "build_dictionary",
    "discover",
    "evaluate_dictionary",
    "forward_jet",
    "init_siren",
    "load_snapshot",
    "qdeim_block_ranks",
    "qdeim_sample",
    "random_baseline_samples",
    "save_snapshot",
    "solve",
    "spectral_solve",
    "subsample",
    "truncated_svd",
]
