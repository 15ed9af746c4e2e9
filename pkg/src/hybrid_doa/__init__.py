"""Single-time-slot DOA estimation for sub-connected hybrid analog/digital ULAs."""

from .array_model import (
    ArrayConfig,
    Emitter,
    HybridSnapshots,
    SnapshotMatrix,
    analog_weights,
    g_factor,
    gamma_kernel,
    steering_vector,
    synthesize_hybrid_snapshots,
    synthesize_snapshots,
    virtual_manifold,
)
from .bench import CrlbPoint, Method, flops, hybrid_crlb
from .estimators import (
    CandidateSet,
    CombinedEstimate,
    EstimateReport,
    PowerProfile,
    disambiguate,
    max_rp,
    max_rp_qi,
    power_profile,
    quadratic_interp,
    root_music_candidates,
    root_music_plus_max_rp_qi,
)
from .harness import ExperimentSpec, RmseRow, run_experiment
from .numerics import EigenPair, HermitianMatrix, hermitian_evd, poly_roots, sample_covariance

__version__ = "0.1.0"
