"""belllab: a Monte Carlo and analytic laboratory for CHSH Bell tests with
two qubits under local hidden-variable models.

The library builds deterministic hidden-variable models, runs sequenced or
random-choice measurement protocols with configurable rotation-angle errors,
estimates correlators and the CHSH parameter with standard errors, and checks
everything against analytic oracles. Its centerpiece demonstrations: fixed
per-block rotation errors in a sequenced protocol can push the *apparent*
CHSH value above 2 without any nonlocality, and per-trial random setting
choice structurally removes that loophole.
"""

from .config import ConfigError, RunConfig, parse_config, parse_config_file, serialize_config
from .errors import (
    ERROR_BOUND,
    DeltaError,
    ErrorDistribution,
    ErrorPolicy,
    PolicyLookupError,
    SystematicErrorSchedule,
    TruncatedGaussianError,
    UniformError,
    draw_error,
    schedule_as_policy,
)
from .estimator import (
    ChshReport,
    Correlator,
    InsufficientDataError,
    JointCounts,
    JointProbabilities,
    chsh,
    correlator_from_cells,
    correlator_from_shifted_pp,
    probabilities,
    tally,
)
from .lhv import (
    LhvModel,
    canonical_model,
    circular_distance,
    normalize_angle,
    sample_lambda,
)
from .oracle import (
    DEFAULT_QUADRATURE,
    QuadratureError,
    QuadratureSpec,
    SmoothedResponse,
    UnsupportedPolicyError,
    block_distributions,
    chsh_smoothed,
    correlator_canonical,
    joint_probs_canonical,
    joint_probs_numeric,
    smoothed_joint_probs,
    smoothed_response,
    sprime_smoothed,
    sprime_systematic,
)
from .presets import DEMO_OFFSETS_TWO_OVER_PI, DEMO_QUAD, DEMO_SCHEDULE, DEMO_SPRIME
from .protocol import (
    PAIR_ORDER,
    RunPlan,
    SettingPair,
    SettingsQuad,
    TrialLog,
    TrialRecord,
    derive_substream,
    run_pair,
    run_random_choice,
    run_sequenced,
)
from .rng import derive_run_seed
from .verify import run_verification

__version__ = "0.1.0"
