"""Strong converse exponent of remote lossy source coding for finite sources."""

from .errors import (
    AlphabetMismatchError,
    BudgetExceededError,
    InfeasibleError,
    NotRationalError,
    SchemaError,
)
from .exponent import (
    ExponentResult,
    SolverOptions,
    dual_lower_bound,
    exponent,
    exponent_no_compression,
    exponent_noiseless,
    inner_exponent,
    positivity_threshold,
    sweep_rate,
)
from .io import ProblemInstance, load_instance
from .oracle import OracleReport, exponent_trajectory, finite_n_converse_bound, optimal_pc
from .probability import (
    Alphabet,
    ConditionalPmf,
    DistortionMatrix,
    JointPmf,
    Pmf,
    compose,
    conditional_kl,
    conditional_mutual_information,
    entropy,
    expected_distortion,
    kl_divergence,
    mutual_information,
)
from .rd import RdResult, conditional_rd, delta_min, remote_distortion_measure, remote_rd, standard_rd
from .types_method import (
    Codebook,
    JointTypeDescriptor,
    Scheme,
    TypeDescriptor,
    build_scheme,
    enumerate_types,
    evaluate_scheme,
    greedy_type_cover,
    success_prob_given_y,
    type_class_size,
)

__version__ = "0.1.0"
