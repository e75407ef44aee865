"""Regression harness for scoring language-model vectors against human
reading-time and brain-imaging responses, with degrees-of-freedom
controls via residualization against untrained counterparts."""

from .corpus import (
    PartitionAssignment,
    PartitionLabel,
    PartitionMode,
    ResponseKind,
    ResponseRecord,
    ResponseTable,
    RowFlag,
    TokenVector,
    VectorBundle,
    read_response_table,
    read_vector_bundle,
    write_response_table,
    write_vector_bundle,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    FormatError,
    NumericalError,
    ParseError,
    PsyscaleError,
    SchemaError,
)
from .experiments import (
    Dataset,
    ScalingReport,
    VariantScore,
    fit_scaling_line,
    permutation_test_slope,
    residual_contribution,
    run_experiment1,
    run_experiment2,
    scaling_report,
)
from .features import (
    DesignMatrix,
    HrfKernel,
    aggregate_bold,
    build_design,
    hrf_convolve,
    sentence_final_vector,
    word_vectors,
)
from .preprocess import (
    ComprehensionScore,
    FixationRecord,
    compute_go_past,
    filter_et,
    filter_spr,
    partition,
)
from .regression import (
    LinearModel,
    ScoreResult,
    crossval_by_subject,
    fit_linear,
    normalize_ceiling,
    pearson,
    predict,
)
from .synth import SynthData, SynthSpec, gen_latent_regression, gen_random_feature_bundle

__version__ = "0.1.0"
