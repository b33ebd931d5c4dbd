"""Federated transfer component analysis for VNF resource profiling.

A source node trains a tabular synthesizer on its profiling data and ships
only the model; the target node samples source-like data, fits an
MMD-minimizing linear mapping under a variance constraint, and trains
regressors in the mapped space to predict resource labels it has never
profiled itself.
"""

from .data import (
    DomainDataset,
    FeatureSchema,
    NormalizationStats,
    apply_normalizer,
    default_schema,
    fit_normalizer,
    invert_normalizer,
    load_csv,
    split_features_labels,
    write_csv,
)
from .kernels import (
    KernelSpec,
    MmdMatrices,
    build_mmd_matrices,
    centering_matrix,
    coefficient_matrix,
    gram_matrix,
    kernel_eval,
    mmd_kernel_form,
    mmd_mapped_form,
)
from .tca import (
    TcaConfig,
    TcaMapping,
    constraint_residual,
    deserialize_mapping,
    fit_tca,
    generalized_sym_eig,
    serialize_mapping,
    transform,
)
from .tabgen import (
    GanTrainConfig,
    GeneratorModel,
    deserialize_model,
    fit_statistical,
    sample,
    serialize_model,
    train_gan,
)
from .regress import FittedRegressor, MetricsTriple, RegressorSpec, fit, metrics, predict
from .fednet import TransferLog, WireMessage, fetch_model, serve_source
from .harness import (
    EvaluationReport,
    SyntheticVnfConfig,
    TransferTaskSpec,
    export_histograms,
    gen_synthetic_vnf,
    negative_transfer_score,
    pearson_matrix,
    preset_task,
    render_report,
    run_ftca_task,
)

__version__ = "0.1.0"
