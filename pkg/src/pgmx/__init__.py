"""pgmx: black-box explanations of graph-model predictions.

Given any prediction oracle over attributed graphs, the pipeline perturbs
node features, records how the prediction reacts, selects the variables that
carry dependence with the target, and learns a small discrete Bayesian
network whose conditional probabilities approximate the prediction around
the input. See the README and demos/ for worked examples.
"""

from .bayesnet import (
    BayesianNetwork,
    DagStructure,
    bic_score,
    conditional_query,
    d_separated,
    dimension,
    family_bic,
    fit_mle,
    forward_sample,
    i_equivalent,
    log_likelihood,
    markov_blanket,
)
from .bench import (
    DATASET_IDS,
    BenchmarkReport,
    SyntheticDataset,
    explanation_accuracy,
    explanation_precision,
    generate_synthetic,
    load_dataset,
    run_benchmark,
    save_dataset,
)
from .cli import export_dot
from .errors import (
    ConfigError,
    CycleError,
    ExplainerError,
    InputError,
    OracleError,
    PipelineError,
)
from .graph import (
    PERTURBATION_SCHEMES,
    Graph,
    PerturbationMask,
    apply_perturbation,
    graph_from_dict,
    graph_to_dict,
    l_hop_neighborhood,
    load_graph,
    save_graph,
)
from .oracle import (
    ExternalOracle,
    GcnOracle,
    gcn_forward,
    MotifRoleOracle,
    OracleHandle,
    Prediction,
    load_weight_bundle,
    motif_role_oracle,
)
from .pipeline import (
    Explanation,
    ExplainConfig,
    explain,
    explain_nochild,
    learn_structure_nochild,
)
from .sampling import SignificanceRule, generate_samples, significance_indicator
from .search import SearchConfig, exhaustive_search, hill_climb, shrink_parents
from .selection import (
    SelectionReport,
    select_u_general,
    select_u_nochild,
    select_with_oracle,
)
from .stats import (
    ContingencyTable,
    TestResult,
    chi_square_tail,
    chi_square_test,
    conditional_dependence_test,
    contingency_table,
    dependence_strength,
    regularized_upper_gamma,
)
from .table import DataTable, TableMeta

__version__ = "0.1.0"
