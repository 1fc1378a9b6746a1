"""Respondent-driven sampling on known networks: simulation, design-weighted
prevalence estimators, and bootstrap uncertainty quantification."""

__version__ = "0.1.0"

from .errors import BudgetError, DataError, RdsVarError, UsageError
from .graph import (
    AttributeTable,
    FixedDegree,
    PopulationGraph,
    PowerLawDegree,
    component_sizes,
    generate_configuration_graph,
    largest_connected_component,
    load_attributes,
    load_edge_list,
    load_summary,
)
from .simulate import (
    RdsDesign,
    RecruitmentForest,
    draw_seeds_pps,
    read_forest_csv,
    recruiters_of,
    simulate_rds,
    write_forest_csv,
)
from .estimators import PopulationTotals, WeightedSample, ipw_estimate, sample_mean, vh_estimate
from .bootstrap import (
    BootstrapConfig,
    BootstrapDistribution,
    bootstrap_distribution,
    bootstrap_distributions,
    bootstrap_variance,
    mc_bootstrap_moments,
    neighbourhood_resample,
    percentile_ci,
    tree_resample,
)
from .exact import ExactDistribution, check_moment_identity, enumerate_neighbourhood, enumerate_tree
from .experiment import (
    ExperimentConfig,
    ExperimentReport,
    expected_width,
    run_coverage,
    run_full,
    run_relative_bias,
    true_proportion,
)
from .rng import generator, substream
from .synth import make_study_population, plant_attributes, synthetic_population
