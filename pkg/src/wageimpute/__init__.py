"""Model-based imputation of missing wage-interval counts.

A stratified discrete proportional-hazards model (Efron ties, Newton
fitting, regression-tree industry strata) predicts each nonresponding
establishment's distribution of employees over the wage grid; counts are
drawn from the implied multinomial. Estimators, a missingness simulator
and a synthetic population generator round out the package.
"""

from .domain import (
    DEFAULT_LOWER_BOUNDS, MISSING, MODEL_IMPUTED, N_INTERVALS, NEIGHBOR_IMPUTED, OBSERVED,
    Dataset, EstablishmentRecord, OccupationPanel, Violation, WageGrid, validate_dataset,
)
from .errors import (
    ConfigError, EmptyDomain, EmptyInput, InvalidFraction, InvalidPropensity, ModelUnavailable,
    NoDonors, NoEmployees, Nonconvergence, NoResults, NumericOverflow, SingularDesign,
    WageImputeError, ZeroEmployees,
)
from .estimators import (
    DomainEstimate, domain_estimates, establishment_occ_mean, ipw_estimate,
    occupation_mean, occupation_percentile,
)
from .hazard import (
    FittedHazardModel, SubjectRow, SurvivalData, efron_partial_loglik, estimate_baseline, fit,
    hazards, predict_interval_probs, robust_cluster_variance, score_residuals,
)
from .imputer import impute_dataset, impute_panel, neighbor_average_impute, neighbor_impute_dataset
from .industry_tree import IndustryTree, assign_class, fit_industry_tree
from .occupation import OccupationModel, fit_occupation_model
from .preprocess import (
    COVARIATE_NAMES, MODEL_SPECS, CovariateVector, build_covariates, identify_bmsa,
    winsorize_avewage,
)
from .simulator import (
    MissingnessScenario, builtin_scenarios, impose_missingness, run_replications, summarize_bias,
)
from .synthgen import PopulationConfig, generate_from_hazard_model, generate_population

__version__ = "0.1.0"
