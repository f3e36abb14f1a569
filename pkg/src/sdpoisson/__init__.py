"""Correlated Poisson processes built from self-decomposable exponential renewals.

Public surface, by theme:

* construction -- :class:`ModelParams`, :func:`sample_triple`,
  :func:`za_cdf`, :func:`xy_joint_cdf`, :func:`theoretical_correlations`
* point processes -- :func:`simulate_path`, :func:`count_at`,
  :func:`compensated_at`, :func:`zeta_pmf_mixture`
* joint distribution -- :func:`joint_pmf`, :func:`pmf_table`,
  :func:`reduced_coords`, :func:`joint_ge_prob`
* copulas -- :func:`copula_eval`, :func:`frechet_bounds`
* verification -- :func:`mc_joint_pmf`, :func:`compare`
"""

from .copulas import (
    Copula,
    FrechetLowerCopula,
    FrechetUpperCopula,
    GumbelCopula,
    IndependenceCopula,
    MarshallOlkinCopula,
    RafteryCopula,
    SelfDecomposableCopula,
    cdf_from_copula,
    copula_eval,
    frechet_bounds,
    sample_raftery_pairs,
    survival_reflection,
)
from .errors import (
    ConsistencyError,
    DomainError,
    IntegrationError,
    PathExhaustedError,
    SdPoissonError,
)
from .exponential import (
    CorrelationTriple,
    ModelParams,
    TripleSample,
    XYJointLaw,
    naive_sum_density,
    sample_pair_comonotone,
    sample_pair_independent,
    sample_triple,
    sample_triples,
    theoretical_correlations,
    xy_joint_cdf,
    xy_joint_law,
    za_cdf,
)
from .harness import (
    McEstimate,
    TolerancePolicy,
    Verdict,
    compare,
    mc_joint_pmf,
    mc_joint_pmf_grid,
    sample_correlation,
    merge_counts,
    renewals_for_horizon,
    worker_seeds,
)
from .pmf import (
    PmfReport,
    PmfTable,
    ReducedCoords,
    Region,
    a_closed,
    b_closed,
    c_closed,
    closed_form_stable_limit,
    joint_ge_prob,
    joint_pmf,
    pmf_table,
    q_closed,
    quadrature_term,
    reduced_coords,
)
from .process import (
    RenewalPath,
    compensated_at,
    count_at,
    simulate_path,
    zeta_pmf_mixture,
)
from .special import (
    AtomPlusDensity,
    binom_weight,
    erlang_density,
    erlang_mixture_density,
    kummer_elementary,
    kummer_series,
    poisson_tail_integral,
    poisson_upper_tail,
    poisson_weight,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
