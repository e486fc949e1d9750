"""Deterministic particle approximation of opinion densities on a co-evolving network."""

from ._core import (
    AttitudeParams,
    ParticleState,
    Scenario,
    ScenarioError,
    SchemaError,
    StepCollapse,
    Trajectory,
    __version__,
    attitude_zeta,
    bimodality_gap,
    cluster_opinion_spread,
    discrete_densities,
    discrete_mean,
    empirical_wasserstein_gap,
    first_moment,
    kernel_K_model,
    mobility_A_model,
    network_clusters,
    omega,
    polarization_index,
    quantile_partition_gaussian,
    simulate,
    total_variation,
    validate,
    wasserstein1,
    write_run,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
