"""Sign-dependent panel local projections.

Estimates how outcomes respond to externally identified monetary policy
shocks, letting tightening and easing responses differ, with
country-by-calendar-month fixed effects and time-clustered inference; also
builds the shock series from high-frequency event surprises and ships a
simulation harness with analytically known true responses.
"""

__version__ = "0.1.0"

from .engine import (
    HorizonFailure,
    HorizonFit,
    RegressionProblem,
    absorb_fixed_effects,
    cluster_covariance,
    run_horizon,
    run_spec,
    solve_ols,
)
from .irf import (
    AsymmetryTest,
    IRFEntry,
    IRFSet,
    delta_bands,
    estimate_irfs,
    irf_from_fit,
    test_asymmetry,
)
from .panel import (
    LoadReport,
    Observation,
    PanelDataset,
    SeriesKey,
    VariableDecl,
    apply_declared_transforms,
    apply_transform,
    build_lagged_controls,
    load_panel,
    load_schema,
)
from .shocks import (
    EventSurprise,
    RotationResult,
    ShockSeries,
    aggregate_monthly,
    first_principal_component,
    identify_rotation,
    load_events,
    poor_mans_classify,
)
from .simulate import DGPConfig, OracleIRF, SimulationResult, oracle_irf, simulate
from .specs import FAMILIES, LPSpecification, build_shock_columns

__all__ = [name for name in dir() if not name.startswith("_")]
