"""Indoor office and shopping-mall large-scale channel models for 0.5-100 GHz."""

from .errors import (
    ChannelModelError,
    ConfigurationError,
    DataFormatError,
    DegenerateDesignError,
    DomainError,
    FitFailureError,
)
from .fitting import (
    FitResult,
    LosObservation,
    MeasurementSample,
    SampleSet,
    centroid_f0,
    fit_abg,
    fit_ci,
    fit_cif,
    fit_dual,
    los_mse,
)
from .los import LosModel, p_los, sample_los
from .pathloss import (
    AbgParams,
    CifParams,
    CiParams,
    Distance,
    DualAbgParams,
    DualCifParams,
    Environment,
    Frequency,
    LinkState,
    Scenario,
    fspl,
    path_loss,
    pl_abg,
    pl_ci,
    pl_cif,
    pl_dual,
    sample_shadow_fading,
)
from .penetration import Material, MaterialLossTable, loss_rate, penetration_loss
from .registry import Registry, default_registry
from .simulator import DropConfig, DropResult, FloorPlan, LinkResult, Wall, cdf, los_by_map, run_drop

__version__ = "0.1.0"
