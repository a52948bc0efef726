"""Channel orthogonalization with reconfigurable surfaces (RIS, ARIS, FRIS)."""

__version__ = "0.1.0"

from .channel import ChannelSet, effective_channel, generate_iid_rayleigh, post_snr, simulate_uplink
from .errors import (
    DimensionMismatch,
    IllConditionedBlock,
    InfeasibleN,
    InvalidDims,
    NotApplicable,
    NotSkewHermitian,
    RSError,
    SingularGram,
    ZeroMatrix,
)
from .estimation import PilotPlan, end_to_end_configure, pilot_count
from .orthogonalizer import TargetChannel, min_elements, rs_sum_power, solve_aris, solve_fris
from .power_opt import OptimizerConfig, PowerObjective, minimize_power
from .ris_baseline import RisOptConfig, minimize_condition_number
from .surface import RsConfig, SurfaceKind
