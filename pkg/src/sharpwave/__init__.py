"""Epsilon-ladder representatives, sharp-topology valuations, the
characteristic fixed-point wave solver, and light-cone singularity maps."""

from .asymptotics import (
    DEFAULT_NMAX,
    DEFAULT_SLOPE_TOL,
    DirectionalRegion,
    RegionLadder,
    SeminormProfile,
    UltraMetricReport,
    ValuationEstimate,
    bounded_type,
    directional_region_ladder,
    estimate_valuation,
    fit_decay_exponent,
    is_negligible,
    seminorm_profile,
    sharp_distance,
    standard_region_ladder,
    ultra_pseudo_seminorm,
)
from .backend import backend_name
from .charsolve import (
    CharacteristicPair,
    ContractionReport,
    PicardParams,
    SolveConfig,
    apply_picard_map,
    free_evolution,
    inner_integral,
    line_integral,
    marching_reference,
    pair_distance,
    picard_solve,
    reconstruct_solution,
    support_cone_membership,
)
from .errors import (
    BadRegionLadder,
    BadSpec,
    ConfigError,
    EmptyDomain,
    GridTooCoarse,
    InsufficientLadder,
    LadderMismatch,
    LatticeMismatch,
    LatticeTooLarge,
    NoConvergence,
    OutOfDomain,
    SharpwaveError,
    UnknownNonlinearity,
)
from .initial_data import (
    DataSpec,
    Mollifier,
    build_initial_data,
    derive_characteristic_data,
    make_mollifier,
)
from .nets import (
    CompactRegion,
    EpsilonLadder,
    GridFunction,
    RepresentativeNet,
    SpacingRule,
    diff,
    integrate_x,
    load_net,
    net_binary,
    save_net,
    sup_on,
    superpose,
    synthetic_net,
)
from .radial3d import RadialNet, radial_residual, radial_singsupp
from .singmap import (
    LightConeGeometry,
    SingularityMap,
    band_classify,
    classify_cells,
    confinement_check,
    directional_profile,
)
from .streaming import CellGrid, stream_solve

__version__ = "0.1.0"
