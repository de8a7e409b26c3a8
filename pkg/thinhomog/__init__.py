__author__ = "thinhomog developers"
__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    AssemblyError,
    ConfigError,
    DomainError,
    InstabilityError,
    PlotError,
    RegimeError,
    ResolutionError,
    SolverError,
    SpectralError,
    StudyError,
    ThinHomogError,
)
from .profiles import BoundaryProfile, parse_profile
from .geometry import BaseDomain, ThinDomainSpec, eta
from .grid import Field, Grid
from .operators import (
    RescaledNorms,
    SparseOperator,
    assemble_limit,
    assemble_original,
    assemble_reduced,
    assemble_simplified,
    assemble_transformed,
    average_M,
    extend_E,
    solve,
)
from .ladder import LadderReport, decay_order, ladder_trend, verify_ladder
from .homogenization import (
    DiophantineParams,
    HomogenizedModel,
    cell_problem,
    diophantine_check,
    homogenize,
    p0_commensurate,
    p0_incommensurate,
    p0_two_scale,
    quasiperiodic_A0,
    reiterated_A0,
)
from .spectral import (
    eigenpairs,
    resolvent_defect,
    semigroup,
    spectral_convergence_study,
)
from .nonlinearity import Nonlinearity, parse_nonlinearity
from .dynamics import (
    EquilibriaSet,
    Trajectory,
    attractor_surrogate,
    equilibria,
    evolve,
    semidistance,
    semigroup_defect,
    step_imex,
)
from .config import StudyConfig, parse_config, serialize_config
from .tables import CsvTable
from .plotting import render_svg
from .studies import run_study
