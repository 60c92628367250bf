"""Structure-preserving one-step integrators for canonical Hamiltonian
systems: a one-parameter symplectic family with adjoints and
compositions, an energy-conserving parameterized variant, the AVF
baseline, bundled benchmark problems, and a measurement harness.
"""

from .analysis import (
    ConvergenceRow,
    DriftReport,
    LambdaSummary,
    convergence_study,
    invariant_drift,
    lambda_distribution,
    symplecticity_defect,
)
from .equip import (
    EnergyReference,
    EquipConfig,
    EquipFallback,
    EquipStepRecord,
    energy_error,
    integrate_equip,
    step_equip,
)
from .gfseries import GFPoint, hj_residual, k1, k2, k3
from .problems import (
    OrbitKind,
    ProblemId,
    SingularityError,
    henon_heiles_initial,
    kepler_initial,
    make_free_particle,
    make_harmonic_oscillator,
    make_henon_heiles,
    make_perturbed_kepler,
    make_problem,
    oscillator_exact_flow,
)
from .schemes import (
    IntegrationError,
    SchemeConfig,
    SchemeId,
    Trajectory,
    integrate,
    step_avf,
    step_composed4,
    step_nystrom1,
    step_scheme1,
    step_scheme1_adjoint,
    step_scheme2,
    step_scheme3,
)
from .solvers import (
    NonConvergenceError,
    SecantConfig,
    SolverConfig,
    SolverMethod,
    fixed_point_solve,
    newton_solve,
    secant_solve,
)
from .state import (
    DerivativeBundle,
    HamiltonianSystem,
    PhaseState,
    SeparableStructure,
    eval_energy,
    eval_gradients,
    fd_hessians,
)

__version__ = "0.1.0"
