"""Measurement-fuelled quantum engine: thermodynamic bookkeeping and checks."""

from .errors import DimensionError, DomainError, InvariantViolation, NumericalError
from .linalg import (
    DERIVED_TOL,
    EXACT_TOL,
    STRUCT_TOL,
    HermitianOperator,
    SpectralDecomposition,
    UnitaryOperator,
    eigh,
    operator_function,
    partial_trace,
    tensor,
    trace_distance,
)
from .states import (
    DensityMatrix,
    GibbsGauge,
    HeatBath,
    free_energy,
    gibbs_dual_hamiltonian,
    gibbs_state,
    mean_energy,
    regularize_state,
    shannon_entropy,
    von_neumann_entropy,
)
from .measurement import (
    ProjectiveBasis,
    RegisterState,
    bad_apple_sequence,
    landauer_reset_cost,
    nonselective_measure,
    premeasure,
    register_readout,
    selective_measure,
)
from .cycle import (
    CycleLedger,
    StrokeRecord,
    close_cycle,
    level_crossing_scan,
    max_extractable_work,
    run_cycle,
    second_law_check,
    selective_work_analysis,
    sudden_quench_work,
    work_deficit,
)
from .oracle import (
    IsothermalSchedule,
    convergence_study,
    simulate_full_cycle,
    simulate_isothermal,
    simulate_selective_branch,
)

__version__ = "0.1.0"
