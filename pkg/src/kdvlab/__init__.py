"""kdvlab: pseudospectral laboratory for KdV-type completely integrable flows.

Building blocks: Fourier fields on circles and boxes (``spectral``), the
Schroedinger resolvent with its diagonal Green's function and perturbation
determinant (``greens``), integrating-factor RK4 evolution of the KdV /
H_kappa / band-truncated H_kappa flows with conservation monitors
(``flows``), the circle-to-line cutting and unwrapping pipeline (``bridge``),
and a non-squeezing experiment harness with CLI (``squeeze``, ``cli``).
"""

__version__ = "0.1.0"

from .spectral import (
    LineField,
    MultiplierSpec,
    PeriodicField,
    TorusGrid,
    dealiased_product,
    derivative,
    field_from_modes,
    line_norm_refinement,
    load_field,
    lp_project,
    make_field,
    make_line_field,
    pairing,
    periodize,
    rescale,
    save_field,
    sobolev_norm,
    symplectic_form,
    tail_mass,
    translate,
    truncate_field,
    zero_field,
)
from .greens import (
    AlphaResult,
    GreenResult,
    ResolventContext,
    alpha,
    alpha_gradient_field,
    alpha_series,
    assemble_resolvent,
    free_diagonal_constant,
    green_diagonal,
    green_diagonal_series,
    green_prime,
    hs_norm,
    polynomial_invariants,
)
from .flows import (
    DEFAULT_BUDGET,
    ConservationReport,
    FlowSpec,
    HamiltonianSpec,
    SmallnessBudget,
    Trajectory,
    calibrate_budget,
    compare_flows,
    evolve,
    hamiltonian_value,
    kappa_sweep,
    monitors,
    rhs,
    time_equicontinuity,
)
from .bridge import (
    CutPlan,
    CutPolicy,
    PartitionFamily,
    RampBump,
    build_partition,
    compare_local,
    finite_speed_probe,
    localized_norms,
    localized_smoothing_check,
    select_cut,
    unwrap,
)
from .squeeze import (
    AreaResult,
    SearchBudget,
    SearchResult,
    SqueezeScenario,
    build_scenario,
    escape_search,
    image_area,
    linear_oracle,
    sample_ball,
)
from .reporting import RunManifest, run_report, sha256_digest, write_csv
