"""Tight-binding laboratory for the cubic Schrodinger equation with a
piecewise-constant periodic potential.

Pipeline: transfer-matrix band structure (`floquet`), Bloch/Wannier
construction and coupling constants (`wannier`), lattice and field solvers
(`dnls`, `gp`), approximation-error sweeps and spectral corrections
(`validate`), batch front end (`cli`).
"""

from .errors import (
    BlowUpError,
    ConfigError,
    GaugeError,
    NumericalError,
    ResonanceError,
    SearchError,
)
from .potential import (
    PiecewisePotential,
    make_wall_potential,
    small_parameter,
)
from .floquet import (
    BandTable,
    BlochField,
    bloch_function,
    build_band_table,
    discriminant,
    dispersion,
    locate_bands,
    midpoint_k_grid,
    monodromy,
    transfer_segment,
)
from .wannier import (
    DecayReport,
    WannierBasis,
    asymptotic_profile,
    band_fourier,
    coupling_constants,
    decay_diagnostics,
    gram_matrix,
    overlap_kernel,
    wannier_function,
)
from .dnls import LatticeState, dnls_evolve, dnls_rhs, single_site, two_site
from .gp import (
    ConservedPair,
    FieldState,
    conserved_quantities,
    gp_evolve,
    gp_step,
    h1_norm,
    weighted_h1_norm,
    zero_field,
)
from .validate import (
    EpsRecord,
    ErrorReport,
    ExperimentConfig,
    band_project,
    fit_scaling,
    gronwall_diagnostic,
    run_validation,
    solve_correction,
    synthesize_field,
)

__version__ = "0.1.0"
