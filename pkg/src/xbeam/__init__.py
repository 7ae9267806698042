"""Exact and paraxial beam propagation for free and magnetized particles.

The free-space envelope equation keeps the longitudinal curvature term
that the paraxial approximation drops, so the exact and paraxial
propagators can be run side by side and their difference measured.  The
same machinery covers charged spin-1/2 and spin-1 beams in a uniform
magnetic field through the Landau eigenbasis.
"""

from .core import (
    BeamState,
    FieldSnapshot,
    ModeSpectrum,
    PhysicalContext,
    TransverseGrid,
    beam_norm,
    make_context,
    read_snapshot,
    snapshot_from_bytes,
    snapshot_to_bytes,
    state_from_snapshot,
    write_snapshot,
)
from .dispersion import (
    CorrectionEigenvalue,
    DispersionRecord,
    LandauIndex,
    correction_eigenvalue,
    free_dispersion_table,
    group_velocity,
    kz_exact_free,
    kz_exact_magnetic,
    kz_paraxial_free,
    kz_paraxial_magnetic,
    landau_dispersion_table,
    landau_energy,
    landau_transverse_eigenvalue,
    photon_effective_mass,
    read_dispersion_csv,
    write_dispersion_csv,
)
from .modes import (
    ModeRequest,
    SamplingWarning,
    apply_magnetic_transverse_operator,
    decompose_landau,
    generate,
    laguerre_gauss_field,
    landau_mode_field,
    magnetic_waist,
    read_spectrum_csv,
    synthesize,
    write_spectrum_csv,
)
from .oracle import (
    converged_landau_spectrum,
    default_r_max,
    direct_field_at,
    fd_landau_spectrum,
)
from .propagation import (
    BasisBounds,
    ComparisonRow,
    DecompositionResidualError,
    Observables,
    compare_variants,
    observables,
    propagate_free,
    propagate_magnetic,
    write_comparison_csv,
)

__version__ = "0.1.0"
