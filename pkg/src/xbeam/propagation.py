"""Envelope evolution in z and physical observables.

Free-space propagation is a one-step angular-spectrum multiply: Fourier
transform the envelope, advance each (kappa_x, kappa_y) component by
exp(i (kz(kappa) - k) dz) with the exact or paraxial kz, transform back.
Because the equations are z-translation invariant this is exact in z:
there is no stepping error, and propagators compose as a semigroup to
machine precision.

Magnetic propagation does the same in the Landau eigenbasis: decompose,
multiply each (n, l) coefficient by exp(i (kz(n, l) - k) dz), synthesize.
A single eigenmode therefore keeps its transverse intensity for all z;
superpositions beat with period 2 pi / |kz1 - kz2|.

Evanescent (or non-propagating Landau) components decay exponentially
under forward exact propagation; the lost norm fraction is recorded in
the output state's ``meta``.  Backward propagation would amplify them
without bound, so it is rejected unless their content is negligible
(< 1e-12 of the norm squared), in which case they are dropped.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import BeamState, ModeSpectrum, beam_norm
from .dispersion import (
    LandauIndex,
    kz_exact_free,
    kz_exact_magnetic,
    kz_paraxial_free,
    kz_paraxial_magnetic,
)
from .modes import decompose_landau, synthesize

__all__ = [
    "VARIANTS",
    "EVANESCENT_BACKWARD_LIMIT",
    "BasisBounds",
    "DecompositionResidualError",
    "propagate_free",
    "propagate_magnetic",
    "Observables",
    "observables",
    "ComparisonRow",
    "compare_variants",
    "write_comparison_csv",
]

VARIANTS = ("exact", "paraxial")

# norm^2 fraction of evanescent content above which backward exact
# propagation is refused as non-invertible
EVANESCENT_BACKWARD_LIMIT = 1e-12


class BasisBounds(NamedTuple):
    """Truncation of the Landau basis used by magnetic propagation."""

    n_max: int
    l_min: int
    l_max: int


class DecompositionResidualError(ValueError):
    """Raised when the basis truncation misses too much of the state."""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"Landau decomposition residual {residual:.3e} exceeds "
            f"tolerance {tolerance:.3e}; enlarge basis_bounds"
        )


def _check_variant(variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; allowed: {VARIANTS}")


def propagate_free(state: BeamState, dz: float, variant: str = "exact") -> BeamState:
    """Advance a free-space state by dz with the chosen dispersion variant.

    Norm is conserved exactly for the paraxial variant and up to
    evanescent damping for the exact one.  Negative dz is allowed for the
    paraxial variant always, and for the exact variant only when the
    evanescent norm fraction is below EVANESCENT_BACKWARD_LIMIT (those
    components are then zeroed instead of amplified).
    """
    _check_variant(variant)
    dz = float(dz)
    grid, k = state.grid, state.context.carrier_k
    kappa_sq = grid.kappa_sq()
    ft = np.fft.fft2(state.envelope)
    meta = {}

    if variant == "paraxial":
        kz = k - kappa_sq / (2.0 * k)
        ft = ft * np.exp(1j * (kz - k) * dz)
    else:
        prop = kappa_sq <= k * k
        total = float(np.sum(np.abs(ft) ** 2))
        evan_frac = 0.0
        if total > 0:
            evan_frac = float(np.sum(np.abs(ft[~prop]) ** 2)) / total
        if dz < 0 and evan_frac > EVANESCENT_BACKWARD_LIMIT:
            raise ValueError(
                f"backward propagation rejected: evanescent norm fraction "
                f"{evan_frac:.3e} exceeds {EVANESCENT_BACKWARD_LIMIT:.0e} "
                "(non-invertible amplification)"
            )
        kz_re = np.sqrt(np.maximum((k - np.sqrt(kappa_sq)) * (k + np.sqrt(kappa_sq)), 0.0))
        decay = np.sqrt(np.maximum(kappa_sq - k * k, 0.0))
        if dz < 0:
            ft = np.where(prop, ft, 0.0)
            ft = ft * np.exp(1j * (kz_re - k) * dz)
            meta["evanescent_loss"] = evan_frac
        else:
            ft = ft * np.exp(1j * (kz_re - k) * dz) * np.exp(-decay * dz)
            after = float(np.sum(np.abs(ft) ** 2))
            meta["evanescent_loss"] = 0.0 if total == 0 else max(0.0, 1.0 - after / total)

    out = np.fft.ifft2(ft)
    return state.with_envelope(out, z=state.z + dz, meta=meta)


def propagate_magnetic(
    state: BeamState,
    dz: float,
    variant: str = "exact",
    basis_bounds: BasisBounds | tuple[int, int, int] = BasisBounds(8, -8, 8),
    residual_tol: float = 1e-6,
) -> BeamState:
    """Advance a magnetized state by dz in the truncated Landau basis.

    Raises DecompositionResidualError (carrying the residual) when the
    truncation captures less than 1 - residual_tol of the norm squared.
    Each coefficient only picks up a phase, so single eigenmodes keep
    their transverse intensity for any dz.
    """
    _check_variant(variant)
    dz = float(dz)
    bounds = BasisBounds(*basis_bounds)
    ctx = state.context
    spectrum = decompose_landau(state, ctx, bounds.n_max, (bounds.l_min, bounds.l_max))
    if spectrum.residual_norm > residual_tol:
        raise DecompositionResidualError(spectrum.residual_norm, residual_tol)

    k = ctx.carrier_k
    power = spectrum.power()
    evolved = []
    lost = 0.0
    for n, l, c in spectrum.entries:
        idx = LandauIndex(n=n, l=l, s_z=ctx.spin_projection)
        if variant == "paraxial":
            phase = np.exp(1j * (kz_paraxial_magnetic(idx, ctx) - k) * dz)
        else:
            kz = kz_exact_magnetic(idx, ctx)
            if kz.imag > 0:
                if dz < 0:
                    if power > 0 and abs(c) ** 2 / power > EVANESCENT_BACKWARD_LIMIT:
                        raise ValueError(
                            "backward propagation rejected: non-propagating "
                            f"Landau mode (n={n}, l={l}) carries "
                            f"{abs(c)**2 / power:.3e} of the norm"
                        )
                    lost += abs(c) ** 2
                    c = 0.0
                    phase = 1.0
                else:
                    phase = np.exp(1j * (kz - k) * dz)
                    lost += abs(c) ** 2 * (1.0 - abs(phase) ** 2)
            else:
                phase = np.exp(1j * (kz.real - k) * dz)
        evolved.append((n, l, c * phase))

    out_spec = ModeSpectrum(
        entries=tuple(evolved),
        context=ctx,
        residual_norm=spectrum.residual_norm,
    )
    out = synthesize(out_spec, state.grid, ctx, z=state.z + dz)
    meta = {"decomposition_residual": spectrum.residual_norm}
    if lost:
        meta["evanescent_loss"] = float(lost / power) if power > 0 else 0.0
    return BeamState(grid=state.grid, context=ctx, z=state.z + dz,
                     envelope=out.envelope, meta=meta)


@dataclass(frozen=True)
class Observables:
    norm: float
    centroid: tuple[float, float]
    rms_radius: float
    oam_mean: float


def observables(state: BeamState) -> Observables:
    """Norm, intensity centroid, rms radius about it, and mean OAM.

    The OAM expectation <-i d/dphi> is taken about the grid center with
    spectral derivatives; for a pure exp(i l phi) mode it returns l.
    """
    norm = beam_norm(state)
    if norm == 0.0:
        raise ValueError("observables undefined for a zero-norm state")
    grid = state.grid
    X, Y = grid.meshgrid()
    intensity = np.abs(state.envelope) ** 2
    weight = intensity.sum()
    xbar = float((X * intensity).sum() / weight)
    ybar = float((Y * intensity).sum() / weight)
    rms = float(
        np.sqrt((((X - xbar) ** 2 + (Y - ybar) ** 2) * intensity).sum() / weight)
    )
    KX, KY = np.meshgrid(grid.kx(), grid.ky(), indexing="xy")
    ft = np.fft.fft2(state.envelope)
    fx = np.fft.ifft2(1j * KX * ft)
    fy = np.fft.ifft2(1j * KY * ft)
    lz = -1j * (X * fy - Y * fx)
    oam = float(np.real(np.vdot(state.envelope, lz)) / weight)
    return Observables(
        norm=norm, centroid=(xbar, ybar), rms_radius=rms, oam_mean=oam
    )


@dataclass(frozen=True)
class ComparisonRow:
    """Exact-vs-paraxial diagnostics at one z sample.

    ``l2_distance`` is the grid L2 norm of the field difference;
    ``phase_error_proxy`` is the phase of the overlap <exact|paraxial>,
    which grows like the spectrum-averaged kz gap times z while small.
    """

    z: float
    l2_distance: float
    phase_error_proxy: float
    norm_exact: float
    norm_paraxial: float
    rms_exact: float
    rms_paraxial: float
    oam_exact: float
    oam_paraxial: float


def compare_variants(
    initial: BeamState,
    z_samples: Sequence[float],
    medium: str = "free",
    basis_bounds: BasisBounds | tuple[int, int, int] | None = None,
    residual_tol: float = 1e-6,
) -> list[ComparisonRow]:
    """Propagate the same initial state both ways and diff them per z.

    Every z sample is reached in a single exact step from the initial
    state, so the rows are independent of the sample ordering.
    """
    if medium not in ("free", "magnetic"):
        raise ValueError(f"unknown medium {medium!r}; allowed: free, magnetic")
    rows = []
    for z in z_samples:
        dz = float(z) - initial.z
        if medium == "free":
            ex = propagate_free(initial, dz, "exact")
            pa = propagate_free(initial, dz, "paraxial")
        else:
            bounds = basis_bounds if basis_bounds is not None else BasisBounds(8, -8, 8)
            ex = propagate_magnetic(initial, dz, "exact", bounds, residual_tol)
            pa = propagate_magnetic(initial, dz, "paraxial", bounds, residual_tol)
        diff = ex.envelope - pa.envelope
        l2 = float(np.sqrt(np.sum(np.abs(diff) ** 2) * initial.grid.cell_area))
        overlap = np.vdot(ex.envelope, pa.envelope) * initial.grid.cell_area
        obs_ex = observables(ex)
        obs_pa = observables(pa)
        rows.append(
            ComparisonRow(
                z=float(z),
                l2_distance=l2,
                phase_error_proxy=float(np.angle(overlap)),
                norm_exact=obs_ex.norm,
                norm_paraxial=obs_pa.norm,
                rms_exact=obs_ex.rms_radius,
                rms_paraxial=obs_pa.rms_radius,
                oam_exact=obs_ex.oam_mean,
                oam_paraxial=obs_pa.oam_mean,
            )
        )
    return rows


_COMPARE_COLUMNS = (
    "z",
    "l2_distance",
    "norm_exact",
    "norm_paraxial",
    "rms_exact",
    "rms_paraxial",
    "oam_exact",
    "oam_paraxial",
)


def write_comparison_csv(rows: Sequence[ComparisonRow], path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(_COMPARE_COLUMNS)
        for row in rows:
            writer.writerow(
                [f"{getattr(row, col):.17g}" for col in _COMPARE_COLUMNS]
            )
    finally:
        if own:
            fh.close()


def comparison_csv_string(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    write_comparison_csv(rows, buf)
    return buf.getvalue()
