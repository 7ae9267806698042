"""Longitudinal wavenumbers, non-paraxial corrections, Landau spectra.

A transverse plane-wave component with wavenumber kappa rides the carrier
k and advances along z with

    exact:     kz = sqrt(k^2 - kappa^2)          (evanescent for kappa > k)
    paraxial:  kz = k - kappa^2 / (2 k)

The gap between the two is the non-paraxial correction; its leading term
is kappa^4 / (8 k^3) per unit length of accumulated phase.

In a uniform magnetic field the transverse operator

    lap_perp - i e B d/dphi - e^2 B^2 r^2 / 4 + 2 e s_z B

has the discrete Landau spectrum; its eigenvalue lambda on mode (n, l,
s_z) replaces -kappa^2, giving kz = sqrt(k^2 + lambda).  The closed form

    lambda = -|eB| (2 n + |l| + 1) + e B l + 2 e B s_z

is a derived result, validated against the finite-difference oracle in
the test suite rather than assumed (sign conventions linking e, B and l
are easy to get wrong).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import PhysicalContext

__all__ = [
    "kz_exact_free",
    "kz_paraxial_free",
    "CorrectionEigenvalue",
    "correction_eigenvalue",
    "LandauIndex",
    "landau_transverse_eigenvalue",
    "kz_exact_magnetic",
    "kz_paraxial_magnetic",
    "landau_energy",
    "photon_effective_mass",
    "group_velocity",
    "DispersionRecord",
    "free_dispersion_table",
    "landau_dispersion_table",
    "write_dispersion_csv",
    "read_dispersion_csv",
]


def kz_exact_free(kappa, k: float):
    """Exact longitudinal wavenumber sqrt(k^2 - kappa^2), forward branch.

    For kappa > k returns i*sqrt(kappa^2 - k^2) (positive imaginary part),
    so exp(i kz dz) decays for dz > 0.  Accepts scalars or arrays; always
    returns complex.
    """
    if k <= 0:
        raise ValueError("carrier wavenumber k must be positive")
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise ValueError("kappa must be >= 0")
    gap = (k - kappa) * (k + kappa)
    out = np.where(
        gap >= 0,
        np.sqrt(np.maximum(gap, 0.0)) + 0.0j,
        1j * np.sqrt(np.maximum(-gap, 0.0)),
    )
    return complex(out) if out.ndim == 0 else out


def kz_paraxial_free(kappa, k: float):
    """Paraxial longitudinal wavenumber k - kappa^2/(2k)."""
    if k <= 0:
        raise ValueError("carrier wavenumber k must be positive")
    kappa = np.asarray(kappa, dtype=float)
    out = k - kappa**2 / (2.0 * k)
    return float(out) if out.ndim == 0 else out


class CorrectionEigenvalue(NamedTuple):
    """Magnitude of the z-curvature operator eigenvalue on one component.

    ``estimate`` is the leading-order value kappa^4/(4 k^2); ``exact`` is
    (k - Re kz)^2.  Exposing both lets callers audit the estimate.
    """

    estimate: float
    exact: float


def correction_eigenvalue(kappa: float, k: float) -> CorrectionEigenvalue:
    """Size of the operator dropped by the paraxial truncation.

    Valid in the propagating regime kappa < k only, where the dropped
    d^2/dz^2 term acts on a partial plane wave as -(k - kz)^2 and the
    leading-order estimate of that eigenvalue magnitude is kappa^4/(4k^2).
    """
    if k <= 0:
        raise ValueError("carrier wavenumber k must be positive")
    if not 0 <= kappa < k:
        raise ValueError("correction estimate requires 0 <= kappa < k")
    estimate = kappa**4 / (4.0 * k**2)
    exact = (k - kz_exact_free(kappa, k).real) ** 2
    return CorrectionEigenvalue(estimate=estimate, exact=exact)


@dataclass(frozen=True)
class LandauIndex:
    """Quantum numbers of a transverse Landau eigenmode."""

    n: int
    l: int
    s_z: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("radial quantum number n must be >= 0")


def _require_eb(context: PhysicalContext) -> float:
    eb = context.eb
    if eb == 0.0:
        raise ValueError("no Landau structure: charge * b_field must be nonzero")
    return eb


def _check_spin(idx: LandauIndex, context: PhysicalContext) -> None:
    from .core import SPIN_TAGS

    if idx.s_z not in SPIN_TAGS[context.spin_tag]:
        raise ValueError(
            f"s_z={idx.s_z} is illegal for context tagged {context.spin_tag!r}"
        )


def landau_transverse_eigenvalue(idx: LandauIndex, context: PhysicalContext) -> float:
    """Eigenvalue lambda of the magnetic transverse operator on (n, l, s_z).

    lambda = -|eB| (2n + |l| + 1) + eB l + 2 eB s_z.  The l-linear and
    spin terms give the familiar Landau degeneracy: for eB > 0 all l >= 0
    modes at fixed n share one level.  Cross-checked against the
    finite-difference radial oracle (see tests) before being trusted.
    """
    eb = _require_eb(context)
    _check_spin(idx, context)
    return -abs(eb) * (2 * idx.n + abs(idx.l) + 1) + eb * idx.l + 2.0 * eb * idx.s_z


def kz_exact_magnetic(idx: LandauIndex, context: PhysicalContext) -> complex:
    """Exact kz = sqrt(k^2 + lambda) on the forward/decaying branch."""
    lam = landau_transverse_eigenvalue(idx, context)
    k = context.carrier_k
    rad = k * k + lam
    if rad >= 0:
        return complex(np.sqrt(rad))
    return 1j * float(np.sqrt(-rad))


def kz_paraxial_magnetic(idx: LandauIndex, context: PhysicalContext) -> float:
    """Paraxial kz = k + lambda/(2k) for a Landau mode."""
    lam = landau_transverse_eigenvalue(idx, context)
    k = context.carrier_k
    return k + lam / (2.0 * k)


def landau_energy(idx: LandauIndex, kz: float, context: PhysicalContext) -> float:
    """Total energy of a Landau mode with longitudinal wavenumber kz.

    E = sqrt(m^2 + kz^2 - lambda); inverse of kz_exact_magnetic in the
    sense that rebuilding a context at this energy reproduces kz.
    """
    lam = landau_transverse_eigenvalue(idx, context)
    rad = context.mass**2 + kz**2 - lam
    if rad < 0:
        raise ValueError("no real energy: m^2 + kz^2 - lambda is negative")
    return float(np.sqrt(rad))


def photon_effective_mass(kappa: float, energy: float) -> float:
    """Effective mass sqrt(E^2 - kz^2) of a structured massless mode.

    For a massless carrier k = E, so the effective mass is exactly the
    transverse wavenumber kappa; any transverse structure makes it
    nonzero.
    """
    if energy <= 0:
        raise ValueError("photon energy must be positive")
    if not 0 <= kappa <= energy:
        raise ValueError("kappa must lie in [0, energy] for a propagating photon mode")
    return float(kappa)


def group_velocity(kappa: float, energy: float) -> float:
    """Longitudinal group velocity kz/E of a massless mode; <= 1."""
    photon_effective_mass(kappa, energy)  # validates the inputs
    return kz_exact_free(kappa, energy).real / energy


# ---------------------------------------------------------------------------
# Dispersion tables
# ---------------------------------------------------------------------------

_CSV_COLUMNS = (
    "label",
    "kappa_or_lambda",
    "kz_exact_re",
    "kz_exact_im",
    "kz_paraxial",
    "phase_error_rate",
    "correction_estimate",
    "correction_exact",
)


@dataclass(frozen=True)
class DispersionRecord:
    """One row of a dispersion table.

    ``kappa_or_lambda`` is kappa for free components, lambda for Landau
    modes.  ``phase_error_rate`` is |Re kz_exact - kz_paraxial| in radians
    per unit length.  Correction columns are NaN where the propagating
    estimate does not apply (kappa >= k).
    """

    label: str
    kappa_or_lambda: float
    kz_exact: complex
    kz_paraxial: float
    phase_error_rate: float
    correction_estimate: float
    correction_exact: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "kappa_or_lambda": self.kappa_or_lambda,
            "kz_exact_re": self.kz_exact.real,
            "kz_exact_im": self.kz_exact.imag,
            "kz_paraxial": self.kz_paraxial,
            "phase_error_rate": self.phase_error_rate,
            "correction_estimate": self.correction_estimate,
            "correction_exact": self.correction_exact,
        }

    @classmethod
    def from_dict(cls, d) -> "DispersionRecord":
        return cls(
            label=d["label"],
            kappa_or_lambda=float(d["kappa_or_lambda"]),
            kz_exact=complex(float(d["kz_exact_re"]), float(d["kz_exact_im"])),
            kz_paraxial=float(d["kz_paraxial"]),
            phase_error_rate=float(d["phase_error_rate"]),
            correction_estimate=float(d["correction_estimate"]),
            correction_exact=float(d["correction_exact"]),
        )


def free_dispersion_table(kappas: Sequence[float], k: float) -> list[DispersionRecord]:
    """Exact/paraxial dispersion rows for a sweep of transverse wavenumbers."""
    records = []
    for i, kappa in enumerate(kappas):
        kappa = float(kappa)
        kz_ex = kz_exact_free(kappa, k)
        kz_par = kz_paraxial_free(kappa, k)
        if kappa < k:
            corr = correction_eigenvalue(kappa, k)
            est, exact = corr.estimate, corr.exact
        else:
            est, exact = float("nan"), float("nan")
        records.append(
            DispersionRecord(
                label=f"kappa_{i:03d}",
                kappa_or_lambda=kappa,
                kz_exact=kz_ex,
                kz_paraxial=kz_par,
                phase_error_rate=abs(kz_ex.real - kz_par),
                correction_estimate=est,
                correction_exact=exact,
            )
        )
    return records


def landau_dispersion_table(
    indices: Iterable[LandauIndex], context: PhysicalContext
) -> list[DispersionRecord]:
    """Dispersion rows for Landau modes; kappa_or_lambda holds lambda."""
    records = []
    for idx in indices:
        lam = landau_transverse_eigenvalue(idx, context)
        kz_ex = kz_exact_magnetic(idx, context)
        kz_par = kz_paraxial_magnetic(idx, context)
        k = context.carrier_k
        exact = (k - kz_ex.real) ** 2
        # leading-order size of the dropped operator, lambda^2/(4k^2)
        est = lam * lam / (4.0 * k * k)
        sz = f"{idx.s_z:+g}"
        records.append(
            DispersionRecord(
                label=f"landau_n{idx.n}_l{idx.l}_sz{sz}",
                kappa_or_lambda=lam,
                kz_exact=kz_ex,
                kz_paraxial=kz_par,
                phase_error_rate=abs(kz_ex.real - kz_par),
                correction_estimate=est,
                correction_exact=exact,
            )
        )
    return records


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_dispersion_csv(records: Sequence[DispersionRecord], path_or_file) -> None:
    """Write a dispersion table; 17 significant digits, header mandatory."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for rec in records:
            d = rec.to_dict()
            writer.writerow(
                [d["label"]] + [_fmt(d[col]) for col in _CSV_COLUMNS[1:]]
            )
    finally:
        if own:
            fh.close()


def read_dispersion_csv(path_or_file) -> list[DispersionRecord]:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "r", newline="") if own else path_or_file
    try:
        reader = csv.DictReader(fh)
        return [DispersionRecord.from_dict(row) for row in reader]
    finally:
        if own:
            fh.close()


def dispersion_table_csv_string(records: Sequence[DispersionRecord]) -> str:
    buf = io.StringIO()
    write_dispersion_csv(records, buf)
    return buf.getvalue()
