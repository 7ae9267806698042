"""Canonical transverse beam profiles and Landau-basis (de)composition.

Mode conventions (stated explicitly because conventions vary):

* Laguerre-Gauss:  Psi ~ (sqrt(2) r / w)^|l| * L_p^|l|(2 r^2 / w^2)
  * exp(-r^2 / w^2) * exp(i l phi), unit L2 norm.
* Hermite-Gauss:   Psi ~ H_m(sqrt(2) x / w) H_n(sqrt(2) y / w)
  * exp(-(x^2 + y^2) / w^2), unit L2 norm.
* Bessel:          J_l(kappa0 r) exp(i l phi) truncated by a smooth
  super-Gaussian aperture exp(-(r/R)^8) to be square integrable, then
  normalized on the grid.
* Landau:          Laguerre-Gauss profile at the magnetic waist
  w = 2/sqrt(|eB|), which makes it an eigenfunction of the magnetic
  transverse operator with eigenvalue
  -|eB|(2n + |l| + 1) + eB l + 2 eB s_z.

All generators are deterministic and produce unit-norm states (analytic
normalization; the grid quadrature then reproduces 1 to ~1e-12 on an
adequate grid).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np
from scipy.special import eval_genlaguerre, eval_hermite, jv

from .core import BeamState, ModeSpectrum, PhysicalContext, TransverseGrid, beam_norm

__all__ = [
    "ModeRequest",
    "SamplingWarning",
    "MODE_FAMILIES",
    "magnetic_waist",
    "generate",
    "laguerre_gauss_field",
    "landau_mode_field",
    "decompose_landau",
    "synthesize",
    "apply_magnetic_transverse_operator",
    "write_spectrum_csv",
    "read_spectrum_csv",
]

MODE_FAMILIES = ("gaussian", "laguerre_gauss", "hermite_gauss", "bessel", "landau")


class SamplingWarning(UserWarning):
    """Grid resolution or extent is marginal for the requested mode."""


@dataclass(frozen=True)
class ModeRequest:
    """Parameters of one transverse profile.

    Family-specific fields: ``waist`` (gaussian, laguerre_gauss,
    hermite_gauss), ``p``/``l`` (laguerre_gauss), ``m``/``n``
    (hermite_gauss), ``kappa0``/``l``/``aperture_radius`` (bessel),
    ``n``/``l`` (landau; the waist is derived from eB).  ``x0``/``y0``
    shift the mode center off the grid origin.
    """

    family: str
    waist: float | None = None
    p: int = 0
    l: int = 0
    m: int = 0
    n: int = 0
    kappa0: float | None = None
    aperture_radius: float | None = None
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.family not in MODE_FAMILIES:
            raise ValueError(
                f"unknown mode family {self.family!r}; allowed: {MODE_FAMILIES}"
            )


def magnetic_waist(eb: float) -> float:
    """Waist of Landau eigenmodes under the exp(-r^2/w^2) convention.

    The magnetic transverse operator is a 2D oscillator of frequency
    |eB|/2, so its ground state is exp(-|eB| r^2 / 4); matching
    exp(-r^2/w^2) gives w = 2/sqrt(|eB|).
    """
    if eb == 0.0:
        raise ValueError("no Landau structure: eB must be nonzero")
    return 2.0 / np.sqrt(abs(eb))


def _polar(grid: TransverseGrid, x0: float = 0.0, y0: float = 0.0):
    X, Y = grid.meshgrid()
    Xc, Yc = X - x0, Y - y0
    r = np.hypot(Xc, Yc)
    phi = np.arctan2(Yc, Xc)
    return Xc, Yc, r, phi


def laguerre_gauss_field(
    grid: TransverseGrid, waist: float, p: int, l: int,
    x0: float = 0.0, y0: float = 0.0,
) -> np.ndarray:
    """Unit-norm Laguerre-Gauss envelope on the grid."""
    if waist <= 0:
        raise ValueError("waist must be positive")
    if p < 0:
        raise ValueError("radial index p must be >= 0")
    _, _, r, phi = _polar(grid, x0, y0)
    t = 2.0 * r**2 / waist**2
    norm = np.sqrt(2.0 * factorial(p) / (np.pi * factorial(p + abs(l)))) / waist
    radial = t ** (abs(l) / 2.0) * eval_genlaguerre(p, abs(l), t) * np.exp(-r**2 / waist**2)
    return norm * radial * np.exp(1j * l * phi)


def _hermite_gauss_field(grid, waist, m, n, x0=0.0, y0=0.0):
    if waist <= 0:
        raise ValueError("waist must be positive")
    if m < 0 or n < 0:
        raise ValueError("Hermite indices must be >= 0")
    Xc, Yc, r, _ = _polar(grid, x0, y0)
    u, v = np.sqrt(2.0) * Xc / waist, np.sqrt(2.0) * Yc / waist
    norm = np.sqrt(2.0 / (np.pi * 2.0 ** (m + n) * factorial(m) * factorial(n))) / waist
    field = norm * eval_hermite(m, u) * eval_hermite(n, v) * np.exp(-r**2 / waist**2)
    return field.astype(np.complex128)


def _bessel_field(grid, kappa0, l, aperture_radius, x0=0.0, y0=0.0):
    if kappa0 is None or kappa0 <= 0:
        raise ValueError("bessel mode needs a positive kappa0")
    if aperture_radius is None or aperture_radius <= 0:
        raise ValueError("bessel mode needs a positive aperture_radius")
    _, _, r, phi = _polar(grid, x0, y0)
    # super-Gaussian window keeps the ideal (non-normalizable) profile
    # square integrable without introducing hard-edge ringing
    window = np.exp(-((r / aperture_radius) ** 8))
    field = jv(l, kappa0 * r) * np.exp(1j * l * phi) * window
    quad = np.sqrt(np.sum(np.abs(field) ** 2) * grid.cell_area)
    if quad == 0.0:
        raise ValueError("bessel mode vanishes on this grid")
    return field / quad


def landau_mode_field(
    grid: TransverseGrid, eb: float, n: int, l: int,
    x0: float = 0.0, y0: float = 0.0,
) -> np.ndarray:
    """Unit-norm Landau eigenmode (n, l) for signed field strength eb."""
    return laguerre_gauss_field(grid, magnetic_waist(eb), n, l, x0, y0)


def _spectral_support(request: ModeRequest, context: PhysicalContext) -> float:
    """Rough outer edge of the mode's transverse spectrum (heuristic)."""
    if request.family == "bessel":
        return request.kappa0 + 16.0 / request.aperture_radius
    if request.family == "landau":
        w = magnetic_waist(context.eb)
        order = 2 * request.n + abs(request.l)
    elif request.family == "laguerre_gauss":
        w = request.waist
        order = 2 * request.p + abs(request.l)
    elif request.family == "hermite_gauss":
        w = request.waist
        order = request.m + request.n
    else:
        w = request.waist
        order = 0
    return (2.0 * np.sqrt(order + 1.0) + 6.0) / w


def _effective_waist(request: ModeRequest, context: PhysicalContext) -> float:
    if request.family == "landau":
        return magnetic_waist(context.eb)
    if request.family == "bessel":
        # radial half-period of J_l
        return np.pi / request.kappa0
    return request.waist


def generate(
    request: ModeRequest,
    grid: TransverseGrid,
    context: PhysicalContext,
    z: float = 0.0,
) -> BeamState:
    """Generate a unit-norm BeamState for the requested profile.

    A SamplingWarning is issued (and recorded in ``state.meta``) when the
    waist falls under 4 grid cells or the estimated spectral support
    exceeds 80% of Nyquist; the state is still produced.
    """
    fam = request.family
    if fam == "gaussian":
        if request.waist is None or request.waist <= 0:
            raise ValueError("gaussian mode needs a positive waist")
        field = laguerre_gauss_field(grid, request.waist, 0, 0, request.x0, request.y0)
    elif fam == "laguerre_gauss":
        if request.waist is None:
            raise ValueError("laguerre_gauss mode needs a waist")
        field = laguerre_gauss_field(
            grid, request.waist, request.p, request.l, request.x0, request.y0
        )
    elif fam == "hermite_gauss":
        if request.waist is None:
            raise ValueError("hermite_gauss mode needs a waist")
        field = _hermite_gauss_field(
            grid, request.waist, request.m, request.n, request.x0, request.y0
        )
    elif fam == "bessel":
        if request.kappa0 is not None and request.kappa0 >= context.carrier_k:
            raise ValueError("bessel mode requires kappa0 < carrier k to propagate")
        field = _bessel_field(
            grid, request.kappa0, request.l, request.aperture_radius,
            request.x0, request.y0,
        )
    elif fam == "landau":
        if context.eb == 0.0:
            raise ValueError("landau family requires a magnetized context (eB != 0)")
        field = landau_mode_field(grid, context.eb, request.n, request.l,
                                  request.x0, request.y0)
    else:  # pragma: no cover - guarded by ModeRequest
        raise ValueError(f"unknown family {fam!r}")

    meta = {}
    w_eff = _effective_waist(request, context)
    nyquist = np.pi / max(grid.dx, grid.dy)
    support = _spectral_support(request, context)
    if w_eff < 4.0 * max(grid.dx, grid.dy) or support > 0.8 * nyquist:
        msg = (
            f"{fam} mode is marginally sampled: waist {w_eff:.3g} vs cell "
            f"{max(grid.dx, grid.dy):.3g}, spectral support {support:.3g} vs "
            f"Nyquist {nyquist:.3g}"
        )
        warnings.warn(SamplingWarning(msg), stacklevel=2)
        meta["sampling_warning"] = 1.0

    return BeamState(grid=grid, context=context, z=float(z), envelope=field, meta=meta)


# ---------------------------------------------------------------------------
# Landau basis, decomposition, synthesis
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _landau_basis(grid: TransverseGrid, eb: float, n_max: int,
                  l_min: int, l_max: int):
    """Stacked basis fields for all (n <= n_max, l_min <= l <= l_max)."""
    keys = [(n, l) for n in range(n_max + 1) for l in range(l_min, l_max + 1)]
    stack = np.stack([landau_mode_field(grid, eb, n, l) for n, l in keys])
    return keys, stack


def decompose_landau(
    state: BeamState,
    context: PhysicalContext,
    n_max: int,
    l_range: tuple[int, int],
) -> ModeSpectrum:
    """Project a state onto the truncated Landau basis.

    Coefficients are grid inner products <mode|Psi> dx dy.  The reported
    ``residual_norm`` is the norm-squared fraction outside the truncated
    span; callers choose the truncation and judge the residual.
    """
    if context.eb == 0.0:
        raise ValueError("no Landau structure: eB must be nonzero")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    l_min, l_max = int(l_range[0]), int(l_range[1])
    if l_min > l_max:
        raise ValueError("l_range must satisfy l_min <= l_max")
    keys, stack = _landau_basis(state.grid, context.eb, int(n_max), l_min, l_max)
    area = state.grid.cell_area
    coeffs = np.tensordot(stack.conj(), state.envelope, axes=([1, 2], [0, 1])) * area
    total = np.sum(np.abs(state.envelope) ** 2) * area
    captured = float(np.sum(np.abs(coeffs) ** 2))
    residual = 0.0 if total == 0 else max(0.0, 1.0 - captured / total)
    entries = tuple(
        (n, l, complex(c)) for (n, l), c in zip(keys, coeffs)
    )
    return ModeSpectrum(entries=entries, context=context, residual_norm=residual)


def synthesize(
    spectrum: ModeSpectrum,
    grid: TransverseGrid,
    context: PhysicalContext,
    z: float = 0.0,
) -> BeamState:
    """Sum coefficient * mode over the spectrum entries on the grid.

    An empty spectrum gives the zero field.  The grid norm of the result
    equals sqrt(sum |c|^2) up to quadrature error.
    """
    if context.eb == 0.0:
        raise ValueError("no Landau structure: eB must be nonzero")
    field = np.zeros(grid.shape, dtype=np.complex128)
    for n, l, c in spectrum.entries:
        if c != 0:
            field += c * landau_mode_field(grid, context.eb, n, l)
    return BeamState(grid=grid, context=context, z=float(z), envelope=field)


def apply_magnetic_transverse_operator(
    field: np.ndarray, grid: TransverseGrid, context: PhysicalContext
) -> np.ndarray:
    """Apply the magnetic transverse operator to a gridded field.

    lap_perp f - i eB (x f_y - y f_x) - (eB)^2 r^2 / 4 f + 2 eB s_z f,
    with derivatives evaluated spectrally.  Landau eigenmodes must come
    back as lambda * f; the residual is a direct check that generated
    modes really are eigenfunctions.
    """
    eb = context.eb
    if eb == 0.0:
        raise ValueError("no Landau structure: eB must be nonzero")
    X, Y = grid.meshgrid()
    kx, ky = grid.kx(), grid.ky()
    KX, KY = np.meshgrid(kx, ky, indexing="xy")
    ft = np.fft.fft2(field)
    lap = np.fft.ifft2(-(KX**2 + KY**2) * ft)
    fx = np.fft.ifft2(1j * KX * ft)
    fy = np.fft.ifft2(1j * KY * ft)
    dphi = X * fy - Y * fx
    r2 = X**2 + Y**2
    return (
        lap
        - 1j * eb * dphi
        - (eb * eb) * r2 / 4.0 * field
        + 2.0 * eb * context.spin_projection * field
    )


# ---------------------------------------------------------------------------
# ModeSpectrum CSV: columns n, l, coeff_re, coeff_im, one trailing
# metadata row for residual_norm.
# ---------------------------------------------------------------------------


def write_spectrum_csv(spectrum: ModeSpectrum, path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(("n", "l", "coeff_re", "coeff_im"))
        for n, l, c in spectrum.entries:
            writer.writerow((n, l, f"{c.real:.17g}", f"{c.imag:.17g}"))
        writer.writerow(("residual_norm", f"{spectrum.residual_norm:.17g}", "", ""))
    finally:
        if own:
            fh.close()


def read_spectrum_csv(path_or_file, context: PhysicalContext) -> ModeSpectrum:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "r", newline="") if own else path_or_file
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    if not rows or rows[0] != ["n", "l", "coeff_re", "coeff_im"]:
        raise ValueError("not a mode spectrum CSV")
    if not rows[-1] or rows[-1][0] != "residual_norm":
        raise ValueError("missing residual_norm trailer row")
    residual = float(rows[-1][1])
    entries = tuple(
        (int(n), int(l), complex(float(re), float(im)))
        for n, l, re, im in rows[1:-1]
    )
    return ModeSpectrum(entries=entries, context=context, residual_norm=residual)
