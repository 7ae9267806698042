"""Shared physical and numerical data model.

Conventions used throughout the package:

* natural units, hbar = c = 1; every quantity is dimensionless once an
  energy scale is fixed
* a beam travels along +z with carrier wavenumber k = sqrt(E^2 - m^2);
  the stored field is the slowly varying envelope Psi, the full wave is
  exp(i k z) * Psi(x, y)
* envelopes are complex128 arrays of shape (ny, nx), row-major with y as
  the slow index; the transverse grid is uniform and FFT-compatible
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "SPIN_TAGS",
    "PhysicalContext",
    "TransverseGrid",
    "BeamState",
    "ModeSpectrum",
    "make_context",
    "beam_norm",
    "XBEAM_MAGIC",
    "write_snapshot",
    "read_snapshot",
    "snapshot_to_bytes",
    "snapshot_from_bytes",
    "state_from_snapshot",
    "FieldSnapshot",
]

# Allowed spin projections per scenario tag.  Spin-1/2 covers Dirac
# particles (electrons); spin-1 covers g=2 vector bosons; spinless is the
# s_z = 0 scalar case and is also used for photons (fixed helicity, scalar
# envelope).
SPIN_TAGS: Mapping[str, tuple[float, ...]] = {
    "spinless": (0.0,),
    "spin-1/2": (-0.5, +0.5),
    "spin-1": (-1.0, 0.0, +1.0),
}

_CARRIER_RTOL = 4.0  # ulps allowed between carrier_k^2 + m^2 and E^2


@dataclass(frozen=True)
class PhysicalContext:
    """Particle and background-field constants for one beam scenario.

    ``carrier_k`` is the longitudinal wavenumber of the carrier plane
    wave, sqrt(energy^2 - mass^2).  Prefer :func:`make_context`, which
    derives it; direct construction must supply a consistent value.
    """

    mass: float
    energy: float
    charge: float
    b_field: float
    spin_tag: str
    spin_projection: float
    carrier_k: float

    def __post_init__(self):
        if self.spin_tag not in SPIN_TAGS:
            raise ValueError(
                f"unknown spin tag {self.spin_tag!r}; expected one of {sorted(SPIN_TAGS)}"
            )
        if self.spin_projection not in SPIN_TAGS[self.spin_tag]:
            raise ValueError(
                f"spin projection {self.spin_projection} is illegal for "
                f"{self.spin_tag!r} (allowed: {SPIN_TAGS[self.spin_tag]})"
            )
        if self.mass < 0:
            raise ValueError("mass must be >= 0")
        if self.energy <= self.mass:
            raise ValueError("no propagating carrier: energy must exceed mass")
        if not self.carrier_k > 0:
            raise ValueError("carrier_k must be positive")
        tol = _CARRIER_RTOL * np.finfo(float).eps * self.energy**2
        if abs(self.carrier_k**2 + self.mass**2 - self.energy**2) > tol:
            raise ValueError("carrier_k inconsistent with energy and mass")

    @property
    def eb(self) -> float:
        """Signed product e*B; all magnetic formulas depend on it only."""
        return self.charge * self.b_field

    @property
    def is_photon(self) -> bool:
        return self.mass == 0.0 and self.charge == 0.0

    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "energy": self.energy,
            "charge": self.charge,
            "b_field": self.b_field,
            "spin_tag": self.spin_tag,
            "spin_projection": self.spin_projection,
            "carrier_k": self.carrier_k,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PhysicalContext":
        return cls(
            mass=d["mass"],
            energy=d["energy"],
            charge=d["charge"],
            b_field=d["b_field"],
            spin_tag=d["spin_tag"],
            spin_projection=d["spin_projection"],
            carrier_k=d["carrier_k"],
        )


def make_context(
    mass: float,
    energy: float,
    charge: float = 0.0,
    b_field: float = 0.0,
    spin_tag: str = "spinless",
    s_z: float = 0.0,
) -> PhysicalContext:
    """Build a validated :class:`PhysicalContext` with derived carrier_k.

    Requires energy > mass >= 0 so that the carrier wavenumber
    sqrt(energy^2 - mass^2) is real and positive, and s_z legal for the
    spin tag.  Pure: identical arguments give identical contexts.
    """
    if mass < 0:
        raise ValueError("mass must be >= 0")
    if energy <= mass:
        raise ValueError("no propagating carrier: energy must exceed mass")
    carrier_k = float(np.sqrt((energy - mass) * (energy + mass)))
    return PhysicalContext(
        mass=float(mass),
        energy=float(energy),
        charge=float(charge),
        b_field=float(b_field),
        spin_tag=spin_tag,
        spin_projection=float(s_z),
        carrier_k=carrier_k,
    )


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TransverseGrid:
    """Uniform Cartesian sampling of the transverse (x, y) plane.

    nx, ny are restricted to powers of two for predictable FFT layout.
    Coordinates are centered: x_i = (i - nx//2) * dx, so the origin is an
    exact grid point.  The conjugate spectral grid carries wavenumbers
    kappa_x = 2*pi*j/(nx*dx) in standard wraparound order, Nyquist pi/dx.
    """

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        if not (_is_power_of_two(self.nx) and _is_power_of_two(self.ny)):
            raise ValueError("nx and ny must be powers of two")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("dx and dy must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx * self.dx, self.ny * self.dy)

    def x_coords(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    def y_coords(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (ny, nx)."""
        return np.meshgrid(self.x_coords(), self.y_coords(), indexing="xy")

    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    def kappa_sq(self) -> np.ndarray:
        """kappa_x^2 + kappa_y^2 on the spectral grid, shape (ny, nx)."""
        kxx, kyy = np.meshgrid(self.kx(), self.ky(), indexing="xy")
        return kxx**2 + kyy**2

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "dx": self.dx, "dy": self.dy}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TransverseGrid":
        return cls(nx=d["nx"], ny=d["ny"], dx=d["dx"], dy=d["dy"])


@dataclass(frozen=True)
class BeamState:
    """Complex envelope Psi(x, y) at longitudinal position z.

    Immutable: the envelope array is copied on construction and marked
    read-only, so states can be shared freely across threads.  ``meta``
    carries advisory per-step diagnostics (evanescent loss, decomposition
    residual); it never participates in equality or serialization.
    """

    grid: TransverseGrid
    context: PhysicalContext
    z: float
    envelope: np.ndarray
    meta: Mapping[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        env = np.array(self.envelope, dtype=np.complex128, copy=True)
        if env.shape != self.grid.shape:
            raise ValueError(
                f"envelope shape {env.shape} does not match grid {self.grid.shape}"
            )
        env.flags.writeable = False
        object.__setattr__(self, "envelope", env)
        object.__setattr__(self, "meta", dict(self.meta))

    def with_envelope(self, envelope: np.ndarray, z: float | None = None,
                      meta: Mapping[str, float] | None = None) -> "BeamState":
        return BeamState(
            grid=self.grid,
            context=self.context,
            z=self.z if z is None else float(z),
            envelope=envelope,
            meta={} if meta is None else meta,
        )

    def norm(self) -> float:
        return beam_norm(self)


def beam_norm(state: BeamState) -> float:
    """sqrt(sum |Psi|^2 dx dy), the discrete L2 norm of the envelope."""
    return float(
        np.sqrt(np.sum(np.abs(state.envelope) ** 2) * state.grid.cell_area)
    )


@dataclass(frozen=True)
class ModeSpectrum:
    """Complex coefficients over indexed transverse eigenmodes.

    ``entries`` maps (n, l) quantum numbers to overlap coefficients;
    ``residual_norm`` is the fraction of the input norm squared that the
    listed modes do not capture (0 for a state inside the truncated span).
    """

    entries: tuple[tuple[int, int, complex], ...]
    context: PhysicalContext
    residual_norm: float

    def __post_init__(self):
        keys = [(n, l) for n, l, _ in self.entries]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (n, l) keys in mode spectrum")
        if self.residual_norm < -1e-12:
            raise ValueError("residual_norm must be >= 0")
        object.__setattr__(
            self,
            "entries",
            tuple((int(n), int(l), complex(c)) for n, l, c in self.entries),
        )
        object.__setattr__(self, "residual_norm", max(0.0, float(self.residual_norm)))

    def coefficient(self, n: int, l: int) -> complex:
        for n_, l_, c in self.entries:
            if (n_, l_) == (n, l):
                return c
        return 0.0 + 0.0j

    def power(self) -> float:
        """Sum of |coefficient|^2 over all entries."""
        return float(sum(abs(c) ** 2 for _, _, c in self.entries))

    def to_dict(self) -> dict:
        return {
            "entries": [[n, l, c.real, c.imag] for n, l, c in self.entries],
            "context": self.context.to_dict(),
            "residual_norm": self.residual_norm,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModeSpectrum":
        return cls(
            entries=tuple(
                (n, l, complex(re, im)) for n, l, re, im in d["entries"]
            ),
            context=PhysicalContext.from_dict(d["context"]),
            residual_norm=d["residual_norm"],
        )


# ---------------------------------------------------------------------------
# XBEAM001 binary field snapshots
#
# Layout: 8-byte ASCII magic "XBEAM001", little-endian u64 nx, u64 ny,
# f64 dx, f64 dy, f64 z, f64 carrier_k, then ny*nx interleaved (re, im)
# f64 pairs, row-major with y as the slow index.
# ---------------------------------------------------------------------------

XBEAM_MAGIC = b"XBEAM001"
_HEADER = struct.Struct("<QQdddd")


@dataclass(frozen=True)
class FieldSnapshot:
    """Decoded XBEAM001 snapshot; carries no particle constants beyond k."""

    grid: TransverseGrid
    z: float
    carrier_k: float
    envelope: np.ndarray


def snapshot_to_bytes(state: BeamState) -> bytes:
    header = XBEAM_MAGIC + _HEADER.pack(
        state.grid.nx,
        state.grid.ny,
        state.grid.dx,
        state.grid.dy,
        state.z,
        state.context.carrier_k,
    )
    flat = np.empty((state.grid.ny, state.grid.nx, 2), dtype="<f8")
    flat[..., 0] = state.envelope.real
    flat[..., 1] = state.envelope.imag
    return header + flat.tobytes()


def snapshot_from_bytes(blob: bytes) -> FieldSnapshot:
    if blob[:8] != XBEAM_MAGIC:
        raise ValueError("not an XBEAM001 snapshot (bad magic)")
    nx, ny, dx, dy, z, carrier_k = _HEADER.unpack_from(blob, 8)
    grid = TransverseGrid(nx=int(nx), ny=int(ny), dx=dx, dy=dy)
    n_floats = 2 * grid.nx * grid.ny
    payload = np.frombuffer(blob, dtype="<f8", count=n_floats, offset=8 + _HEADER.size)
    pairs = payload.reshape(grid.ny, grid.nx, 2)
    envelope = pairs[..., 0] + 1j * pairs[..., 1]
    return FieldSnapshot(grid=grid, z=z, carrier_k=carrier_k, envelope=envelope)


def write_snapshot(state: BeamState, path) -> None:
    with open(path, "wb") as fh:
        fh.write(snapshot_to_bytes(state))


def read_snapshot(path) -> FieldSnapshot:
    with open(path, "rb") as fh:
        return snapshot_from_bytes(fh.read())


def state_from_snapshot(snap: FieldSnapshot, context: PhysicalContext,
                        meta: Mapping[str, float] | None = None) -> BeamState:
    """Rebind a snapshot to a full context; carrier wavenumbers must agree."""
    if abs(snap.carrier_k - context.carrier_k) > 4 * np.finfo(float).eps * context.carrier_k:
        raise ValueError(
            f"snapshot carrier_k {snap.carrier_k} does not match context "
            f"carrier_k {context.carrier_k}"
        )
    return BeamState(grid=snap.grid, context=context, z=snap.z,
                     envelope=snap.envelope, meta=meta or {})
