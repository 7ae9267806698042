"""Batch scenario runner.

A run is described by a single JSON document:

    {
      "units": "natural",
      "scenarios": [
        {
          "name": "free_table",
          "kind": "dispersion_table",        # or propagate | compare | landau_spectrum
          "context": {"mass": 3.0, "energy": 5.0, "charge": 0.0,
                      "b_field": 0.0, "spin": "spinless", "s_z": 0.0},
          "grid": {"nx": 128, "ny": 128, "dx": 0.1, "dy": 0.1},
          ...kind-specific parameters...
        }
      ]
    }

Kind-specific parameters:

* dispersion_table: kappa_min (default 0), kappa_max, num, output
* propagate: initial (mode request), variant, z_values, output,
  optional snapshot_prefix, basis {n_max, l_min, l_max}, residual_tol
* compare: initial, z_values, output, optional basis, residual_tol
* landau_spectrum: n_max, l_min, l_max, output

A mode request is {"family": ..., "waist": ..., "p": ..., "l": ...,
"m": ..., "n": ..., "kappa0": ..., "aperture_radius": ..., "x0": ...,
"y0": ...} with only the family-relevant keys required.  Propagation
medium follows the context: charge * b_field != 0 selects the Landau
propagator, otherwise free space.

Runs are bit-reproducible: no randomness anywhere, outputs written
atomically (temp file + rename), CSV floats printed with 17 significant
digits.  ``--threads`` is a parallelism hint only and never changes
results.  Exit codes: 0 all scenarios succeeded, 1 config schema
violation, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .core import SPIN_TAGS, BeamState, TransverseGrid, make_context, snapshot_to_bytes
from .dispersion import (
    LandauIndex,
    free_dispersion_table,
    landau_dispersion_table,
    write_dispersion_csv,
)
from .modes import MODE_FAMILIES, ModeRequest, generate
from .propagation import (
    BasisBounds,
    compare_variants,
    observables,
    propagate_free,
    propagate_magnetic,
    write_comparison_csv,
)

__all__ = ["validate", "validate_config", "run", "main"]

KINDS = ("dispersion_table", "propagate", "compare", "landau_spectrum")

_MODE_KEYS = {
    "family", "waist", "p", "l", "m", "n", "kappa0", "aperture_radius",
    "x0", "y0",
}


# ---------------------------------------------------------------------------
# Schema validation (no computation; collects every violation)
# ---------------------------------------------------------------------------


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_context(ctx, where: str, diags: list[str]):
    if not isinstance(ctx, dict):
        diags.append(f"{where}: context must be an object")
        return None
    ok = True
    for key in ("mass", "energy", "charge", "b_field", "s_z"):
        if not _is_num(ctx.get(key)):
            diags.append(f"{where}.{key}: missing or non-numeric")
            ok = False
    spin = ctx.get("spin")
    if spin not in SPIN_TAGS:
        diags.append(
            f"{where}.spin: {spin!r} is not one of {sorted(SPIN_TAGS)}"
        )
        ok = False
    if not ok:
        return None
    if ctx["mass"] < 0:
        diags.append(f"{where}.mass: must be >= 0")
        ok = False
    if ctx["energy"] <= ctx["mass"]:
        diags.append(
            f"{where}: energy ({ctx['energy']}) must exceed mass "
            f"({ctx['mass']}); no propagating carrier"
        )
        ok = False
    if ctx["s_z"] not in SPIN_TAGS[spin]:
        diags.append(
            f"{where}.s_z: {ctx['s_z']} is illegal for spin {spin!r} "
            f"(allowed: {SPIN_TAGS[spin]})"
        )
        ok = False
    return ctx if ok else None


def _check_grid(grid, where: str, diags: list[str]):
    if not isinstance(grid, dict):
        diags.append(f"{where}: grid must be an object")
        return
    for key in ("nx", "ny"):
        v = grid.get(key)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1 or v & (v - 1):
            diags.append(f"{where}.{key}: must be a positive power-of-two integer")
    for key in ("dx", "dy"):
        v = grid.get(key)
        if not _is_num(v) or v <= 0:
            diags.append(f"{where}.{key}: must be a positive number")


def _check_output_name(name, where: str, diags: list[str]):
    if not isinstance(name, str) or not name:
        diags.append(f"{where}: missing output file name")
        return
    if os.sep in name or (os.altsep and os.altsep in name) or name.startswith("."):
        diags.append(f"{where}: output name {name!r} must be a plain file name")


def _check_mode_request(req, where: str, ctx, diags: list[str]):
    if not isinstance(req, dict):
        diags.append(f"{where}: initial mode request must be an object")
        return
    family = req.get("family")
    if family not in MODE_FAMILIES:
        diags.append(
            f"{where}.family: {family!r} is not one of {list(MODE_FAMILIES)}"
        )
        return
    unknown = set(req) - _MODE_KEYS
    if unknown:
        diags.append(f"{where}: unknown mode parameters {sorted(unknown)}")
    if family in ("gaussian", "laguerre_gauss", "hermite_gauss"):
        if not _is_num(req.get("waist")) or req["waist"] <= 0:
            diags.append(f"{where}.waist: must be a positive number")
    for key in ("p", "m", "n"):
        if key in req and (not isinstance(req[key], int) or req[key] < 0):
            diags.append(f"{where}.{key}: must be a non-negative integer")
    if "l" in req and not isinstance(req["l"], int):
        diags.append(f"{where}.l: must be an integer")
    if family == "bessel":
        if not _is_num(req.get("kappa0")) or req["kappa0"] <= 0:
            diags.append(f"{where}.kappa0: must be a positive number")
        elif ctx is not None:
            k = float(np.sqrt(ctx["energy"] ** 2 - ctx["mass"] ** 2))
            if req["kappa0"] >= k:
                diags.append(
                    f"{where}.kappa0: {req['kappa0']} must be below the "
                    f"carrier wavenumber {k:.6g} for a propagating mode"
                )
        if not _is_num(req.get("aperture_radius")) or req["aperture_radius"] <= 0:
            diags.append(f"{where}.aperture_radius: must be a positive number")
    if family == "landau":
        if ctx is not None and ctx["charge"] * ctx["b_field"] == 0:
            diags.append(
                f"{where}: landau mode requires charge * b_field != 0 in the context"
            )


def _check_basis(scn, where: str, diags: list[str]):
    basis = scn.get("basis")
    if basis is None:
        return
    if not isinstance(basis, dict):
        diags.append(f"{where}.basis: must be an object")
        return
    for key in ("n_max", "l_min", "l_max"):
        if not isinstance(basis.get(key), int):
            diags.append(f"{where}.basis.{key}: must be an integer")
    if all(isinstance(basis.get(k), int) for k in ("n_max", "l_min", "l_max")):
        if basis["n_max"] < 0:
            diags.append(f"{where}.basis.n_max: must be >= 0")
        if basis["l_min"] > basis["l_max"]:
            diags.append(f"{where}.basis: l_min must be <= l_max")


def _check_z_values(scn, where: str, diags: list[str]):
    zv = scn.get("z_values")
    if not isinstance(zv, list) or not zv or not all(_is_num(z) for z in zv):
        diags.append(f"{where}.z_values: must be a non-empty array of numbers")


def validate_config(doc: Any) -> list[str]:
    """Schema-check a parsed config; returns every violation found."""
    diags: list[str] = []
    if not isinstance(doc, dict):
        return ["config: top level must be an object"]
    if doc.get("units") != "natural":
        diags.append(f"units: must be \"natural\", got {doc.get('units')!r}")
    scenarios = doc.get("scenarios")
    if not isinstance(scenarios, list):
        diags.append("scenarios: must be an array")
        return diags
    seen_names = set()
    for i, scn in enumerate(scenarios):
        where = f"scenarios[{i}]"
        if not isinstance(scn, dict):
            diags.append(f"{where}: must be an object")
            continue
        name = scn.get("name")
        if not isinstance(name, str) or not name:
            diags.append(f"{where}.name: missing scenario name")
        elif name in seen_names:
            diags.append(f"{where}.name: duplicate scenario name {name!r}")
        else:
            seen_names.add(name)
            where = f"scenarios[{i}] ({name})"
        kind = scn.get("kind")
        if kind not in KINDS:
            diags.append(f"{where}.kind: {kind!r} is not one of {list(KINDS)}")
            continue
        ctx = _check_context(scn.get("context"), f"{where}.context", diags)
        _check_grid(scn.get("grid"), f"{where}.grid", diags)

        if kind == "dispersion_table":
            if not _is_num(scn.get("kappa_max")) or scn["kappa_max"] < 0:
                diags.append(f"{where}.kappa_max: must be a non-negative number")
            if "kappa_min" in scn and (
                not _is_num(scn["kappa_min"]) or scn["kappa_min"] < 0
            ):
                diags.append(f"{where}.kappa_min: must be a non-negative number")
            num = scn.get("num")
            if not isinstance(num, int) or num < 1:
                diags.append(f"{where}.num: must be a positive integer")
            _check_output_name(scn.get("output"), f"{where}.output", diags)
        elif kind in ("propagate", "compare"):
            _check_mode_request(scn.get("initial"), f"{where}.initial", ctx, diags)
            _check_z_values(scn, where, diags)
            _check_output_name(scn.get("output"), f"{where}.output", diags)
            _check_basis(scn, where, diags)
            if kind == "propagate":
                variant = scn.get("variant", "exact")
                if variant not in ("exact", "paraxial"):
                    diags.append(
                        f"{where}.variant: {variant!r} must be exact or paraxial"
                    )
                if "snapshot_prefix" in scn and (
                    not isinstance(scn["snapshot_prefix"], str)
                    or not scn["snapshot_prefix"]
                    or os.sep in scn["snapshot_prefix"]
                ):
                    diags.append(
                        f"{where}.snapshot_prefix: must be a plain name fragment"
                    )
        elif kind == "landau_spectrum":
            for key in ("n_max", "l_min", "l_max"):
                if not isinstance(scn.get(key), int):
                    diags.append(f"{where}.{key}: must be an integer")
            if isinstance(scn.get("n_max"), int) and scn["n_max"] < 0:
                diags.append(f"{where}.n_max: must be >= 0")
            if (
                isinstance(scn.get("l_min"), int)
                and isinstance(scn.get("l_max"), int)
                and scn["l_min"] > scn["l_max"]
            ):
                diags.append(f"{where}: l_min must be <= l_max")
            if ctx is not None and ctx["charge"] * ctx["b_field"] == 0:
                diags.append(
                    f"{where}: landau_spectrum requires charge * b_field != 0"
                )
            _check_output_name(scn.get("output"), f"{where}.output", diags)
    return diags


def validate(config_path) -> list[str]:
    """Read and schema-check a config file; I/O errors propagate."""
    with open(config_path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            return [f"config: invalid JSON ({exc})"]
    return validate_config(doc)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def _atomic_write(out_dir: str, name: str, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, os.path.join(out_dir, name))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _context_from(scn) -> Any:
    c = scn["context"]
    return make_context(
        mass=c["mass"], energy=c["energy"], charge=c["charge"],
        b_field=c["b_field"], spin_tag=c["spin"], s_z=c["s_z"],
    )


def _grid_from(scn) -> TransverseGrid:
    g = scn["grid"]
    return TransverseGrid(nx=g["nx"], ny=g["ny"], dx=g["dx"], dy=g["dy"])


def _mode_request_from(req) -> ModeRequest:
    kwargs = {k: v for k, v in req.items() if k in _MODE_KEYS}
    return ModeRequest(**kwargs)


def _basis_from(scn) -> BasisBounds:
    basis = scn.get("basis")
    if basis is None:
        return BasisBounds(8, -8, 8)
    return BasisBounds(basis["n_max"], basis["l_min"], basis["l_max"])


def _csv_bytes(write_fn: Callable[[io.StringIO], None]) -> bytes:
    buf = io.StringIO()
    write_fn(buf)
    return buf.getvalue().encode()


def _run_dispersion_table(scn, out_dir: str) -> str:
    context = _context_from(scn)
    kappas = np.linspace(
        scn.get("kappa_min", 0.0), scn["kappa_max"], scn["num"]
    )
    records = free_dispersion_table(kappas, context.carrier_k)
    _atomic_write(out_dir, scn["output"],
                  _csv_bytes(lambda fh: write_dispersion_csv(records, fh)))
    return f"{len(records)} rows, k={context.carrier_k:.6g}"


def _run_landau_spectrum(scn, out_dir: str) -> str:
    context = _context_from(scn)
    indices = [
        LandauIndex(n=n, l=l, s_z=context.spin_projection)
        for n in range(scn["n_max"] + 1)
        for l in range(scn["l_min"], scn["l_max"] + 1)
    ]
    records = landau_dispersion_table(indices, context)
    _atomic_write(out_dir, scn["output"],
                  _csv_bytes(lambda fh: write_dispersion_csv(records, fh)))
    return f"{len(records)} modes, eB={context.eb:.6g}"


def _initial_state(scn) -> BeamState:
    context = _context_from(scn)
    grid = _grid_from(scn)
    return generate(_mode_request_from(scn["initial"]), grid, context)


def _run_propagate(scn, out_dir: str) -> str:
    state0 = _initial_state(scn)
    variant = scn.get("variant", "exact")
    magnetic = state0.context.eb != 0.0
    bounds = _basis_from(scn)
    residual_tol = scn.get("residual_tol", 1e-6)
    rows = []
    snapshots = []
    for z in scn["z_values"]:
        dz = float(z) - state0.z
        if magnetic:
            state = propagate_magnetic(state0, dz, variant, bounds, residual_tol)
        else:
            state = propagate_free(state0, dz, variant)
        obs = observables(state)
        rows.append((float(z), obs))
        if "snapshot_prefix" in scn:
            snapshots.append((z, snapshot_to_bytes(state)))

    def write_obs(fh):
        import csv as _csv

        w = _csv.writer(fh)
        w.writerow(("z", "norm", "centroid_x", "centroid_y", "rms_radius", "oam_mean"))
        for z, obs in rows:
            w.writerow([
                f"{z:.17g}", f"{obs.norm:.17g}",
                f"{obs.centroid[0]:.17g}", f"{obs.centroid[1]:.17g}",
                f"{obs.rms_radius:.17g}", f"{obs.oam_mean:.17g}",
            ])

    _atomic_write(out_dir, scn["output"], _csv_bytes(write_obs))
    for i, (_, blob) in enumerate(snapshots):
        _atomic_write(out_dir, f"{scn['snapshot_prefix']}_{i:03d}.xbeam", blob)
    last = rows[-1][1]
    return (
        f"{len(rows)} samples, final norm={last.norm:.6g} "
        f"rms={last.rms_radius:.6g}"
    )


def _run_compare(scn, out_dir: str) -> str:
    state0 = _initial_state(scn)
    medium = "magnetic" if state0.context.eb != 0.0 else "free"
    rows = compare_variants(
        state0,
        [float(z) for z in scn["z_values"]],
        medium=medium,
        basis_bounds=_basis_from(scn),
        residual_tol=scn.get("residual_tol", 1e-6),
    )
    _atomic_write(out_dir, scn["output"],
                  _csv_bytes(lambda fh: write_comparison_csv(rows, fh)))
    return f"{len(rows)} samples, max l2 distance={max(r.l2_distance for r in rows):.6g}"


_RUNNERS = {
    "dispersion_table": _run_dispersion_table,
    "propagate": _run_propagate,
    "compare": _run_compare,
    "landau_spectrum": _run_landau_spectrum,
}


@dataclass
class _Outcome:
    name: str
    kind: str
    status: str
    detail: str


def _execute(scn, out_dir: str) -> _Outcome:
    try:
        detail = _RUNNERS[scn["kind"]](scn, out_dir)
        return _Outcome(scn["name"], scn["kind"], "ok", detail)
    except Exception as exc:
        return _Outcome(scn["name"], scn["kind"], "error", str(exc))


def run(config_path, out_dir, threads: int = 1, stream=None) -> int:
    """Execute a scenario config; returns the process exit status."""
    stream = stream if stream is not None else sys.stdout
    try:
        with open(config_path, "r") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON ({exc})", file=stream)
        return 1
    diags = validate_config(doc)
    if diags:
        for d in diags:
            print(f"config error: {d}", file=stream)
        return 1

    os.makedirs(out_dir, exist_ok=True)
    scenarios = doc["scenarios"]
    if threads > 1 and len(scenarios) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda s: _execute(s, out_dir), scenarios))
    else:
        outcomes = [_execute(s, out_dir) for s in scenarios]

    print(f"{len(scenarios)} scenarios", file=stream)
    failed = False
    for oc in outcomes:  # config order regardless of completion order
        print(f"  {oc.name:<24} {oc.kind:<18} {oc.status:<6} {oc.detail}", file=stream)
        if oc.status != "ok":
            failed = True
    return 2 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="xbeam",
        description="Exact and paraxial beam propagation scenario runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config", help="path to the JSON config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument(
        "--threads", type=int, default=1,
        help="parallelism hint; never changes results",
    )

    p_val = sub.add_parser("validate", help="schema-check a config, no computation")
    p_val.add_argument("config", help="path to the JSON config")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, args.out, threads=args.threads)
    diags = validate(args.config)
    for d in diags:
        print(d)
    return 0 if not diags else 1


if __name__ == "__main__":
    sys.exit(main())
