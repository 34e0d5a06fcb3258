"""File formats for tensors, grid fields, certificates, flow configs, and reports.

All formats are JSON except the flow time series, which is CSV.  Complex
data is stored as [re, im] pairs in row-major index order.  Tensor files
carry raw entries; the loader projects them onto the bihermitian symmetry
class and reports how far the raw data sat from it.  Reports accumulate:
each run appends one record to the "runs" list of its output file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .extremes import Certificate
from .flow import DiagnosticsRow, FlowConfig, TwistSpec
from .forms import BihermitianForm, HermitianForm, symmetrize, validate_symmetries
from .grid import (
    DISCRETIZATIONS,
    MetricField,
    PeriodicGrid,
    ScalarField,
    scalar_from_modes,
)

__all__ = [
    "FLOW_CSV_COLUMNS",
    "FlowJob",
    "LoadedTensor",
    "append_report",
    "load_field",
    "load_flow_config",
    "load_json",
    "load_report",
    "load_tensor",
    "read_flow_csv",
    "save_certificate",
    "save_field",
    "save_json",
    "save_tensor",
    "write_flow_csv",
]

FLOW_CSV_COLUMNS = (
    "t",
    "sup_phidot",
    "inf_scalar_plus_tr_eta",
    "bound_volume_upper",
    "positivity_margin",
    "sup_G",
    "schwarz_min_margin",
)


def load_json(path) -> dict:
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ValueError(
            f"{path}: invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from err


def save_json(path, payload) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _complex_pairs(values: np.ndarray) -> list:
    flat = np.asarray(values, dtype=complex).ravel(order="C")
    return [[float(z.real), float(z.imag)] for z in flat]


def _complex_from_pairs(pairs, shape) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != int(np.prod(shape)):
        raise ValueError(f"expected {int(np.prod(shape))} [re, im] pairs")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


@dataclass
class LoadedTensor:
    """A tensor read from disk, after projection onto its symmetry class."""

    form: BihermitianForm | HermitianForm
    pre_projection_violation: float


def save_tensor(path, form: BihermitianForm | HermitianForm) -> None:
    kind = "hermitian" if isinstance(form, HermitianForm) else "bihermitian"
    save_json(
        path,
        {"kind": kind, "n": form.n, "entries": _complex_pairs(form.entries)},
    )


def load_tensor(path) -> LoadedTensor:
    data = load_json(path)
    try:
        n = int(data["n"])
        entries = data["entries"]
    except KeyError as err:
        raise ValueError(f"{path}: tensor file missing key {err}") from err
    count = len(entries)
    kind = data.get("kind")
    if kind is None:
        kind = {n * n: "hermitian", n**4: "bihermitian"}.get(count)
    if kind == "hermitian":
        raw = _complex_from_pairs(entries, (n, n))
        violation = float(np.max(np.abs(raw - raw.conj().T)))
        return LoadedTensor(
            form=HermitianForm(0.5 * (raw + raw.conj().T)),
            pre_projection_violation=violation,
        )
    if kind == "bihermitian":
        raw = _complex_from_pairs(entries, (n, n, n, n))
        violation = validate_symmetries(raw).max_violation
        return LoadedTensor(form=symmetrize(raw), pre_projection_violation=violation)
    raise ValueError(f"{path}: cannot determine tensor kind from {count} entries")


def save_field(path, field: ScalarField | MetricField) -> None:
    grid = field.grid
    header = {
        "n": grid.n,
        "N": grid.N,
        "discretization": grid.discretization,
    }
    if isinstance(field, ScalarField):
        header["kind"] = "scalar"
        header["values"] = [float(v) for v in field.values.ravel(order="C")]
    else:
        header["kind"] = "metric"
        header["values"] = _complex_pairs(field.values)
    save_json(path, header)


def load_field(path) -> ScalarField | MetricField:
    data = load_json(path)
    try:
        n, N, kind = int(data["n"]), int(data["N"]), data["kind"]
        values = data["values"]
    except KeyError as err:
        raise ValueError(f"{path}: field file missing key {err}") from err
    discretization = data.get("discretization", "fd2")
    if discretization not in DISCRETIZATIONS:
        raise ValueError(f"{path}: unknown discretization {discretization!r}")
    grid = PeriodicGrid(n, N, discretization)
    if kind == "scalar":
        arr = np.asarray(values, dtype=float).reshape(grid.shape)
        return ScalarField(grid, arr)
    if kind == "metric":
        arr = _complex_from_pairs(values, grid.shape + (n, n))
        return MetricField(grid, arr)
    raise ValueError(f"{path}: unknown field kind {kind!r}")


def save_certificate(path, cert: Certificate) -> None:
    witness = cert.witness
    save_json(
        path,
        {
            "status": cert.status,
            "value": cert.value,
            "bound": cert.bound,
            "margin": cert.margin,
            "k": cert.k,
            "n_converged": cert.n_converged,
            "iterations": cert.iterations,
            "witness": {
                "n": witness.n,
                "k": witness.k,
                "columns": _complex_pairs(witness.columns),
            },
        },
    )


def load_certificate(path) -> dict:
    data = load_json(path)
    witness = data.get("witness")
    if witness is not None:
        witness["columns"] = _complex_from_pairs(
            witness["columns"], (int(witness["n"]), int(witness["k"]))
        )
    return data


@dataclass
class FlowJob:
    """A parsed flow configuration plus the check tolerances riding with it."""

    config: FlowConfig
    mu: float | None
    checks: dict[str, float]
    source: Path


def _potential_from_spec(spec, grid: PeriodicGrid, base: Path) -> np.ndarray | None:
    """Inline Fourier mode list, file reference, or absent."""
    if spec is None:
        return None
    if isinstance(spec, dict) and "modes" in spec:
        modes = []
        for mode in spec["modes"]:
            wavevector = tuple(int(c) for c in mode["k"])
            amp = mode["amp"]
            amplitude = complex(amp[0], amp[1]) if isinstance(amp, list) else float(amp)
            modes.append((wavevector, amplitude))
        return scalar_from_modes(grid, modes)
    if isinstance(spec, dict) and "file" in spec:
        field = load_field(base / spec["file"])
        if not isinstance(field, ScalarField):
            raise ValueError(f"{spec['file']}: potential reference must be a scalar field")
        if field.grid != grid:
            raise ValueError(f"{spec['file']}: field grid does not match the flow grid")
        return field.values
    raise ValueError("potential spec must carry 'modes' or 'file'")


def load_flow_config(path, discretization: str | None = None) -> FlowJob:
    path = Path(path)
    data = load_json(path)
    try:
        grid_spec = data["grid"]
        grid = PeriodicGrid(
            int(grid_spec["n"]),
            int(grid_spec["N"]),
            discretization or grid_spec.get("discretization", "fd2"),
        )
    except KeyError as err:
        raise ValueError(f"{path}: flow config missing key {err}") from err
    twist_spec = data.get("twist", {})
    twist = TwistSpec(
        c=float(twist_spec.get("c", 0.0)),
        potential=_potential_from_spec(twist_spec.get("u"), grid, path.parent),
    )
    config = FlowConfig(
        grid=grid,
        background=_potential_from_spec(data.get("background"), grid, path.parent),
        twist=twist,
        t_final=float(data.get("t_end", 1.0)),
        dt_initial=float(data.get("dt", 1e-3)),
        diagnostics_every=int(data.get("cadence", 10)),
        alpha=float(data.get("alpha", 1.0)),
        beta=float(data.get("beta", 1.0)),
        sigma_init=data.get("sigma_init"),
    )
    mu = data.get("mu")
    checks = {str(k): float(v) for k, v in data.get("checks", {}).items()}
    return FlowJob(
        config=config,
        mu=None if mu is None else float(mu),
        checks=checks,
        source=path,
    )


def write_flow_csv(path, rows: list[DiagnosticsRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FLOW_CSV_COLUMNS)
        for row in rows:
            writer.writerow([repr(getattr(row, col)) for col in FLOW_CSV_COLUMNS])


def read_flow_csv(path) -> list[DiagnosticsRow]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != FLOW_CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {header}")
        return [
            DiagnosticsRow(**{col: float(cell) for col, cell in zip(header, line)})
            for line in reader
        ]


def append_report(path, record: dict) -> dict:
    """Append one run record to a report file; creates the file if needed."""
    path = Path(path)
    if path.exists():
        payload = load_json(path)
        if "runs" not in payload or not isinstance(payload["runs"], list):
            raise ValueError(f"{path}: existing file is not a report")
    else:
        payload = {"runs": []}
    payload["runs"].append(record)
    save_json(path, payload)
    return payload


def load_report(path) -> dict:
    payload = load_json(path)
    if "runs" not in payload:
        raise ValueError(f"{path}: not a report file")
    return payload
