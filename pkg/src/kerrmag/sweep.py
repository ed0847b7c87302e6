"""Grid sweeps of the steady-state pipeline with tabular output.

Two modes: ``physical`` solves the mean field at every grid point and
derives (G, F) from the chosen branch; ``direct`` treats (G, F) as
primitive inputs, the parameterization used for coupling-plane maps.
Every grid point is an independent pure evaluation, so results do not
depend on evaluation order, and repeated runs emit identical bytes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from . import dynamics, entanglement, meanfield, steadystate
from .errors import ConfigError, ConvergenceError, InvalidParameterError, MultistabilityError
from .params import TWO_PI, PAIR_KEYS, SystemParams

log = logging.getLogger(__name__)

SCHEMA = "kerrmag.sweep/1"

# Sweepable parameter names per mode.  Direct mode prescribes the
# couplings, so drive and Kerr axes are meaningless there; physical
# mode derives the couplings, so G/F axes are excluded in turn.
DIRECT_AXES = (
    "G", "F", "G1", "F1", "G2", "F2",
    "delta_c", "delta_m", "delta_m1", "delta_m2",
    "g", "g1", "g2",
    "gamma_c", "gamma_m", "gamma_m1", "gamma_m2",
    "temperature",
)
PHYSICAL_AXES = (
    "power", "rabi",
    "delta_c", "delta_m", "delta_m1", "delta_m2",
    "g", "g1", "g2",
    "gamma_c", "gamma_m", "gamma_m1", "gamma_m2",
    "kerr", "kerr1", "kerr2",
    "temperature",
)

BRANCH_POLICIES = ("lowest-amplitude", "highest-amplitude", "error", "skip")

# Output groups in emission order; each expands to one or more columns.
OUTPUT_COLUMNS = {
    "stability": ("stable", "max_re_lambda"),
    "E_m1m2": ("E_m1m2",),
    "E_m1a": ("E_m1a",),
    "E_m2a": ("E_m2a",),
    "nu_minus": ("nu_minus",),
    "epsilon": ("epsilon1", "epsilon2"),
    "optimality_gap": ("optimality_gap1", "optimality_gap2"),
    "amplitudes": ("abs_m1", "abs_m2", "abs_a"),
}
_OUTPUT_ORDER = tuple(OUTPUT_COLUMNS)


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: parameter name and an inclusive linear grid."""

    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count < 2:
            raise InvalidParameterError(f"axis count must be an integer >= 2, got {self.count!r}")
        for label, v in (("start", self.start), ("stop", self.stop)):
            if not np.isfinite(v):
                raise InvalidParameterError(f"axis {label} must be finite, got {v!r}")
        if self.start == self.stop:
            raise InvalidParameterError(f"axis {self.name!r} is degenerate: start == stop")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(float(v) for v in np.linspace(self.start, self.stop, self.count))


@dataclass(frozen=True)
class SweepSpec:
    """Full description of one sweep: mode, axes, base point, policy, outputs."""

    mode: str
    axis1: AxisSpec
    axis2: AxisSpec | None
    fixed: SystemParams
    branch_policy: str = "error"
    outputs: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("direct", "physical"):
            raise InvalidParameterError(f"mode must be 'direct' or 'physical', got {self.mode!r}")
        if self.branch_policy not in BRANCH_POLICIES:
            raise InvalidParameterError(
                f"branch_policy must be one of {BRANCH_POLICIES}, got {self.branch_policy!r}"
            )
        whitelist = DIRECT_AXES if self.mode == "direct" else PHYSICAL_AXES
        for axis in self.axes:
            if axis.name not in whitelist:
                raise InvalidParameterError(
                    f"axis {axis.name!r} is not sweepable in {self.mode} mode "
                    f"(allowed: {', '.join(whitelist)})"
                )
        if self.axis2 is not None and set(_singles(self.axis1.name)) & set(_singles(self.axis2.name)):
            raise InvalidParameterError(
                f"axes {self.axis1.name!r} and {self.axis2.name!r} overlap"
            )
        if self.outputs is not None:
            for name in self.outputs:
                if name not in OUTPUT_COLUMNS:
                    raise InvalidParameterError(
                        f"unknown output {name!r} (allowed: {', '.join(OUTPUT_COLUMNS)})"
                    )
            if len(set(self.outputs)) != len(self.outputs):
                raise InvalidParameterError("outputs contain duplicates")
            if self.mode == "direct" and "amplitudes" in self.outputs:
                raise InvalidParameterError(
                    "amplitudes are not defined in direct mode (no mean-field solve)"
                )
        if self.mode == "direct":
            covered = set()
            if self.fixed.has_direct_couplings:
                covered |= {"G1", "F1", "G2", "F2"}
            for axis in self.axes:
                covered |= set(_singles(axis.name))
            missing = {"G1", "F1", "G2", "F2"} - covered
            if missing:
                raise InvalidParameterError(
                    f"direct mode needs G and F for both magnons; missing {sorted(missing)} "
                    "(set them in the base parameters or sweep them)"
                )

    @property
    def axes(self) -> tuple[AxisSpec, ...]:
        return (self.axis1,) if self.axis2 is None else (self.axis1, self.axis2)

    @property
    def resolved_outputs(self) -> tuple[str, ...]:
        if self.outputs is None:
            if self.mode == "direct":
                return tuple(n for n in _OUTPUT_ORDER if n != "amplitudes")
            return _OUTPUT_ORDER
        return tuple(n for n in _OUTPUT_ORDER if n in self.outputs)

    @property
    def columns(self) -> tuple[str, ...]:
        cols = [axis.name for axis in self.axes]
        for name in self.resolved_outputs:
            cols.extend(OUTPUT_COLUMNS[name])
        cols.append("status")
        return tuple(cols)


@dataclass(frozen=True)
class SweepResult:
    """Evaluated sweep: axis grids plus one row per grid point, row-major."""

    mode: str
    branch_policy: str
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


def _singles(name: str) -> tuple[str, ...]:
    return PAIR_KEYS.get(name, (name,))


def _pipeline(
    c1: meanfield.EffectiveCouplings,
    c2: meanfield.EffectiveCouplings,
    params: SystemParams,
) -> tuple[str, dict]:
    """Drift, stability, covariance, entanglement for given couplings."""
    model = dynamics.build_drift(c1, c2, params)
    cols: dict = {
        "stable": model.stable,
        "max_re_lambda": float(np.max(model.eigenvalues_A.real)),
    }
    for idx, c in ((1, c1), (2, c2)):
        eps = dynamics.bogoliubov(c).epsilon
        gap = eps + params.delta_c
        real = not isinstance(eps, complex)
        cols[f"epsilon{idx}"] = float(eps) if real else None
        cols[f"optimality_gap{idx}"] = float(gap) if real else None
    if not model.stable:
        return "unstable", cols
    cm = steadystate.solve_lyapunov(model)
    pairs = entanglement.all_pairs(cm)
    by_name = {
        (p.first.value, p.second.value): r for p, r in pairs.items()
    }
    r12 = by_name[("magnon1", "magnon2")]
    cols["E_m1m2"] = r12.e_n
    cols["nu_minus"] = r12.nu_minus
    cols["E_m1a"] = by_name[("magnon1", "cavity")].e_n
    cols["E_m2a"] = by_name[("magnon2", "cavity")].e_n
    return "ok", cols


def evaluate_point(spec: SweepSpec, values: tuple[float, ...]) -> tuple:
    """Evaluate one grid point; returns the full row for spec.columns.

    Pure function of (spec, values): the sweep loop is just a map over
    the grid, and evaluation order cannot matter.
    """
    if len(values) != len(spec.axes):
        raise InvalidParameterError(
            f"expected {len(spec.axes)} coordinate(s), got {len(values)}"
        )
    changes = {axis.name: float(v) for axis, v in zip(spec.axes, values)}
    params = spec.fixed.replace(**changes)
    cols: dict = {}
    if spec.mode == "direct":
        c1 = meanfield.direct_couplings(params.G1, params.F1, params.delta_m1)
        c2 = meanfield.direct_couplings(params.G2, params.F2, params.delta_m2)
        status, cols = _pipeline(c1, c2, params)
    else:
        status, cols = _physical_point(spec, params, changes)
    row = list(values)
    for name in spec.columns[len(values):-1]:
        row.append(cols.get(name))
    row.append(status)
    return tuple(row)


def _physical_point(spec: SweepSpec, params: SystemParams, coords: dict) -> tuple[str, dict]:
    try:
        roots = meanfield.solve_meanfield(params)
    except ConvergenceError:
        return "no-root", {}
    stable = [r for r in roots if r.stable]
    if len(stable) > 1:
        if spec.branch_policy == "error":
            raise MultistabilityError(
                f"{len(stable)} stable branches at {coords!r}", coordinates=dict(coords)
            )
        if spec.branch_policy == "skip":
            return "multistable-skipped", {}
        pick = min if spec.branch_policy == "lowest-amplitude" else max
        amp = pick(stable, key=lambda r: abs(r.m1) ** 2 + abs(r.m2) ** 2)
    elif stable:
        amp = stable[0]
    else:
        # No stable branch: report diagnostics of the lowest-amplitude
        # root so the map stays annotated through unstable regions.
        amp = min(roots, key=lambda r: abs(r.m1) ** 2 + abs(r.m2) ** 2)
    c1 = meanfield.effective_couplings(amp, params, 1)
    c2 = meanfield.effective_couplings(amp, params, 2)
    status, cols = _pipeline(c1, c2, params)
    cols["abs_m1"] = abs(amp.m1)
    cols["abs_m2"] = abs(amp.m2)
    cols["abs_a"] = abs(amp.a)
    return status, cols


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate the whole grid, axis1 outer, axis2 inner (row-major).

    Raises
    ------
    MultistabilityError
        Under ``branch_policy='error'`` when any grid point has more
        than one stable mean-field branch; carries the coordinates.
    """
    grids = [axis.values for axis in spec.axes]
    points = (
        [(v,) for v in grids[0]]
        if len(grids) == 1
        else [(v1, v2) for v1 in grids[0] for v2 in grids[1]]
    )
    rows = tuple(evaluate_point(spec, pt) for pt in points)
    n_ok = sum(1 for r in rows if r[-1] == "ok")
    log.info("sweep: %d points, %d ok", len(rows), n_ok)
    return SweepResult(
        mode=spec.mode,
        branch_policy=spec.branch_policy,
        axes=tuple((axis.name, axis.values) for axis in spec.axes),
        columns=spec.columns,
        rows=rows,
    )


_PLAIN_COLUMNS = frozenset(
    ["E_m1m2", "E_m1a", "E_m2a", "nu_minus", "abs_m1", "abs_m2", "abs_a", "stable", "status"]
)


def _csv_column(name: str) -> tuple[str, float | None]:
    """CSV header name and value scale for one column.

    File headers quote frequency-like quantities in the X/2pi
    convention for comparability with common lab units; internal values
    stay rad/s everywhere else.
    """
    if name in _PLAIN_COLUMNS:
        return name, None
    if name == "power":
        return "power_W", 1.0
    if name == "rabi":
        return "rabi_rad_per_s", 1.0
    if name == "temperature":
        return "temperature_K", 1.0
    if name in ("kerr", "kerr1", "kerr2"):
        return f"{name}_over_2pi_Hz", 1.0 / TWO_PI
    return f"{name}_over_2pi_MHz", 1.0 / (TWO_PI * 1e6)


def _csv_cell(value, scale) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if scale is not None:
        value = float(value) * scale
    return repr(float(value))


def emit_table(result: SweepResult, format: str) -> bytes:
    """Serialize a sweep result to CSV or JSON bytes.

    CSV carries converted human-friendly units in its header names and
    is export-only; JSON keeps internal units and round-trips through
    :func:`load_table` exactly.
    """
    if format == "csv":
        header = []
        scales = []
        for name in result.columns:
            csv_name, scale = _csv_column(name)
            header.append(csv_name)
            scales.append(scale)
        lines = [",".join(header)]
        for row in result.rows:
            lines.append(",".join(_csv_cell(v, s) for v, s in zip(row, scales)))
        return ("\n".join(lines) + "\n").encode()
    if format == "json":
        payload = {
            "schema": SCHEMA,
            "units": {"frequency": "rad/s", "power": "W", "temperature": "K"},
            "mode": result.mode,
            "branch_policy": result.branch_policy,
            "axes": [{"name": n, "values": list(vs)} for n, vs in result.axes],
            "columns": list(result.columns),
            "rows": [list(row) for row in result.rows],
        }
        return json.dumps(payload, allow_nan=False, indent=1).encode()
    raise InvalidParameterError(f"format must be 'csv' or 'json', got {format!r}")


def load_table(data: bytes | str) -> SweepResult:
    """Rebuild a SweepResult from emit_table's JSON output."""
    if isinstance(data, bytes):
        data = data.decode()
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid sweep JSON: {exc}") from None
    schema = payload.get("schema") if isinstance(payload, dict) else None
    if schema != SCHEMA:
        raise ConfigError(f"unsupported sweep schema {schema!r}")
    return SweepResult(
        mode=payload["mode"],
        branch_policy=payload["branch_policy"],
        axes=tuple((a["name"], tuple(a["values"])) for a in payload["axes"]),
        columns=tuple(payload["columns"]),
        rows=tuple(tuple(row) for row in payload["rows"]),
    )
