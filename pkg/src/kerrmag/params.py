"""Physical constants, unit conversions, and configuration handling.

Unit convention, binding for the whole package: every frequency, rate,
coupling, and detuning held in memory is an angular quantity in rad/s.
Configuration files may quote values in the "X/2pi" style (key suffix
``_over_2pi_GHz`` and friends) or directly in rad/s (suffix
``_rad_per_s``); conversion happens exactly once, on load.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path

import scipy.constants
import yaml

from .errors import ConfigError, InvalidParameterError, UnsupportedOperationError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# Relative tolerance for cross-checks between absolute frequencies and
# detunings supplied together, and between power and Rabi drive values.
CONSISTENCY_RTOL = 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental and material constants used by the conversion formulas.

    The gyromagnetic ratio is locked to gamma/2pi = 28 GHz/T; the spin
    density default is the ferrum-ion density of YIG and the spin per
    site is 5/2 for Fe3+.
    """

    hbar: float = scipy.constants.hbar
    k_boltzmann: float = scipy.constants.k
    mu0: float = scipy.constants.mu_0
    gyromagnetic_ratio: float = TWO_PI * 28e9
    spin_density: float = 4.22e27
    spin_per_site: float = 2.5

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidParameterError(f"{f.name} must be finite and positive, got {v!r}")
        if abs(self.gyromagnetic_ratio / (TWO_PI * 28e9) - 1.0) > 1e-9:
            raise InvalidParameterError(
                "gyromagnetic_ratio must correspond to gamma/2pi = 28 GHz/T"
            )


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class SphereSpec:
    """Geometry and material data of one magnetic sphere.

    Parameters
    ----------
    diameter : float
        Sphere diameter in m.
    spin_density : float
        Density of magnetic ions in m^-3.
    anisotropy_constant : float, optional
        First-order magnetocrystalline anisotropy constant in J/m^3.
        Needed only by :func:`kerr_coefficient`.
    saturation_magnetization : float, optional
        Saturation magnetization in A/m.  Needed only by
        :func:`kerr_coefficient`.
    """

    diameter: float
    spin_density: float = 4.22e27
    anisotropy_constant: float | None = None
    saturation_magnetization: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.diameter) and self.diameter > 0.0):
            raise InvalidParameterError(f"diameter must be positive, got {self.diameter!r}")
        if not (math.isfinite(self.spin_density) and self.spin_density > 0.0):
            raise InvalidParameterError(
                f"spin_density must be positive, got {self.spin_density!r}"
            )
        if self.anisotropy_constant is not None and not math.isfinite(self.anisotropy_constant):
            raise InvalidParameterError("anisotropy_constant must be finite")
        if self.saturation_magnetization is not None and not (
            math.isfinite(self.saturation_magnetization) and self.saturation_magnetization > 0.0
        ):
            raise InvalidParameterError("saturation_magnetization must be positive")

    @property
    def volume(self) -> float:
        """Sphere volume (pi/6) d^3 in m^3."""
        return math.pi / 6.0 * self.diameter**3


def rabi_from_power(power: float, gamma_c: float, omega_d: float) -> float:
    """Rabi frequency of the cavity drive, Omega = sqrt(2 P gamma_c / (hbar omega_d)).

    Parameters
    ----------
    power : float
        Drive power in W.
    gamma_c : float
        Cavity leakage rate in rad/s.
    omega_d : float
        Drive angular frequency in rad/s.

    Returns
    -------
    float
        Rabi frequency in rad/s.
    """
    for name, v in (("power", power), ("gamma_c", gamma_c), ("omega_d", omega_d)):
        if not math.isfinite(v) or v < 0.0:
            raise InvalidParameterError(f"{name} must be finite and non-negative, got {v!r}")
    if omega_d <= 0.0:
        raise InvalidParameterError("omega_d must be positive")
    return math.sqrt(2.0 * power * gamma_c / (DEFAULT_CONSTANTS.hbar * omega_d))


def power_from_rabi(rabi: float, gamma_c: float, omega_d: float) -> float:
    """Drive power in W for a given Rabi frequency; inverse of :func:`rabi_from_power`."""
    for name, v in (("rabi", rabi), ("gamma_c", gamma_c), ("omega_d", omega_d)):
        if not math.isfinite(v) or v < 0.0:
            raise InvalidParameterError(f"{name} must be finite and non-negative, got {v!r}")
    if omega_d <= 0.0:
        raise InvalidParameterError("omega_d must be positive")
    if gamma_c <= 0.0:
        raise InvalidParameterError("gamma_c must be positive")
    return rabi**2 * DEFAULT_CONSTANTS.hbar * omega_d / (2.0 * gamma_c)


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation n = 1/(exp(hbar omega / kB T) - 1).

    Exactly 0.0 at zero temperature.  Evaluated as exp(-x)/(1 - exp(-x))
    so large hbar*omega/(kB*T) underflows to zero instead of overflowing.
    """
    if not math.isfinite(omega) or omega <= 0.0:
        raise InvalidParameterError(f"omega must be positive, got {omega!r}")
    if not math.isfinite(temperature) or temperature < 0.0:
        raise InvalidParameterError(f"temperature must be non-negative, got {temperature!r}")
    if temperature == 0.0:
        return 0.0
    x = DEFAULT_CONSTANTS.hbar * omega / (DEFAULT_CONSTANTS.k_boltzmann * temperature)
    em = math.exp(-x)
    return em / (-math.expm1(-x))


def spin_count(
    sphere: SphereSpec, constants: PhysicalConstants = DEFAULT_CONSTANTS
) -> tuple[float, float]:
    """Number of spin sites in a sphere and the magnon-number validity bound.

    Returns
    -------
    n_sites : float
        N = rho * V.
    magnon_bound : float
        2 N s; the linearization is trusted only while <m+ m> stays far
        below this (5N for s = 5/2).
    """
    n_sites = sphere.spin_density * sphere.volume
    return n_sites, 2.0 * n_sites * constants.spin_per_site


def kerr_coefficient(
    sphere: SphereSpec, constants: PhysicalConstants = DEFAULT_CONSTANTS
) -> float:
    """Kerr self-interaction coefficient mu0 K_an gamma^2 / (M^2 V) in rad/s.

    Raises
    ------
    UnsupportedOperationError
        If the sphere lacks ``anisotropy_constant`` or
        ``saturation_magnetization``; supply the Kerr coefficient
        directly in that case.
    """
    if sphere.anisotropy_constant is None or sphere.saturation_magnetization is None:
        raise UnsupportedOperationError(
            "kerr_coefficient needs anisotropy_constant and saturation_magnetization"
        )
    return (
        constants.mu0
        * sphere.anisotropy_constant
        * constants.gyromagnetic_ratio**2
        / (sphere.saturation_magnetization**2 * sphere.volume)
    )


@dataclass(frozen=True)
class SystemParams:
    """All physical inputs of the two-magnon, one-cavity model, in rad/s.

    Absolute frequencies and detunings are stored together and must be
    mutually consistent: delta_ms = omega_ms - omega_d and
    delta_c = omega_c - omega_d to relative 1e-9.  Exactly one of the
    drive quantities (power, rabi) is primary, named by ``drive_given``;
    the other is derived.

    G1/F1/G2/F2 are optional direct squeezing couplings (rad/s).  When
    all four are set, the linearized dynamics can be built without a
    mean-field solve; this is the entry point for coupling-plane studies.
    """

    omega_m1: float
    omega_m2: float
    omega_c: float
    omega_d: float
    delta_m1: float
    delta_m2: float
    delta_c: float
    g1: float
    g2: float
    gamma_m1: float
    gamma_m2: float
    gamma_c: float
    kerr1: float
    kerr2: float
    temperature: float
    power: float
    rabi: float
    drive_given: str = "power"
    G1: float | None = None
    F1: float | None = None
    G2: float | None = None
    F2: float | None = None

    def __post_init__(self):
        for name in (
            "omega_m1", "omega_m2", "omega_c", "omega_d",
            "delta_m1", "delta_m2", "delta_c",
            "g1", "g2", "gamma_m1", "gamma_m2", "gamma_c",
            "kerr1", "kerr2", "temperature", "power", "rabi",
        ):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be a finite number, got {v!r}")
        for name in ("omega_m1", "omega_m2", "omega_c", "omega_d"):
            if getattr(self, name) <= 0.0:
                raise InvalidParameterError(f"{name} must be positive")
        for name in ("g1", "g2", "temperature", "power", "rabi"):
            if getattr(self, name) < 0.0:
                raise InvalidParameterError(f"{name} must be non-negative")
        for name in ("gamma_m1", "gamma_m2", "gamma_c"):
            if getattr(self, name) <= 0.0:
                raise InvalidParameterError(f"{name} must be strictly positive")
        if self.drive_given not in ("power", "rabi"):
            raise InvalidParameterError(f"drive_given must be 'power' or 'rabi', got {self.drive_given!r}")
        _check_consistent("delta_m1", self.delta_m1, self.omega_m1 - self.omega_d,
                          max(self.omega_m1, self.omega_d))
        _check_consistent("delta_m2", self.delta_m2, self.omega_m2 - self.omega_d,
                          max(self.omega_m2, self.omega_d))
        _check_consistent("delta_c", self.delta_c, self.omega_c - self.omega_d,
                          max(self.omega_c, self.omega_d))
        _check_consistent("rabi", self.rabi,
                          rabi_from_power(self.power, self.gamma_c, self.omega_d),
                          scale=max(self.rabi, 1.0))
        direct = (self.G1, self.F1, self.G2, self.F2)
        given = [v is not None for v in direct]
        if any(given) and not all(given):
            raise InvalidParameterError("direct couplings G1, F1, G2, F2 must be set together")
        for name, v in zip(("G1", "F1", "G2", "F2"), direct):
            if v is not None and not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite, got {v!r}")

    @property
    def has_direct_couplings(self) -> bool:
        return self.G1 is not None

    def replace(self, **changes) -> "SystemParams":
        """Return a copy with the given canonical quantities changed.

        Change semantics keep the quantities a sweep means to hold
        fixed: setting ``delta_c`` moves the cavity, not the drive;
        setting ``delta_m1`` (or ``delta_m2``) moves that magnon with
        the drive frequency pinned; setting an absolute frequency
        re-derives the detunings it determines.  Setting ``power`` or
        ``rabi`` switches the primary drive quantity.  Pair shorthands
        (``g``, ``delta_m``, ``gamma_m``, ``kerr``, ``omega_m``, ``G``,
        ``F``) set both magnons at once.
        """
        canon: dict[str, float] = {}
        for name, value in changes.items():
            targets = PAIR_KEYS.get(name, (name,))
            for t in targets:
                if t not in _REPLACEABLE:
                    raise InvalidParameterError(f"unknown parameter {name!r}")
                if t in canon:
                    raise InvalidParameterError(f"parameter {t!r} set twice")
                canon[t] = value

        given: dict[str, float] = {
            "omega_m1": self.omega_m1, "omega_m2": self.omega_m2,
            "delta_m1": self.delta_m1, "delta_m2": self.delta_m2,
            "delta_c": self.delta_c,
            "g1": self.g1, "g2": self.g2,
            "gamma_m1": self.gamma_m1, "gamma_m2": self.gamma_m2,
            "gamma_c": self.gamma_c,
            "kerr1": self.kerr1, "kerr2": self.kerr2,
            "temperature": self.temperature,
            self.drive_given: getattr(self, self.drive_given),
        }
        if self.has_direct_couplings:
            given.update(G1=self.G1, F1=self.F1, G2=self.G2, F2=self.F2)

        # Each rule removes the quantities the change re-derives and
        # anchors the ones it means to hold fixed.
        if "omega_d" in canon:
            for k in ("delta_m1", "delta_m2", "delta_c"):
                given.pop(k, None)
            if "delta_c" not in canon:
                given["omega_c"] = self.omega_c
        if "omega_c" in canon:
            given.pop("delta_c", None)
        for idx in ("1", "2"):
            om, dm = f"omega_m{idx}", f"delta_m{idx}"
            if om in canon and dm not in canon:
                given.pop(dm, None)
                given.setdefault("omega_d", self.omega_d)
            elif dm in canon and om not in canon:
                given.pop(om, None)
                given.setdefault("omega_d", self.omega_d)
        if "power" in canon:
            given.pop("rabi", None)
        if "rabi" in canon:
            given.pop("power", None)
        given.update(canon)
        return resolve_params(given)

    def as_mapping(self) -> dict[str, float | str]:
        """Canonical flat mapping of this parameter set, config-schema keys.

        All frequency-like values are written in rad/s; only the primary
        drive quantity is included.  ``load_config`` on the serialized
        form reproduces every field bit for bit.
        """
        out: dict[str, float | str] = {
            "omega_m1_rad_per_s": self.omega_m1,
            "omega_m2_rad_per_s": self.omega_m2,
            "omega_c_rad_per_s": self.omega_c,
            "omega_d_rad_per_s": self.omega_d,
            "delta_m1_rad_per_s": self.delta_m1,
            "delta_m2_rad_per_s": self.delta_m2,
            "delta_c_rad_per_s": self.delta_c,
            "g1_rad_per_s": self.g1,
            "g2_rad_per_s": self.g2,
            "gamma_m1_rad_per_s": self.gamma_m1,
            "gamma_m2_rad_per_s": self.gamma_m2,
            "gamma_c_rad_per_s": self.gamma_c,
            "kerr1_rad_per_s": self.kerr1,
            "kerr2_rad_per_s": self.kerr2,
            "temperature_K": self.temperature,
        }
        if self.drive_given == "power":
            out["drive_power_W"] = self.power
        else:
            out["drive_rabi_rad_per_s"] = self.rabi
        if self.has_direct_couplings:
            out["G1_rad_per_s"] = self.G1
            out["F1_rad_per_s"] = self.F1
            out["G2_rad_per_s"] = self.G2
            out["F2_rad_per_s"] = self.F2
        return out


def _check_consistent(name: str, given: float, derived: float, scale: float) -> None:
    if abs(given - derived) > CONSISTENCY_RTOL * max(abs(scale), 1.0):
        raise ConfigError(
            f"inconsistent {name}: given {given!r}, derived {derived!r} "
            f"(relative tolerance {CONSISTENCY_RTOL})"
        )


# Key grammar: <base><suffix>.  Frequency-like bases take any suffix in
# _FREQ_SUFFIXES; the special keys carry their unit in the name.
_FREQ_SUFFIXES = {
    "_over_2pi_GHz": TWO_PI * 1e9,
    "_over_2pi_MHz": TWO_PI * 1e6,
    "_over_2pi_kHz": TWO_PI * 1e3,
    "_over_2pi_Hz": TWO_PI,
    "_over_2pi_mHz": TWO_PI * 1e-3,
    "_over_2pi_uHz": TWO_PI * 1e-6,
    "_rad_per_s": 1.0,
}

_FREQ_BASES = (
    "omega_m1", "omega_m2", "omega_m", "omega_c", "omega_d",
    "delta_m1", "delta_m2", "delta_m", "delta_c",
    "g1", "g2", "g",
    "gamma_m1", "gamma_m2", "gamma_m", "gamma_c",
    "kerr1", "kerr2", "kerr",
    "G1", "G2", "G", "F1", "F2", "F",
)

PAIR_KEYS = {
    "omega_m": ("omega_m1", "omega_m2"),
    "delta_m": ("delta_m1", "delta_m2"),
    "g": ("g1", "g2"),
    "gamma_m": ("gamma_m1", "gamma_m2"),
    "kerr": ("kerr1", "kerr2"),
    "G": ("G1", "G2"),
    "F": ("F1", "F2"),
}

_SPECIAL_KEYS = {
    "temperature_K": ("temperature", 1.0),
    "temperature_mK": ("temperature", 1e-3),
    "drive_power_W": ("power", 1.0),
    "drive_power_mW": ("power", 1e-3),
    "drive_rabi_rad_per_s": ("rabi", 1.0),
}

_REPLACEABLE = frozenset(
    [b for b in _FREQ_BASES if b not in PAIR_KEYS] + ["temperature", "power", "rabi"]
)

_REQUIRED = (
    "g1", "g2", "gamma_m1", "gamma_m2", "gamma_c", "kerr1", "kerr2", "temperature",
)


def parse_key(key: str) -> tuple[str, float]:
    """Split a config key into (canonical base, conversion factor to internal units)."""
    if key in _SPECIAL_KEYS:
        return _SPECIAL_KEYS[key]
    for suffix, factor in _FREQ_SUFFIXES.items():
        if key.endswith(suffix):
            base = key[: -len(suffix)]
            if base in _FREQ_BASES:
                return base, factor
    raise ConfigError(f"unknown key {key!r}")


def resolve_params(given: dict[str, float]) -> SystemParams:
    """Build a validated SystemParams from canonical quantities.

    ``given`` maps canonical names (individual magnons, no pair
    shorthands) to values in internal units.  Each mode needs two of
    (absolute frequency, detuning, drive frequency); missing derivable
    quantities are filled in and over-determined sets are cross-checked
    at relative 1e-9.
    """
    g = dict(given)
    for name in _REQUIRED:
        if name not in g:
            raise ConfigError(f"missing required quantity {name!r}")

    if "omega_d" in g:
        omega_d = g["omega_d"]
    elif "omega_m1" in g and "delta_m1" in g:
        omega_d = g["omega_m1"] - g["delta_m1"]
    elif "omega_m2" in g and "delta_m2" in g:
        omega_d = g["omega_m2"] - g["delta_m2"]
    elif "omega_c" in g and "delta_c" in g:
        omega_c = g["omega_c"]
        omega_d = omega_c - g["delta_c"]
    else:
        raise ConfigError(
            "drive frequency underdetermined: give omega_d, or an absolute "
            "frequency together with its detuning"
        )

    def mode(om_key: str, dm_key: str, label: str) -> tuple[float, float]:
        if om_key in g:
            om = g[om_key]
            dm = g.get(dm_key, om - omega_d)
        elif dm_key in g:
            dm = g[dm_key]
            om = omega_d + dm
        else:
            raise ConfigError(f"{label} frequency underdetermined: give {om_key} or {dm_key}")
        return om, dm

    om1, delta_m1 = mode("omega_m1", "delta_m1", "magnon 1")
    om2, delta_m2 = mode("omega_m2", "delta_m2", "magnon 2")
    omega_c, delta_c = mode("omega_c", "delta_c", "cavity")

    has_power = "power" in g
    has_rabi = "rabi" in g
    if has_power == has_rabi:
        raise ConfigError("exactly one of drive power and drive rabi must be given")
    if has_power:
        power = g["power"]
        rabi = rabi_from_power(power, g["gamma_c"], omega_d)
        drive_given = "power"
    else:
        rabi = g["rabi"]
        power = power_from_rabi(rabi, g["gamma_c"], omega_d)
        drive_given = "rabi"

    return SystemParams(
        omega_m1=om1, omega_m2=om2, omega_c=omega_c, omega_d=omega_d,
        delta_m1=delta_m1, delta_m2=delta_m2, delta_c=delta_c,
        g1=g["g1"], g2=g["g2"],
        gamma_m1=g["gamma_m1"], gamma_m2=g["gamma_m2"], gamma_c=g["gamma_c"],
        kerr1=g["kerr1"], kerr2=g["kerr2"],
        temperature=g["temperature"],
        power=power, rabi=rabi, drive_given=drive_given,
        G1=g.get("G1"), F1=g.get("F1"), G2=g.get("G2"), F2=g.get("F2"),
    )


def params_from_mapping(mapping: dict, source_text: str | None = None) -> SystemParams:
    """Validate a flat key-value mapping against the schema and resolve it."""
    if not isinstance(mapping, dict):
        raise ConfigError("config must be a flat key-value mapping")
    canon: dict[str, float] = {}
    origin: dict[str, str] = {}
    for key in mapping:
        raw = mapping[key]
        try:
            base, factor = parse_key(str(key))
        except ConfigError as exc:
            raise ConfigError(f"{exc}{_line_context(source_text, str(key))}") from None
        if isinstance(raw, str):
            # YAML 1.1 resolves exponents without a sign (1.0e6) as
            # strings, so float-parseable strings are accepted here.
            try:
                raw = float(raw)
            except ValueError:
                pass
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(
                f"value of {key!r} must be a number, got {raw!r}"
                f"{_line_context(source_text, str(key))}"
            )
        value = float(raw) * factor
        for target in PAIR_KEYS.get(base, (base,)):
            if target in canon:
                raise ConfigError(
                    f"quantity {target!r} set more than once "
                    f"(keys {origin[target]!r} and {key!r})"
                )
            canon[target] = value
            origin[target] = str(key)
    params = resolve_params(canon)
    log.debug("resolved %d config keys", len(mapping))
    return params


def _line_context(source_text: str | None, key: str) -> str:
    if not source_text:
        return ""
    for lineno, line in enumerate(source_text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(key):
            return f" (line {lineno})"
    return ""


def load_config(path) -> SystemParams:
    """Load and validate a YAML config file; returns internal-unit parameters."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"{path} is empty")
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a key-value mapping")
    try:
        return params_from_mapping(data, source_text=text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dumps_config(params: SystemParams) -> str:
    """Serialize to the canonical config form; load_config inverts it exactly.

    Floats are written with repr, whose shortest round-trip decimal
    guarantees bit-identical values after reload.
    """
    lines = [f"{key}: {_format_value(value)}" for key, value in params.as_mapping().items()]
    return "\n".join(lines) + "\n"


def save_config(params: SystemParams, path) -> None:
    Path(path).write_text(dumps_config(params))


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def apply_overrides(params: SystemParams, overrides: dict[str, float | str]) -> SystemParams:
    """Apply schema-keyed overrides on top of an existing parameter set.

    Keys follow the config grammar; values may be strings (parsed as
    floats).  Overrides are re-validated exactly like config input.
    """
    changes: dict[str, float] = {}
    for key, raw in overrides.items():
        base, factor = parse_key(str(key))
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"override {key!r} needs a numeric value, got {raw!r}") from None
        if base in changes:
            raise ConfigError(f"override {key!r} conflicts with an earlier override")
        changes[base] = value * factor
    try:
        return params.replace(**changes)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
