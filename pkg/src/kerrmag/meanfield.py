"""Classical steady state of the driven Kerr system and effective couplings.

The steady amplitudes solve, with all time derivatives zero,

    0 = -(i delta_s + gamma_s) m_s - 2i K_s |m_s|^2 m_s - i g_s a
    0 = -(i delta_c + gamma_c) a - i (g1 m1 + g2 m2) + Omega

for s = 1, 2.  Roots are found by damped Newton iteration from a
deterministic lattice of starting points and deduplicated, so all
coexisting branches of the Kerr multistability are enumerated.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    InvalidParameterError,
    NumericalError,
    SingularityError,
)
from .params import SystemParams

log = logging.getLogger(__name__)

# Newton settings: deterministic multistart with step-halving damping.
# Starts whose line search exhausts twice in a row sit in a basin with
# no root (the iteration orbits a residual minimum); they are abandoned
# so grid scans stay fast near branch-disappearance points.
MAX_ITERATIONS = 100
LINE_SEARCH_DEPTH = 30
CONVERGENCE_TOL = 1e-12
RESIDUAL_RTOL = 1e-10
DEDUP_RTOL = 1e-6
_START_SCALES = (0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class EffectiveCouplings:
    """Squeezing couplings and shifted detuning of one magnon mode.

    G and F are the real and imaginary parts of 2 K <m>^2 (rad/s);
    delta_tilde is the detuning entering the fluctuation dynamics.
    """

    G: float
    F: float
    delta_tilde: float

    @property
    def Delta_tilde(self) -> complex:
        """Complex squeezing amplitude (G + iF)/2."""
        return complex(self.G, self.F) / 2.0


@dataclass(frozen=True)
class SteadyAmplitudes:
    """One steady-state branch: complex amplitudes, stability tag, residual.

    ``residual`` is the max norm of the steady-state equations at
    (m1, m2, a) relative to the largest single term; every instance must
    satisfy the solver tolerance.
    """

    m1: complex
    m2: complex
    a: complex
    stable: bool
    residual: float

    def __post_init__(self):
        if not (0.0 <= self.residual < RESIDUAL_RTOL):
            raise InvalidParameterError(
                f"steady-state residual {self.residual!r} exceeds {RESIDUAL_RTOL}"
            )

    @property
    def magnon_occupation(self) -> float:
        """Larger of the two coherent magnon occupations |<m_s>|^2."""
        return max(abs(self.m1) ** 2, abs(self.m2) ** 2)


def _residual_vector(z: np.ndarray, p: SystemParams) -> np.ndarray:
    m1, m2, a = z
    e1 = -(1j * p.delta_m1 + p.gamma_m1) * m1 - 2j * p.kerr1 * abs(m1) ** 2 * m1 - 1j * p.g1 * a
    e2 = -(1j * p.delta_m2 + p.gamma_m2) * m2 - 2j * p.kerr2 * abs(m2) ** 2 * m2 - 1j * p.g2 * a
    ec = -(1j * p.delta_c + p.gamma_c) * a - 1j * (p.g1 * m1 + p.g2 * m2) + p.rabi
    return np.array([e1, e2, ec])


def _relative_residual(z: np.ndarray, p: SystemParams) -> float:
    m1, m2, a = z
    terms = (
        abs((1j * p.delta_m1 + p.gamma_m1) * m1),
        abs(2.0 * p.kerr1 * abs(m1) ** 2 * m1),
        abs(p.g1 * a),
        abs((1j * p.delta_m2 + p.gamma_m2) * m2),
        abs(2.0 * p.kerr2 * abs(m2) ** 2 * m2),
        abs(p.g2 * a),
        abs((1j * p.delta_c + p.gamma_c) * a),
        abs(p.g1 * m1),
        abs(p.g2 * m2),
        abs(p.rabi),
    )
    scale = max(terms)
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(_residual_vector(z, p)))) / scale


def _block(j_c: complex, j_cc: complex) -> np.ndarray:
    # Real 2x2 form of dE = j_c dz + j_cc dconj(z).
    s, d = j_c + j_cc, j_c - j_cc
    return np.array([[s.real, -d.imag], [s.imag, d.real]])


def _jacobian(z: np.ndarray, p: SystemParams) -> np.ndarray:
    m1, m2, a = z
    J = np.zeros((6, 6))
    J[0:2, 0:2] = _block(
        -(1j * p.delta_m1 + p.gamma_m1) - 4j * p.kerr1 * abs(m1) ** 2,
        -2j * p.kerr1 * m1 * m1,
    )
    J[0:2, 4:6] = _block(-1j * p.g1, 0.0)
    J[2:4, 2:4] = _block(
        -(1j * p.delta_m2 + p.gamma_m2) - 4j * p.kerr2 * abs(m2) ** 2,
        -2j * p.kerr2 * m2 * m2,
    )
    J[2:4, 4:6] = _block(-1j * p.g2, 0.0)
    J[4:6, 0:2] = _block(-1j * p.g1, 0.0)
    J[4:6, 2:4] = _block(-1j * p.g2, 0.0)
    J[4:6, 4:6] = _block(-(1j * p.delta_c + p.gamma_c), 0.0)
    return J


def _linear_solution(p: SystemParams) -> np.ndarray:
    # Steady state with both Kerr terms off; eliminates the magnons.
    chi1 = p.g1**2 / (1j * p.delta_m1 + p.gamma_m1)
    chi2 = p.g2**2 / (1j * p.delta_m2 + p.gamma_m2)
    a = p.rabi / (1j * p.delta_c + p.gamma_c + chi1 + chi2)
    m1 = -1j * p.g1 * a / (1j * p.delta_m1 + p.gamma_m1)
    m2 = -1j * p.g2 * a / (1j * p.delta_m2 + p.gamma_m2)
    return np.array([m1, m2, a])


def _starting_points(z_lin: np.ndarray) -> list[np.ndarray]:
    starts = []
    for s in _START_SCALES:
        for k in range(4):
            starts.append(z_lin * s * cmath.exp(1j * math.pi / 2 * k))
    # The scaled lattice preserves the relative phases of the linear
    # solution; a few single-mode rotations reach branches that break
    # the magnon exchange symmetry.
    for phase in (1j, -1.0):
        for idx in (0, 1):
            z = z_lin.copy()
            z[idx] *= phase
            starts.append(z)
    return starts


def solve_meanfield(params: SystemParams) -> list[SteadyAmplitudes]:
    """Find all steady-state branches of the classical equations.

    Damped Newton iteration on the six real unknowns runs from a
    deterministic lattice of starting points (the Kerr-free solution,
    amplitude-scaled and phase-rotated); converged roots are
    deduplicated at absolute tolerance 1e-6 times the largest amplitude
    and tagged stable from the eigenvalues of their linearization.
    Roots are ordered by |m1|, so output is reproducible.

    Raises
    ------
    ConvergenceError
        If no starting point converges; carries the best residual seen.
    """
    from .dynamics import build_drift  # deferred, dynamics depends on this module

    z_lin = _linear_solution(params)
    scale = max(float(np.max(np.abs(z_lin))), 1.0)
    rate = max(
        abs(params.delta_m1), abs(params.delta_m2), abs(params.delta_c),
        params.gamma_m1, params.gamma_m2, params.gamma_c,
        params.rabi / scale, 1.0,
    )

    def scaled_norm(f: np.ndarray) -> float:
        return float(np.max(np.abs(f))) / (scale * rate)

    def newton(z0: np.ndarray) -> tuple[np.ndarray | None, float]:
        z = z0.astype(complex)
        best = math.inf
        stalls = 0
        for _ in range(MAX_ITERATIONS):
            f = _residual_vector(z, params)
            fn = scaled_norm(f)
            best = min(best, fn)
            if fn < CONVERGENCE_TOL:
                return z, best
            x = np.empty(6)
            x[0::2], x[1::2] = z.real, z.imag
            fr = np.empty(6)
            fr[0::2], fr[1::2] = f.real, f.imag
            try:
                dx = np.linalg.solve(_jacobian(z, params), -fr)
            except np.linalg.LinAlgError:
                return None, best
            f0 = float(np.max(np.abs(f)))
            lam = 1.0
            accepted = False
            for _ in range(LINE_SEARCH_DEPTH):
                zn = (x + lam * dx)[0::2] + 1j * (x + lam * dx)[1::2]
                if float(np.max(np.abs(_residual_vector(zn, params)))) <= f0 * (1.0 - 0.25 * lam):
                    accepted = True
                    break
                lam *= 0.5
            if accepted:
                stalls = 0
            else:
                stalls += 1
                if stalls >= 2:
                    return None, best
            z = (x + lam * dx)[0::2] + 1j * (x + lam * dx)[1::2]
        f = _residual_vector(z, params)
        fn = scaled_norm(f)
        best = min(best, fn)
        if fn < CONVERGENCE_TOL:
            return z, best
        return None, best

    roots: list[np.ndarray] = []
    best_seen = math.inf
    for z0 in _starting_points(z_lin):
        z, best = newton(z0)
        best_seen = min(best_seen, best)
        if z is None:
            continue
        is_dup = False
        for rt in roots:
            tol = DEDUP_RTOL * max(float(np.max(np.abs(z))), float(np.max(np.abs(rt))))
            if float(np.max(np.abs(z - rt))) <= tol:
                is_dup = True
                break
        if not is_dup:
            roots.append(z)
    if not roots:
        raise ConvergenceError(
            f"mean-field iteration did not converge (best scaled residual {best_seen:.3e})",
            best_residual=best_seen,
        )

    roots.sort(key=lambda z: (abs(z[0]), z[0].real, z[0].imag, abs(z[1])))
    out = []
    for z in roots:
        rel = _relative_residual(z, params)
        if not rel < RESIDUAL_RTOL:
            raise NumericalError(
                f"converged root has relative residual {rel:.3e} >= {RESIDUAL_RTOL}"
            )
        m1, m2, a = (complex(v) for v in z)
        c1 = _couplings_from_value(m1, params.kerr1, params.delta_m1)
        c2 = _couplings_from_value(m2, params.kerr2, params.delta_m2)
        model = build_drift(c1, c2, params)
        out.append(
            SteadyAmplitudes(m1=m1, m2=m2, a=a, stable=model.stable, residual=rel)
        )
    log.debug("mean field: %d root(s), %d stable", len(out), sum(r.stable for r in out))
    return out


def _couplings_from_value(m: complex, kerr: float, delta: float) -> EffectiveCouplings:
    msq = m * m
    return EffectiveCouplings(
        G=2.0 * kerr * msq.real,
        F=2.0 * kerr * msq.imag,
        delta_tilde=delta + 4.0 * kerr * abs(m) ** 2,
    )


def effective_couplings(
    amp: SteadyAmplitudes, params: SystemParams, which: int
) -> EffectiveCouplings:
    """Effective couplings of magnon ``which`` (1 or 2) at a steady branch.

    G = 2 K Re<m>^2 and F = 2 K Im<m>^2; delta_tilde carries the
    fluctuation shift 4 K |<m>|^2 on top of the bare detuning (the
    steady-state equations themselves carry half that shift, see
    :func:`kerr_shifted_detuning`).
    """
    if which == 1:
        return _couplings_from_value(amp.m1, params.kerr1, params.delta_m1)
    if which == 2:
        return _couplings_from_value(amp.m2, params.kerr2, params.delta_m2)
    raise InvalidParameterError(f"which must be 1 or 2, got {which!r}")


def direct_couplings(G: float, F: float, delta: float) -> EffectiveCouplings:
    """Effective couplings from (G, F) treated as primitive quantities.

    Entry point for coupling-plane studies: delta_tilde is
    delta + 2 sqrt(G^2 + F^2), the shift written in terms of the
    coupling magnitudes, so no mean-field phase needs to be assumed.
    """
    for name, v in (("G", G), ("F", F), ("delta", delta)):
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v!r}")
    return EffectiveCouplings(G=G, F=F, delta_tilde=delta + 2.0 * math.hypot(G, F))


def kerr_shifted_detuning(
    amp: SteadyAmplitudes, params: SystemParams, which: int, kind: str = "steady"
) -> float:
    """Kerr-shifted detuning of magnon ``which`` at a steady branch.

    ``kind='steady'`` applies the shift 2 K |<m>|^2 that the
    steady-state equations carry; ``kind='fluctuation'`` applies the
    shift 4 K |<m>|^2 that enters the linearized dynamics.  The closed
    form :func:`m1_closed_form` reproduces solver roots exactly with the
    ``'steady'`` convention; both are exposed because the two shifts are
    easy to conflate.
    """
    if which == 1:
        m, kerr, delta = amp.m1, params.kerr1, params.delta_m1
    elif which == 2:
        m, kerr, delta = amp.m2, params.kerr2, params.delta_m2
    else:
        raise InvalidParameterError(f"which must be 1 or 2, got {which!r}")
    if kind == "steady":
        return delta + 2.0 * kerr * abs(m) ** 2
    if kind == "fluctuation":
        return delta + 4.0 * kerr * abs(m) ** 2
    raise InvalidParameterError(f"kind must be 'steady' or 'fluctuation', got {kind!r}")


def m1_closed_form(
    params: SystemParams, delta_tilde_1: float, delta_tilde_2: float
) -> complex:
    """Closed-form first-magnon amplitude at given shifted detunings.

    Evaluates

        <m1> = i g1 Omega / [(dt1 - i gamma1)(delta_c - i gamma_c)
                             - g1^2 - g2^2 (dt1 - i gamma1)/(dt2 - i gamma2)]

    verbatim.  With ``delta_tilde_s`` from
    :func:`kerr_shifted_detuning(kind='steady')` this is an exact
    self-consistency check of :func:`solve_meanfield` roots.
    """
    q1 = delta_tilde_1 - 1j * params.gamma_m1
    q2 = delta_tilde_2 - 1j * params.gamma_m2
    qc = params.delta_c - 1j * params.gamma_c
    if q2 == 0:
        raise SingularityError("second-magnon response (dt2 - i gamma2) vanishes")
    den = q1 * qc - params.g1**2 - params.g2**2 * q1 / q2
    scale = max(abs(q1 * qc), params.g1**2, abs(params.g2**2 * q1 / q2), 1e-300)
    if abs(den) < 1e-14 * scale:
        raise SingularityError("closed-form denominator vanishes at these detunings")
    return 1j * params.g1 * params.rabi / den
