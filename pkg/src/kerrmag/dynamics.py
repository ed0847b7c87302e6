"""Linearized fluctuation dynamics: drift and diffusion matrices, stability.

Quadrature fluctuations are ordered (dX1, dY1, dX2, dY2, dX, dY) with
X = (m + m*)/sqrt(2), Y = (m - m*)/(i sqrt(2)).  The drift matrix A
generates du/dt = A u + noise; the diffusion matrix D collects the
noise correlations, diagonal with thermal occupations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericalError
from .meanfield import EffectiveCouplings
from .params import SystemParams, thermal_occupation

# Relative stability margin: eigenvalues this close to the imaginary
# axis count as unstable, keeping sweep maps deterministic near the
# stability boundary.
STABILITY_MARGIN = 1e-12


@dataclass(frozen=True, eq=False)
class DriftModel:
    """Drift matrix A, diffusion matrix D, spectrum and stability flag."""

    A: np.ndarray
    D: np.ndarray
    eigenvalues_A: np.ndarray
    stable: bool


@dataclass(frozen=True)
class BogoliubovDiagnostics:
    """Squeezing-transformation coefficients of one magnon mode.

    In the regime delta_tilde^2 <= G^2 + F^2 the transformation does
    not exist with real coefficients; ``epsilon`` is then the complex
    continuation of the mode frequency and u, v, alpha are None.
    """

    u: float | None
    v: float | None
    epsilon: complex
    alpha: float | None


def build_drift(
    c1: EffectiveCouplings, c2: EffectiveCouplings, params: SystemParams
) -> DriftModel:
    """Assemble the fluctuation model for given per-magnon couplings.

    ``c1`` and ``c2`` may come from a mean-field branch
    (:func:`kerrmag.meanfield.effective_couplings`) or be prescribed
    directly (:func:`kerrmag.meanfield.direct_couplings`); the drift
    matrix only sees (G, F, delta_tilde).
    """
    g1, g2 = params.g1, params.g2
    gm1, gm2, gc = params.gamma_m1, params.gamma_m2, params.gamma_c
    dc = params.delta_c
    A = np.array(
        [
            [c1.F - gm1, c1.delta_tilde - c1.G, 0.0, 0.0, 0.0, g1],
            [-c1.delta_tilde - c1.G, -c1.F - gm1, 0.0, 0.0, -g1, 0.0],
            [0.0, 0.0, c2.F - gm2, c2.delta_tilde - c2.G, 0.0, g2],
            [0.0, 0.0, -c2.delta_tilde - c2.G, -c2.F - gm2, -g2, 0.0],
            [0.0, g1, 0.0, g2, -gc, dc],
            [-g1, 0.0, -g2, 0.0, -dc, -gc],
        ]
    )
    n1 = thermal_occupation(params.omega_m1, params.temperature)
    n2 = thermal_occupation(params.omega_m2, params.temperature)
    D = np.diag(
        [
            gm1 * (2.0 * n1 + 1.0),
            gm1 * (2.0 * n1 + 1.0),
            gm2 * (2.0 * n2 + 1.0),
            gm2 * (2.0 * n2 + 1.0),
            gc,
            gc,
        ]
    )
    stable, _ = is_stable(A)
    eigenvalues = np.linalg.eigvals(A)
    return DriftModel(A=A, D=D, eigenvalues_A=eigenvalues, stable=stable)


def is_stable(A: np.ndarray) -> tuple[bool, float]:
    """Decide Hurwitz stability of a real square matrix.

    Returns (stable, max real part of the spectrum).  Stability
    requires every real part below -1e-12 * ||A||_F, so eigenvalues
    within rounding noise of the imaginary axis are classified
    unstable on both sides of a sweep consistently.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidParameterError("drift matrix has non-finite entries")
    try:
        eigenvalues = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    max_real = float(np.max(eigenvalues.real))
    margin = -STABILITY_MARGIN * float(np.linalg.norm(A))
    return max_real < margin, max_real


def bogoliubov(c: EffectiveCouplings) -> BogoliubovDiagnostics:
    """Diagonalizing transformation of one squeezed magnon mode.

    For delta_tilde^2 > G^2 + F^2 the mode frequency is
    epsilon = sqrt(delta_tilde^2 - (G^2 + F^2)), with the sign of
    delta_tilde so that u and v stay real, and

        u = sqrt((delta_tilde/epsilon + 1)/2)
        v = sqrt((delta_tilde/epsilon - 1)/2)
        alpha = atan2(F, G)

    Otherwise the squeezing exceeds the detuning and the result is the
    tagged complex-epsilon marker (``epsilon`` purely imaginary-offset
    complex, u = v = alpha = None); callers test with isinstance or by
    a nonzero imaginary part.
    """
    dt = c.delta_tilde
    disc = dt * dt - (c.G * c.G + c.F * c.F)
    if disc <= 0.0:
        marker = complex(0.0, float(np.sqrt(-disc)))
        return BogoliubovDiagnostics(u=None, v=None, epsilon=marker, alpha=None)
    # disc > 0 forces dt != 0, so copysign is well defined
    epsilon = float(np.copysign(np.sqrt(disc), dt))
    ratio = dt / epsilon
    u = float(np.sqrt((ratio + 1.0) / 2.0))
    v = float(np.sqrt(max(ratio - 1.0, 0.0) / 2.0))
    alpha = float(np.arctan2(c.F, c.G))
    return BogoliubovDiagnostics(u=u, v=v, epsilon=epsilon, alpha=alpha)


def optimality_gap(c: EffectiveCouplings, delta_c: float) -> complex:
    """Distance epsilon + delta_c from the predicted entanglement optimum.

    Zero where the squeezed-mode frequency matches the cavity red
    detuning; sweep tables carry this as an annotation.  A complex
    epsilon (squeezing-dominated regime) propagates into the result.
    """
    diag = bogoliubov(c)
    return diag.epsilon + delta_c
