"""Stationary covariance matrix: Lyapunov solver and integration oracle.

The stationary covariance C solves A C + C A^T = -D.  A direct
fixed-step integrator for dC/dt = A C + C A^T + D provides an
independent oracle for the solver, and e^(A tau) Css gives the
stationary two-time correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import DriftModel
from .errors import (
    DivergenceError,
    DriftUnstableError,
    InvalidParameterError,
    NumericalError,
    SingularityError,
)

LYAPUNOV_RESIDUAL_RTOL = 1e-10
DEFAULT_STEP_FACTOR = 0.01
PHYSICALITY_TOL = 1e-9

_MINUS_SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]])


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric 6x6 covariance of the quadrature vector.

    The stored matrix is symmetrized on construction, so downstream
    reductions are exactly symmetric.
    """

    C: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        if C.shape != (6, 6):
            raise InvalidParameterError(f"expected a 6x6 matrix, got shape {C.shape}")
        if not np.all(np.isfinite(C)):
            raise InvalidParameterError("covariance matrix has non-finite entries")
        C = (C + C.T) / 2.0
        C.flags.writeable = False
        object.__setattr__(self, "C", C)

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        """Whether every two-mode reduction respects the uncertainty bound.

        Checks that all symplectic eigenvalues of the three 4x4 pair
        reductions are >= 1/2 - tol (vacuum normalization C = I/2).
        """
        for i, j in ((0, 1), (0, 2), (1, 2)):
            idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
            nus = symplectic_eigenvalues(self.C[np.ix_(idx, idx)])
            if float(nus.min()) < 0.5 - tol:
                return False
        return True


def symplectic_eigenvalues(C: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a symmetric 2n x 2n covariance matrix.

    The eigenvalues of (+i Omega) C come in +-nu pairs with nu real for
    a physical C; returns the n values sorted ascending.
    """
    C = np.asarray(C, dtype=float)
    n2 = C.shape[0]
    if C.ndim != 2 or C.shape[1] != n2 or n2 % 2 != 0 or n2 == 0:
        raise InvalidParameterError(f"expected an even-dimension square matrix, got {C.shape}")
    J = scipy.linalg.block_diag(*([_MINUS_SIGMA_Y] * (n2 // 2)))
    lam = np.linalg.eigvals(J @ C)
    return np.sort(np.abs(lam.real))[::2]


def lyapunov_steady(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Solve A C + C A^T = -D by Kronecker vectorization and dense LU.

    Dimension-agnostic core; callers with a DriftModel should use
    :func:`solve_lyapunov`.  The solution is symmetrized and its
    residual checked against 1e-10 * max|D|.

    Raises
    ------
    SingularityError
        If some eigenvalue pair of A sums to zero (the vectorized
        system is singular).
    NumericalError
        If the residual check fails.
    """
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != D.shape:
        raise InvalidParameterError(
            f"expected square matrices of equal shape, got {A.shape} and {D.shape}"
        )
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(D))):
        raise InvalidParameterError("drift or diffusion matrix has non-finite entries")
    lam = np.linalg.eigvals(A)
    pair_sums = np.abs(lam[:, None] + lam[None, :])
    if float(pair_sums.min()) < 1e-14 * max(float(np.max(np.abs(lam))), 1e-300):
        raise SingularityError("eigenvalue pair of A sums to zero; Lyapunov system singular")
    n = A.shape[0]
    eye = np.eye(n)
    M = np.kron(A, eye) + np.kron(eye, A)
    try:
        x = np.linalg.solve(M, -D.ravel())
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"vectorized Lyapunov system is singular: {exc}") from exc
    C = x.reshape(n, n)
    C = (C + C.T) / 2.0
    residual = float(np.max(np.abs(A @ C + C @ A.T + D)))
    scale = float(np.max(np.abs(D)))
    if scale == 0.0:
        scale = 1.0
    if not residual < LYAPUNOV_RESIDUAL_RTOL * scale:
        raise NumericalError(
            f"Lyapunov residual {residual:.3e} exceeds {LYAPUNOV_RESIDUAL_RTOL} * max|D|"
        )
    return C


def solve_lyapunov(model: DriftModel) -> CovarianceMatrix:
    """Stationary covariance of a stable drift model.

    Raises
    ------
    DriftUnstableError
        If the model is not stable (no stationary state exists).
    """
    if not model.stable:
        max_real = float(np.max(model.eigenvalues_A.real))
        raise DriftUnstableError(
            f"drift matrix is not stable (max Re eigenvalue {max_real:.6e} rad/s)"
        )
    return CovarianceMatrix(lyapunov_steady(model.A, model.D))


def _default_step(A: np.ndarray) -> float:
    fastest = float(np.max(np.abs(np.linalg.eigvals(A))))
    if fastest == 0.0:
        raise InvalidParameterError("drift matrix has zero spectrum; pass dt explicitly")
    return DEFAULT_STEP_FACTOR / fastest


def integrate_cm(
    model: DriftModel,
    C0: CovarianceMatrix,
    duration: float,
    dt: float | None = None,
) -> CovarianceMatrix:
    """Integrate dC/dt = A C + C A^T + D with classical fixed-step RK4.

    Serves as the independent steady-state oracle: for a stable model
    and duration much longer than the slowest decay time the result
    approaches :func:`solve_lyapunov`.  ``dt`` defaults to
    0.01 / max|eigenvalue of A|; a trailing fractional step lands on
    ``duration`` exactly.  Each step symmetrizes, which also lets the
    right-hand side be evaluated as A C + (A C)^T + D.

    Raises
    ------
    DivergenceError
        On non-finite intermediate values (unstable model or dt too
        large for the fastest timescale).
    """
    if not (np.isfinite(duration) and duration >= 0.0):
        raise InvalidParameterError(f"duration must be finite and >= 0, got {duration!r}")
    if dt is None:
        dt = _default_step(model.A)
    if not (np.isfinite(dt) and dt > 0.0):
        raise InvalidParameterError(f"dt must be finite and > 0, got {dt!r}")
    A, D = model.A, model.D
    C = C0.C.copy()

    def rhs(X: np.ndarray) -> np.ndarray:
        AX = A @ X
        return AX + AX.T + D

    def step(C: np.ndarray, h: float) -> np.ndarray:
        k1 = rhs(C)
        k2 = rhs(C + (h / 2.0) * k1)
        k3 = rhs(C + (h / 2.0) * k2)
        k4 = rhs(C + h * k3)
        C = C + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return (C + C.T) / 2.0

    n_full = int(duration // dt)
    remainder = duration - n_full * dt
    # Overflow on a diverging trajectory is the detection mechanism,
    # not an anomaly; keep it from warning.
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_full):
            C = step(C, dt)
            if not np.all(np.isfinite(C)):
                raise DivergenceError(f"integration diverged at step {i + 1} of {n_full}")
        if remainder > dt * 1e-12:
            C = step(C, remainder)
            if not np.all(np.isfinite(C)):
                raise DivergenceError("integration diverged on the final fractional step")
    return CovarianceMatrix(C)


def two_time_cm(model: DriftModel, Css: CovarianceMatrix, tau: float) -> np.ndarray:
    """Stationary two-time correlation C(t + tau, t) = e^(A tau) Css.

    Plain 6x6 array: the two-time correlation is not symmetric for
    tau > 0.  The matrix exponential uses scaling and squaring.
    """
    if not model.stable:
        raise DriftUnstableError("two-time correlations require a stable drift matrix")
    if not (np.isfinite(tau) and tau >= 0.0):
        raise InvalidParameterError(f"tau must be finite and >= 0, got {tau!r}")
    out = scipy.linalg.expm(model.A * tau) @ Css.C
    if not np.all(np.isfinite(out)):
        raise NumericalError("matrix exponential overflowed")
    return out
