"""Gaussian bipartite entanglement from covariance matrices.

Logarithmic negativity E_N = max[0, -ln 2 nu_minus] where nu_minus is
the smallest symplectic eigenvalue of a two-mode covariance matrix
after partial transposition of the first mode.  Two independent
routes are provided: the eigenvalue route and the determinant closed
form; they must agree and the test suite holds them to that.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidParameterError, NumericalError
from .steadystate import CovarianceMatrix

_MINUS_SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]])
# Partial transposition of the first mode: Y1 -> -Y1.
_PT = np.diag([1.0, -1.0, 1.0, 1.0])
IMAG_DISCARD_RTOL = 1e-10
DISCRIMINANT_TOL = 1e-12


class Mode(enum.Enum):
    """The three fluctuation modes, in quadrature-vector order."""

    MAGNON1 = "magnon1"
    MAGNON2 = "magnon2"
    CAVITY = "cavity"

    @property
    def index(self) -> int:
        return {"magnon1": 0, "magnon2": 1, "cavity": 2}[self.value]


@dataclass(frozen=True)
class ModePair:
    """Ordered pair of distinct modes; the first is partially transposed."""

    first: Mode
    second: Mode

    def __post_init__(self):
        if self.first == self.second:
            raise InvalidParameterError(f"mode pair must be distinct, got {self.first} twice")


@dataclass(frozen=True)
class NegativityResult:
    """Smallest PT symplectic eigenvalue and the resulting negativity."""

    nu_minus: float
    e_n: float

    def __post_init__(self):
        if not (math.isfinite(self.nu_minus) and self.nu_minus > 0.0):
            raise InvalidParameterError(f"nu_minus must be positive, got {self.nu_minus!r}")
        if self.e_n != max(0.0, -math.log(2.0 * self.nu_minus)):
            raise InvalidParameterError("e_n is not consistent with nu_minus")


def _result(nu_minus: float) -> NegativityResult:
    if not nu_minus > 0.0:
        raise NumericalError(f"smallest symplectic eigenvalue {nu_minus!r} is not positive")
    return NegativityResult(nu_minus=nu_minus, e_n=max(0.0, -math.log(2.0 * nu_minus)))


def _checked(C4: np.ndarray) -> np.ndarray:
    C4 = np.asarray(C4, dtype=float)
    if C4.shape != (4, 4):
        raise InvalidParameterError(f"expected a 4x4 matrix, got shape {C4.shape}")
    if not np.all(np.isfinite(C4)):
        raise InvalidParameterError("covariance matrix has non-finite entries")
    scale = max(float(np.max(np.abs(C4))), 1.0)
    if float(np.max(np.abs(C4 - C4.T))) > 1e-10 * scale:
        raise InvalidParameterError("covariance matrix is not symmetric")
    return (C4 + C4.T) / 2.0


def reduce(C: CovarianceMatrix, pair: ModePair) -> np.ndarray:
    """Extract the 4x4 covariance block of a mode pair.

    Rows and columns are ordered (X_first, Y_first, X_second, Y_second).
    """
    i, j = pair.first.index, pair.second.index
    idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
    return C.C[np.ix_(idx, idx)]


def log_negativity(C4: np.ndarray) -> NegativityResult:
    """Logarithmic negativity of a two-mode covariance, eigenvalue route.

    Flips the sign of the first mode's Y quadrature (partial
    transposition), then takes the smallest absolute eigenvalue of
    (-sigma_y (+) -sigma_y) C4_pt.  Those eigenvalues come in +-nu
    pairs that are analytically real; imaginary parts above
    1e-10 * max|C4| mean the input was not a physical covariance.
    """
    C4 = _checked(C4)
    Ct = _PT @ C4 @ _PT
    J = scipy.linalg.block_diag(_MINUS_SIGMA_Y, _MINUS_SIGMA_Y)
    lam = np.linalg.eigvals(J @ Ct)
    scale = max(float(np.max(np.abs(C4))), 1e-300)
    if float(np.max(np.abs(lam.imag))) > IMAG_DISCARD_RTOL * scale:
        raise NumericalError("partial-transpose spectrum has large imaginary parts")
    return _result(float(np.min(np.abs(lam.real))))


def log_negativity_closed_form(C4: np.ndarray) -> NegativityResult:
    """Logarithmic negativity via the two-mode determinant closed form.

    For block decomposition C4 = [[A, Co], [Co^T, B]] the smallest PT
    symplectic eigenvalue is

        nu_minus^2 = (sigma - sqrt(sigma^2 - 4 det C4)) / 2,
        sigma = det A + det B - 2 det Co,

    where the -2 det Co sign carries the partial transposition, so C4
    itself must be the untransposed covariance.  Independent of
    :func:`log_negativity`; the two must agree on valid inputs.
    """
    C4 = _checked(C4)
    A, B, Co = C4[:2, :2], C4[2:, 2:], C4[:2, 2:]
    sigma = (
        float(np.linalg.det(A)) + float(np.linalg.det(B)) - 2.0 * float(np.linalg.det(Co))
    )
    det_c = float(np.linalg.det(C4))
    disc = sigma * sigma - 4.0 * det_c
    tol = DISCRIMINANT_TOL * max(1.0, sigma * sigma, 4.0 * abs(det_c))
    if disc < -tol:
        raise NumericalError(
            f"negative discriminant {disc:.3e} in the closed form; input is not a "
            "physical two-mode covariance"
        )
    # (sigma - sqrt(disc))/2 cancels badly when 4 det C4 << sigma^2;
    # the conjugate form is exact in the same arithmetic.
    root = math.sqrt(max(disc, 0.0))
    if sigma + root > 0.0:
        nu_sq = 2.0 * det_c / (sigma + root)
    else:
        nu_sq = (sigma - root) / 2.0
    return _result(math.sqrt(max(nu_sq, 0.0)))


def all_pairs(C: CovarianceMatrix) -> dict[ModePair, NegativityResult]:
    """Logarithmic negativity for the three mode pairs of a 6x6 covariance."""
    out = {}
    for first, second in (
        (Mode.MAGNON1, Mode.MAGNON2),
        (Mode.MAGNON1, Mode.CAVITY),
        (Mode.MAGNON2, Mode.CAVITY),
    ):
        pair = ModePair(first=first, second=second)
        out[pair] = log_negativity(reduce(C, pair))
    return out
