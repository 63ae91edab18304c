"""Signal states of the protocol and their phase-space representation.

The signal is a coherent state with one photon added and then one photon
subtracted, used in two versions: displaced along the position quadrature
(bit 0) or along the momentum quadrature (bit 1). The Wigner function has
a closed Gaussian-times-polynomial form, which is the production evaluator;
a Fock-basis displaced-parity series provides an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import eval_genlaguerre, gammaln

TWO_OVER_PI = 2.0 / np.pi

#: Quadrature indices: position and momentum.
AXIS_R = 0
AXIS_I = 1


class FockTruncationError(RuntimeError):
    """Fock-series truncation too coarse for the requested tolerance."""


def normalization(gamma_sq: float) -> float:
    """Norm constant of the add-then-subtract operation on a coherent state
    of mean photon number ``gamma_sq``: |g|^4 + 3|g|^2 + 1."""
    if gamma_sq < 0:
        raise ValueError("gamma_sq must be nonnegative")
    return gamma_sq * gamma_sq + 3.0 * gamma_sq + 1.0


@dataclass(frozen=True)
class PhasePoint:
    """A point (zr, zi) in single-mode phase space."""

    zr: float
    zi: float

    def __post_init__(self):
        if not (math.isfinite(self.zr) and math.isfinite(self.zi)):
            raise ValueError("phase-space coordinates must be finite")


@dataclass(frozen=True)
class AxisConvention:
    """Displaced axis ``a`` and non-displaced axis ``b`` for a bit value."""

    a: int
    b: int

    @classmethod
    def for_bit(cls, j: int) -> "AxisConvention":
        return cls(AXIS_R, AXIS_I) if j == 0 else cls(AXIS_I, AXIS_R)


@dataclass(frozen=True)
class PascsState:
    """One signal state: bit label ``j`` and real amplitude ``alpha``.

    ``alpha`` = 0 is allowed for vacuum-limit checks; protocol use requires
    alpha > 0.
    """

    j: int
    alpha: float

    def __post_init__(self):
        if self.j not in (0, 1):
            raise ValueError("bit label must be 0 or 1")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be a finite nonnegative real")

    @cached_property
    def norm(self) -> float:
        return normalization(self.alpha * self.alpha)

    @property
    def axes(self) -> AxisConvention:
        return AxisConvention.for_bit(self.j)

    @property
    def gamma(self) -> complex:
        return complex(self.alpha) if self.j == 0 else 1j * self.alpha


def _wigner_ab(alpha: float, norm: float, za, zb):
    """Closed form in displaced/non-displaced coordinates (vectorized)."""
    a2 = alpha * alpha
    bracket = (a2 - 1.0 - 2.0 * za * alpha) ** 2 + (2.0 * zb * alpha) ** 2 - a2
    env = np.exp(-2.0 * ((za - alpha) ** 2 + zb * zb))
    return TWO_OVER_PI * env * bracket / norm


def wigner_xy(state: PascsState, zr, zi):
    """Wigner function at (zr, zi); broadcasts over array inputs."""
    if state.j == 0:
        za, zb = zr, zi
    else:
        za, zb = zi, zr
    return _wigner_ab(state.alpha, state.norm, za, zb)


def vacuum_wigner_xy(zr, zi):
    return TWO_OVER_PI * np.exp(-2.0 * (np.asarray(zr) ** 2 + np.asarray(zi) ** 2))


def wigner(state: PascsState, p: PhasePoint) -> float:
    """Closed-form Wigner function of the signal state at one point."""
    return float(wigner_xy(state, p.zr, p.zi))


def _fock_coefficients(gamma: complex, n_max: int):
    """Fock coefficients of the normalized add-then-subtract state truncated
    at ``n_max``, plus the exact discarded probability mass."""
    x = abs(gamma) ** 2
    norm = normalization(x)
    if x == 0:
        c = np.zeros(n_max + 1, dtype=complex)
        c[0] = 1.0
        return c, 0.0
    # evaluate past the cutoff so the discarded mass is summed directly
    # instead of read off 1 - sum (which bottoms out at roundoff)
    n_ext = n_max + max(60, n_max)
    n = np.arange(n_ext + 1)
    log_mag = -0.5 * x + n * math.log(abs(gamma)) - 0.5 * gammaln(n + 1)
    c = (n + 1) * np.exp(log_mag) * np.exp(1j * np.angle(gamma) * n)
    c = c / math.sqrt(norm)
    tail = float(np.sum(np.abs(c[n_max + 1:]) ** 2))
    return c[:n_max + 1], tail


def _displacement_matrix(beta: complex, rows: int, cols: int):
    """Matrix elements <n|D(beta)|m> on a truncated Fock space."""
    n = np.arange(rows)[:, None]
    m = np.arange(cols)[None, :]
    lo = np.minimum(n, m)
    hi = np.maximum(n, m)
    k = hi - lo
    x = abs(beta) ** 2
    lag = eval_genlaguerre(lo, k, x)
    log_mag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) - 0.5 * x
    base = np.where(n >= m, beta, -np.conj(beta))
    return np.exp(log_mag) * base ** k * lag


def wigner_fock_oracle(state: PascsState, p: PhasePoint, n_max: int = 40,
                       abs_tol: float = 1e-8) -> float:
    """Displaced-parity evaluation of the Wigner function from the Fock
    expansion of the signal state, truncated at ``n_max``.

    The parity expectation of the displaced truncated state is resummed
    exactly, so the only truncation error is the discarded state mass; a
    rigorous bound on it is checked against ``abs_tol``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    c, tail = _fock_coefficients(state.gamma, n_max)
    # displaced parity: <psi|D(2 zeta) P|psi> with P the photon parity
    zeta = complex(p.zr, p.zi)
    d2 = _displacement_matrix(2.0 * zeta, n_max + 1, n_max + 1)
    signs = (-1.0) ** np.arange(n_max + 1)
    value = TWO_OVER_PI * float(np.real(np.conj(c) @ (d2 @ (signs * c))))
    bound = TWO_OVER_PI * (2.0 * math.sqrt(tail) + tail)
    if bound > abs_tol:
        raise FockTruncationError(
            f"truncation bound {bound:.3e} exceeds tolerance {abs_tol:.3e}; "
            f"increase n_max (got {n_max})")
    return value


def negativity_minimum(state: PascsState):
    """Phase-space point minimizing the Wigner function and the value there.

    The bracket polynomial is negative only for the displaced coordinate
    inside a window around (alpha^2-1)/(2*alpha) at zero non-displaced
    coordinate, where the function is even and convex in the non-displaced
    direction; the search therefore reduces to one bounded 1-D minimization
    over that window.
    """
    a = state.alpha
    if not a > 0:
        raise ValueError("negativity_minimum requires alpha > 0")
    lo = (a * a - 1.0 - a) / (2.0 * a)
    hi = (a * a - 1.0 + a) / (2.0 * a)
    res = minimize_scalar(lambda z: _wigner_ab(a, state.norm, z, 0.0),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    za = float(res.x)
    value = float(res.fun)
    if state.j == 0:
        point = PhasePoint(za, 0.0)
    else:
        point = PhasePoint(0.0, za)
    return point, value
