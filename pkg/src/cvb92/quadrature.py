"""Node rules for the Gaussian-envelope integrals used throughout.

Every phase-space integrand in this package carries an exp(-2(x-c)^2)
factor per coordinate, so all rules are generated centered and scaled to
that envelope. Two schemes are offered: a Gauss-Hermite-like weighted rule
(fast, spectrally accurate) and a composite Gauss-Legendre panel rule
(robust fallback, also used for semi-infinite tail ranges).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SQRT2 = np.sqrt(2.0)

#: A centered rule with this many nodes integrates exp(-2(x-c)^2) times any
#: polynomial of degree <= 62 exactly; the brackets occurring here never
#: exceed degree 4 per coordinate. Hot tensor-product loops clamp to this.
EXACT_NODES = 32

SCHEME_GAUSS_HERMITE = "gauss-hermite"
SCHEME_PANEL = "panel"


class IntegrationError(RuntimeError):
    """A quadrature error estimate exceeded the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Configuration of the integration engine."""

    scheme: str = SCHEME_GAUSS_HERMITE
    nodes_per_axis: int = 80
    domain_halfwidth: float = 6.0
    abs_tol: float = 1e-9

    def __post_init__(self):
        if self.scheme not in (SCHEME_GAUSS_HERMITE, SCHEME_PANEL):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.nodes_per_axis < 16:
            raise ValueError("nodes_per_axis must be >= 16")
        if not (self.domain_halfwidth > 0):
            raise ValueError("domain_halfwidth must be positive")
        if not (self.abs_tol > 0):
            raise ValueError("abs_tol must be positive")


DEFAULT_SPEC = QuadratureSpec()

#: Tolerance for scalar probability results (tighter than densities).
PROB_ABS_TOL = 1e-10


@lru_cache(maxsize=32)
def _hermgauss(n: int):
    t, w = np.polynomial.hermite.hermgauss(n)
    return t, w


@lru_cache(maxsize=512)
def gauss_envelope_rule(center: float, n: int):
    """Nodes and weights such that sum(w * f(x)) approximates the full-line
    integral of f, for f carrying an exp(-2(x-center)^2) envelope.

    The rule is exact when f is that envelope times a polynomial of degree
    < 2n. Weights absorb the envelope removal, so f is evaluated as-is.
    """
    t, w = _hermgauss(n)
    x = center + t / SQRT2
    w_adj = np.exp(np.log(w) + t * t) / SQRT2
    return x, w_adj


@lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def panel_rule(lo: float, hi: float, max_panel_width: float = 0.25,
               nodes_per_panel: int = 12):
    """Composite Gauss-Legendre rule on [lo, hi]."""
    if not hi > lo:
        raise ValueError("panel_rule requires hi > lo")
    n_panels = max(1, int(np.ceil((hi - lo) / max_panel_width)))
    x0, w0 = _leggauss(nodes_per_panel)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[:-1] + edges[1:])
    x = (mids[:, None] + half * x0[None, :]).ravel()
    w = np.tile(half * w0, n_panels)
    return x, w


def tail_rule(center: float, cut: float, halfwidth: float,
              max_panel_width: float = 0.25, nodes_per_panel: int = 12):
    """Panel rule covering the part of (-inf, cut] where a density with an
    exp(-2(x-center)^2) envelope has any mass.

    The integrand is nonnegative, so direct integration over the finite
    support window is cancellation-free at any tail magnitude.
    """
    lo = min(center, cut) - halfwidth
    return panel_rule(lo, cut, max_panel_width, nodes_per_panel)


def axis_rule(spec: QuadratureSpec, center: float, n: int | None = None):
    """Full-line rule for one latent coordinate, honoring the spec scheme."""
    n = spec.nodes_per_axis if n is None else n
    if spec.scheme == SCHEME_GAUSS_HERMITE:
        return gauss_envelope_rule(center, n)
    width = 2.0 * spec.domain_halfwidth / max(1, n // 12)
    return panel_rule(center - spec.domain_halfwidth,
                      center + spec.domain_halfwidth,
                      max_panel_width=width)
