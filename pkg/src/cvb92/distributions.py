"""Probability densities derived from the two-mode phase-space function.

The receiver's homodyne marginals, their tail probabilities, the joint
receiver/eavesdropper quasi-densities, and the balanced-splitter joint used
by the intercept attack all reduce to Gaussian-envelope integrals of the
two-mode Wigner function; this module owns those integrals.

Lossy marginals have no closed form here by design: tensor quadrature over
the latent coordinates is the production path, with node rules centered on
the known Gaussian envelope of each coordinate.
"""

from __future__ import annotations

import threading
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .channel import ChannelModel, resolve_channel, two_mode_wigner_xy
from .quadrature import (DEFAULT_SPEC, EXACT_NODES, PROB_ABS_TOL,
                         IntegrationError, QuadratureSpec, axis_rule,
                         panel_rule, tail_rule)
from .states import AXIS_I, AXIS_R, PascsState, vacuum_wigner_xy, wigner_xy

#: Half-width of tabulation / integration support around an envelope center.
#: exp(-2*8^2) ~ 1e-56, far below every tolerance used here.
SUPPORT_HALFWIDTH = 8.0

_TABLE_POINTS = 4097
_CDF_TABLE_POINTS = 4096

_BALANCED = 1.0 / np.sqrt(2.0)


def _envelope_centers(state: PascsState, ch: ChannelModel):
    """Gaussian centers of (zr, zi, er, ei) for the two-mode function."""
    a, t, r = state.alpha, ch.t_amp, ch.r_amp
    if state.axes.a == AXIS_R:
        return {"zr": a * t, "zi": 0.0, "er": -a * r, "ei": 0.0}
    return {"zr": 0.0, "zi": a * t, "er": 0.0, "ei": -a * r}


def _chunks(n_total: int, chunk: int):
    for lo in range(0, n_total, chunk):
        yield lo, min(n_total, lo + chunk)


class MarginalDensity:
    """Homodyne outcome density of one quadrature of the receiver's mode.

    Construction is cheap; a spline table over the support window is built
    lazily (thread-safe, single writer) and reused for tails, moments and
    inverse-CDF sampling. `pdf` always evaluates the quadrature directly.
    """

    def __init__(self, state: PascsState, ch: ChannelModel, axis: int,
                 spec: QuadratureSpec = DEFAULT_SPEC):
        if axis not in (AXIS_R, AXIS_I):
            raise ValueError("axis must be AXIS_R or AXIS_I")
        self.state = state
        self.channel = ch
        self.axis = axis
        self.spec = spec
        centers = _envelope_centers(state, ch)
        self.center = centers["zr"] if axis == AXIS_R else centers["zi"]
        self._latent_centers = (
            centers["zi"] if axis == AXIS_R else centers["zr"],
            centers["er"], centers["ei"])
        self._lock = threading.Lock()
        self._table = None

    def pdf(self, z, n_nodes: int | None = None):
        """Density at outcome(s) z by direct tensor quadrature over the
        latent coordinates."""
        z_arr = np.atleast_1d(np.asarray(z, dtype=float))
        n = self.spec.nodes_per_axis if n_nodes is None else n_nodes
        cy, ce1, ce2 = self._latent_centers
        y, wy = axis_rule(self.spec, cy, n)
        e1, w1 = axis_rule(self.spec, ce1, n)
        e2, w2 = axis_rule(self.spec, ce2, n)
        out = np.empty(z_arr.shape[0])
        chunk = max(1, int(4_000_000 // (len(y) * len(e1) * len(e2))))
        for lo, hi in _chunks(len(z_arr), chunk):
            zc = z_arr[lo:hi][:, None, None, None]
            yl = y[None, :, None, None]
            er = e1[None, None, :, None]
            ei = e2[None, None, None, :]
            if self.axis == AXIS_R:
                vals = two_mode_wigner_xy(self.state, self.channel,
                                          zc, yl, er, ei)
            else:
                vals = two_mode_wigner_xy(self.state, self.channel,
                                          yl, zc, er, ei)
            out[lo:hi] = np.einsum("mjkl,j,k,l->m", vals, wy, w1, w2)
        return out if np.ndim(z) else float(out[0])

    # -- tabulated representation ------------------------------------------

    def _build_table(self):
        grid = np.linspace(self.center - SUPPORT_HALFWIDTH,
                           self.center + SUPPORT_HALFWIDTH, _TABLE_POINTS)
        n = min(self.spec.nodes_per_axis, EXACT_NODES)
        vals = self.pdf(grid, n_nodes=n)
        spline = CubicSpline(grid, vals)
        anti = spline.antiderivative()
        total = float(anti(grid[-1]) - anti(grid[0]))
        if abs(total - 1.0) > 1e-6:
            raise IntegrationError(
                f"marginal normalization off by {abs(total - 1.0):.3e}")
        return grid, vals, spline, anti, total

    @property
    def table(self):
        tab = self._table
        if tab is None:
            with self._lock:
                if self._table is None:
                    self._table = self._build_table()
                tab = self._table
        return tab

    def pdf_interp(self, z):
        """Fast tabulated density (zero outside the support window)."""
        grid, _, spline, _, _ = self.table
        z = np.asarray(z, dtype=float)
        inside = (z >= grid[0]) & (z <= grid[-1])
        out = np.zeros_like(z, dtype=float)
        out[inside] = spline(z[inside])
        return out

    def tail(self, cut: float) -> float:
        """Probability mass below ``cut``, with a dual-route error check
        (direct panel quadrature against the spline antiderivative)."""
        x, w = tail_rule(self.center, cut, SUPPORT_HALFWIDTH)
        direct = float(np.sum(
            w * self.pdf(x, n_nodes=min(self.spec.nodes_per_axis,
                                        EXACT_NODES))))
        grid, _, _, anti, _ = self.table
        hi = min(cut, grid[-1])
        via_table = float(anti(hi) - anti(grid[0])) if hi > grid[0] else 0.0
        err = abs(direct - via_table)
        tol = max(PROB_ABS_TOL, self.spec.abs_tol)
        if err > tol:
            raise IntegrationError(
                f"tail error estimate {err:.3e} exceeds {tol:.3e}")
        return direct

    def mean(self) -> float:
        x, w = panel_rule(self.center - SUPPORT_HALFWIDTH,
                          self.center + SUPPORT_HALFWIDTH)
        return float(np.sum(w * x * self.pdf(
            x, n_nodes=min(self.spec.nodes_per_axis, EXACT_NODES))))

    @cached_property
    def sampler(self) -> "InverseCdfSampler":
        return InverseCdfSampler(self)


class InverseCdfSampler:
    """Monotone tabulated inverse CDF of a marginal density.

    The CDF knots sit on the uniform outcome grid (not on a uniform
    probability grid), so far-tail quantiles keep full resolution; a
    uniform-u table would smear the first probability cell across the
    entire deep tail and inflate rare-event rates by orders of magnitude.
    """

    def __init__(self, density: MarginalDensity,
                 n_table: int = _CDF_TABLE_POINTS):
        grid, _, _, anti, total = density.table
        step = max(1, (grid.size - 1) // n_table)
        z = grid[::step]
        cdf = (anti(z) - anti(grid[0])) / total
        cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
        # strictly increasing support for interpolation
        cdf = cdf + np.linspace(0.0, 1e-12, cdf.size)
        cdf /= cdf[-1]
        self.z_grid = z
        self.cdf_grid = cdf

    def draw(self, u):
        """Map uniforms in [0, 1) to outcomes."""
        return np.interp(u, self.cdf_grid, self.z_grid)


# -- module-level memoized constructors ------------------------------------

_marginal_cache: dict = {}
_marginal_lock = threading.Lock()


def marginal(state: PascsState, ch, axis: int,
             spec: QuadratureSpec = DEFAULT_SPEC) -> MarginalDensity:
    """Memoized marginal density of ``axis`` for a state through a channel."""
    ch = resolve_channel(ch)
    key = (state.j, state.alpha, ch.t_amp, axis, spec)
    dens = _marginal_cache.get(key)
    if dens is None:
        with _marginal_lock:
            dens = _marginal_cache.get(key)
            if dens is None:
                dens = MarginalDensity(state, ch, axis, spec)
                _marginal_cache[key] = dens
    return dens


def tail_correct(state: PascsState, ch, zeta_c: float,
                 spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Probability that a conclusive outcome occurs on the non-displaced
    axis (the receiver infers the sent bit)."""
    if not zeta_c > 0:
        raise ValueError("zeta_c must be positive")
    return marginal(state, ch, state.axes.b, spec).tail(-zeta_c)


def tail_wrong(state: PascsState, ch, zeta_c: float,
               spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Probability of a conclusive outcome on the displaced axis (bit flip)."""
    if not zeta_c > 0:
        raise ValueError("zeta_c must be positive")
    return marginal(state, ch, state.axes.a, spec).tail(-zeta_c)


class JointBobEve:
    """Quasi-density of one receiver quadrature jointly with both
    eavesdropper-mode coordinates (latent: the conjugate receiver axis).

    A two-quadrature joint of one mode inherits Wigner negativity; values
    can be locally negative. `negativity_diagnostic` reports this; nothing
    is clipped.
    """

    def __init__(self, state: PascsState, ch, axis: int,
                 spec: QuadratureSpec = DEFAULT_SPEC):
        self.state = state
        self.channel = resolve_channel(ch)
        self.axis = axis
        self.spec = spec
        centers = _envelope_centers(state, self.channel)
        self.center = centers["zr"] if axis == AXIS_R else centers["zi"]
        self.eve_centers = (centers["er"], centers["ei"])
        self._latent_center = centers["zi"] if axis == AXIS_R else centers["zr"]

    def pdf(self, zx, er, ei, n_nodes: int | None = None):
        """Broadcasts over array arguments; integrates out the conjugate
        receiver axis."""
        n = self.spec.nodes_per_axis if n_nodes is None else n_nodes
        y, wy = axis_rule(self.spec, self._latent_center, n)
        zx, er, ei = np.broadcast_arrays(
            np.asarray(zx, float), np.asarray(er, float),
            np.asarray(ei, float))
        zxl = zx[..., None]
        erl = er[..., None]
        eil = ei[..., None]
        yl = y[(None,) * zx.ndim + (slice(None),)]
        if self.axis == AXIS_R:
            vals = two_mode_wigner_xy(self.state, self.channel,
                                      zxl, yl, erl, eil)
        else:
            vals = two_mode_wigner_xy(self.state, self.channel,
                                      yl, zxl, erl, eil)
        return vals @ wy

    def normalization(self, n_nodes: int | None = None) -> float:
        n = min(self.spec.nodes_per_axis,
                EXACT_NODES if n_nodes is None else n_nodes)
        x, wx = axis_rule(self.spec, self.center, n)
        r, wr = axis_rule(self.spec, self.eve_centers[0], n)
        i, wi = axis_rule(self.spec, self.eve_centers[1], n)
        vals = self.pdf(x[:, None, None], r[None, :, None], i[None, None, :],
                        n_nodes=n)
        return float(np.einsum("jkl,j,k,l->", vals, wx, wr, wi))

    def negativity_diagnostic(self, points_per_axis: int = 21):
        """(count of negative grid values, most negative value) on a grid
        spanning the support of every coordinate."""
        hw = self.spec.domain_halfwidth
        x = np.linspace(self.center - hw, self.center + hw, points_per_axis)
        r = np.linspace(self.eve_centers[0] - hw, self.eve_centers[0] + hw,
                        points_per_axis)
        i = np.linspace(self.eve_centers[1] - hw, self.eve_centers[1] + hw,
                        points_per_axis)
        vals = self.pdf(x[:, None, None], r[None, :, None], i[None, None, :],
                        n_nodes=min(self.spec.nodes_per_axis, EXACT_NODES))
        return int(np.sum(vals < 0)), float(vals.min())


def joint_bob_eve(state: PascsState, ch, axis: int,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> JointBobEve:
    return JointBobEve(state, ch, axis, spec)


def _pair_reduced(alpha, t, r, displaced, xs, w, eps):
    """Integrate one coordinate pair of the two-mode function over its
    receiver coordinate.

    The function factorizes across the (displaced, non-displaced) pairs as
    Fa*Eb + Ea*Fb - alpha^2*Ea*Eb, where E is the pair's Gaussian envelope
    and F the envelope times the pair's bracket term. Returns the reduced
    (E, F) as functions of the pair's eavesdropper coordinate.
    """
    u = t * xs[None, :] - r * eps[:, None]
    v = r * xs[None, :] + t * eps[:, None]
    if displaced:
        env = np.exp(-2.0 * ((u - alpha) ** 2 + v * v))
        bracket = (alpha * alpha - 1.0 - 2.0 * alpha * u) ** 2
    else:
        env = np.exp(-2.0 * (u * u + v * v))
        bracket = (2.0 * alpha * u) ** 2
    return env @ w, (env * bracket) @ w


def branch_conditionals(state: PascsState, ch, zeta_c: float,
                        eps_a: np.ndarray, eps_b: np.ndarray,
                        spec: QuadratureSpec = DEFAULT_SPEC):
    """Unnormalized eavesdropper-mode distributions conditioned on a
    conclusive receiver outcome, one per key-bit branch, on a grid over the
    eavesdropper coordinates paired with the displaced and non-displaced
    axes (eps_a, eps_b).

    Exploits the pairwise rank-3 separability of the two-mode function, so
    each branch costs two families of 1-D integrals plus outer products.
    Each array integrates (with matching eps weights) to the corresponding
    tail probability.
    """
    ch = resolve_channel(ch)
    a, t, r = state.alpha, ch.t_amp, ch.r_amp
    n = min(spec.nodes_per_axis, EXACT_NODES)
    xa_full, wa_full = axis_rule(spec, a * t, n)
    xb_full, wb_full = axis_rule(spec, 0.0, n)
    xa_tail, wa_tail = tail_rule(a * t, -zeta_c, SUPPORT_HALFWIDTH)
    xb_tail, wb_tail = tail_rule(0.0, -zeta_c, SUPPORT_HALFWIDTH)

    ea_full, fa_full = _pair_reduced(a, t, r, True, xa_full, wa_full, eps_a)
    ea_tail, fa_tail = _pair_reduced(a, t, r, True, xa_tail, wa_tail, eps_a)
    eb_full, fb_full = _pair_reduced(a, t, r, False, xb_full, wb_full, eps_b)
    eb_tail, fb_tail = _pair_reduced(a, t, r, False, xb_tail, wb_tail, eps_b)

    k = (2.0 / np.pi) ** 2 / state.norm
    a2 = a * a
    correct = k * (np.outer(fa_full, eb_tail) + np.outer(ea_full, fb_tail)
                   - a2 * np.outer(ea_full, eb_tail))
    wrong = k * (np.outer(fa_tail, eb_full) + np.outer(ea_tail, fb_full)
                 - a2 * np.outer(ea_tail, eb_full))
    return correct, wrong


class InterceptJoint:
    """Joint density of (position of output 1, momentum of output 2) when
    the signal passes a balanced splitter, as measured by the intercept
    attack.

    The splitter phase convention is chosen so that the displaced
    quadrature of both outputs has a positive mean; the tapped-mode sign is
    unobservable in every channel statistic but fixes which half-plane the
    attack's acceptance regions live in.
    """

    def __init__(self, state: PascsState, spec: QuadratureSpec = DEFAULT_SPEC):
        self.state = state
        self.spec = spec
        a = state.alpha
        if state.j == 0:
            self.center_br, self.center_ei = a * _BALANCED, 0.0
            self._latent_centers = (0.0, a * _BALANCED)   # (bi, er)
        else:
            self.center_br, self.center_ei = 0.0, a * _BALANCED
            self._latent_centers = (a * _BALANCED, 0.0)

    def _wigner_pair(self, br, bi, er, ei):
        t = r = _BALANCED
        signal = wigner_xy(self.state, t * br + r * er, t * bi + r * ei)
        vac = vacuum_wigner_xy(-r * br + t * er, -r * bi + t * ei)
        return signal * vac

    def pdf(self, br, ei, n_nodes: int | None = None):
        """Broadcasts over arrays; integrates out (momentum of output 1,
        position of output 2)."""
        n = self.spec.nodes_per_axis if n_nodes is None else n_nodes
        n = min(n, EXACT_NODES)
        cbi, cer = self._latent_centers
        bi, wbi = axis_rule(self.spec, cbi, n)
        er, wer = axis_rule(self.spec, cer, n)
        br, ei = np.broadcast_arrays(np.asarray(br, float),
                                     np.asarray(ei, float))
        nd = br.ndim
        brl = br[..., None, None]
        eil = ei[..., None, None]
        bil = bi[(None,) * nd + (slice(None), None)]
        erl = er[(None,) * nd + (None, slice(None))]
        vals = self._wigner_pair(brl, bil, erl, eil)
        return np.einsum("...jk,j,k->...", vals, wbi, wer)

    def _moment(self, which: str) -> float:
        n = min(self.spec.nodes_per_axis, 64)
        b, wb = axis_rule(self.spec, self.center_br, n)
        e, we = axis_rule(self.spec, self.center_ei, n)
        vals = self.pdf(b[:, None], e[None, :])
        if which == "br":
            vals = vals * b[:, None]
        elif which == "ei":
            vals = vals * e[None, :]
        return float(np.einsum("jk,j,k->", vals, wb, we))

    def normalization(self) -> float:
        return self._moment("1")

    def mean_br(self) -> float:
        return self._moment("br")

    def mean_ei(self) -> float:
        return self._moment("ei")


_intercept_cache: dict = {}
_intercept_lock = threading.Lock()


def intercept_joint(state: PascsState,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> InterceptJoint:
    """Memoized balanced-splitter joint for the intercept attack."""
    key = (state.j, state.alpha, spec)
    joint = _intercept_cache.get(key)
    if joint is None:
        with _intercept_lock:
            joint = _intercept_cache.get(key)
            if joint is None:
                joint = InterceptJoint(state, spec)
                _intercept_cache[key] = joint
    return joint
