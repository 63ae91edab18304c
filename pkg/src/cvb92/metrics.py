"""Security figures of merit: accepted fraction, bit-error rate, mutual
information, information gain, collision probability, privacy-amplified
secret rate, and the intercept attack's success probability.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from .channel import resolve_channel
from .distributions import (SUPPORT_HALFWIDTH, branch_conditionals,
                            intercept_joint, marginal, tail_correct,
                            tail_wrong)
from .quadrature import (DEFAULT_SPEC, PROB_ABS_TOL, IntegrationError,
                         QuadratureSpec, panel_rule, tail_rule)
from .states import PascsState

log = logging.getLogger(__name__)

#: Serialization column order for SecurityMetrics.
METRIC_FIELDS = ("p_correct", "p_wrong", "r_acc", "delta", "i_ab", "g_ab",
                 "p_coll", "tau", "s_ab", "p_corr")


@dataclass(frozen=True)
class SecurityMetrics:
    """One full set of figures of merit at fixed (state, channel, zeta_c)."""

    p_correct: float
    p_wrong: float
    r_acc: float
    delta: float
    i_ab: float
    g_ab: float
    p_coll: float
    tau: float
    s_ab: float
    p_corr: float

    def as_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in METRIC_FIELDS}


assert tuple(f.name for f in fields(SecurityMetrics)) == METRIC_FIELDS


def accepted_fraction(p_correct: float, p_wrong: float) -> float:
    """Fraction of pulses yielding an accepted key bit; the 1/2 is the
    probability that the receiver's random axis choice matches."""
    for p in (p_correct, p_wrong):
        if not (0.0 <= p <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
    return 0.5 * (p_correct + p_wrong)


def bit_error_rate(p_correct: float, p_wrong: float) -> float:
    """Error rate per conclusive result."""
    total = p_correct + p_wrong
    if not total > 0:
        raise ZeroDivisionError("conclusive probability mass is zero")
    return p_wrong / total


def error_fraction(state: PascsState, ch, zeta, spec=DEFAULT_SPEC):
    """Phi(zeta): pointwise probability that a conclusive outcome at zeta
    came from the displaced (erroneous) axis."""
    ch = resolve_channel(ch)
    pb = marginal(state, ch, state.axes.b, spec).pdf_interp(np.asarray(zeta, float))
    pa = marginal(state, ch, state.axes.a, spec).pdf_interp(np.asarray(zeta, float))
    s = pb + pa
    return np.divide(pa, s, out=np.zeros_like(np.asarray(s, float)),
                     where=s > 0)


def mutual_information(state: PascsState, ch, zeta_c: float,
                       spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Bits per conclusive result between the sender's and receiver's bits,
    averaged over the accepted outcome region."""
    ch = resolve_channel(ch)
    pc = tail_correct(state, ch, zeta_c, spec)
    pw = tail_wrong(state, ch, zeta_c, spec)
    total = pc + pw
    if not total > 0:
        raise ZeroDivisionError("conclusive probability mass is zero")
    mb = marginal(state, ch, state.axes.b, spec)
    ma = marginal(state, ch, state.axes.a, spec)

    def evaluate(panel_width: float) -> float:
        x, w = tail_rule(0.0, -zeta_c, SUPPORT_HALFWIDTH,
                         max_panel_width=panel_width)
        pb = mb.pdf_interp(x)
        pa = ma.pdf_interp(x)
        s = pb + pa
        phi = np.divide(pa, s, out=np.zeros_like(s), where=s > 0)
        ent = np.zeros_like(phi)
        inner = (phi > 0) & (phi < 1)
        p = phi[inner]
        ent[inner] = p * np.log2(p) + (1 - p) * np.log2(1 - p)
        return float(np.sum(w * s * (1.0 + ent))) / total

    value = evaluate(0.25)
    refined = evaluate(0.125)
    if abs(value - refined) > max(spec.abs_tol, 1e-7):
        raise IntegrationError(
            f"mutual information estimate unstable: {abs(value - refined):.3e}")
    return min(1.0, max(0.0, refined))


def information_gain(i_ab: float, r_acc: float) -> float:
    """Bits gained per transmitted pulse."""
    if not (0.0 <= i_ab <= 1.0 and 0.0 <= r_acc <= 1.0):
        raise ValueError("inputs must lie in [0, 1]")
    return i_ab * r_acc


def collision_probability(state: PascsState, ch, zeta_c: float,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Collision probability of the eavesdropper-mode conditional
    distributions, one conditional per key-bit branch.

    Each conditional is the branch joint integrated over the conclusive
    outcome region and normalized by the total conclusive mass. The
    conditionals inherit local Wigner negativity, and where their sum
    crosses zero the raw ratio has non-integrable 1/s singularities, so
    the formula is only meaningful for genuine distributions. Negative
    conditional values are therefore clipped to zero before the ratio is
    formed (the clipped mass is at the 1e-4 level and reported at debug
    log level); with the clip the integral converges cleanly and is
    verified against a refined grid.
    """
    ch = resolve_channel(ch)
    pc = tail_correct(state, ch, zeta_c, spec)
    pw = tail_wrong(state, ch, zeta_c, spec)
    total = pc + pw
    if not total > 0:
        raise ZeroDivisionError("conclusive probability mass is zero")

    # eavesdropper-coordinate grids: panel rules, since the ratio integrand
    # is rational and defeats the spectral accuracy of the envelope rule
    hw = SUPPORT_HALFWIDTH
    center_a = -state.alpha * ch.r_amp

    def evaluate(panel_width: float) -> float:
        ea, wa = panel_rule(center_a - hw, center_a + hw,
                            max_panel_width=panel_width)
        eb, wb = panel_rule(-hw, hw, max_panel_width=panel_width)
        raw_b, raw_a = branch_conditionals(state, ch, zeta_c, ea, eb, spec)
        cond_b = raw_b / total
        cond_a = raw_a / total
        w2 = wa[:, None] * wb[None, :]
        weight_b = float(np.sum(w2 * cond_b))
        weight_a = float(np.sum(w2 * cond_a))
        if (abs(weight_b - pc / total) > 1e-6
                or abs(weight_a - pw / total) > 1e-6):
            raise IntegrationError("branch conditional weights inconsistent "
                                   "with tail probabilities")
        n_neg = int(np.sum(cond_b < 0) + np.sum(cond_a < 0))
        if n_neg:
            clipped = -float(np.sum(w2 * np.clip(cond_b, None, 0.0))
                             + np.sum(w2 * np.clip(cond_a, None, 0.0)))
            log.debug("collision integrand: %d negative nodes "
                      "(min %.3e, clipped mass %.3e)",
                      n_neg, float(min(cond_b.min(), cond_a.min())), clipped)
        cond_b = np.clip(cond_b, 0.0, None)
        cond_a = np.clip(cond_a, 0.0, None)
        s = cond_b + cond_a
        ratio = np.where(
            s > 0,
            (cond_b * cond_b + cond_a * cond_a) / np.where(s > 0, s, 1.0),
            0.0)
        return float(np.sum(w2 * ratio))

    value = evaluate(0.25)
    refined = evaluate(0.125)
    if abs(value - refined) > 1e-6:
        raise IntegrationError(
            f"collision probability unstable: {abs(value - refined):.3e}")
    if not (0.0 < refined <= 1.0 + PROB_ABS_TOL):
        raise IntegrationError(f"collision probability {refined} out of range")
    return min(refined, 1.0)


def secret_rate(r_acc: float, i_ab: float, p_coll: float) -> float:
    """Key bits per pulse after privacy amplification; may be negative."""
    if not (0.0 < p_coll <= 1.0):
        raise ValueError("p_coll must lie in (0, 1]")
    return r_acc * (i_ab - (1.0 + np.log2(p_coll)))


def eve_success_probability(state: PascsState,
                            spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Probability that the intercept attack's paired measurement lands in
    the acceptance wedge of the sent state.

    Wedges: position outcome >= |momentum outcome| identifies bit 0,
    momentum outcome > |position outcome| identifies bit 1.
    """
    joint = intercept_joint(state, spec)
    hw = SUPPORT_HALFWIDTH
    if state.j == 0:
        outer_center, inner_center = joint.center_ei, joint.center_br
    else:
        outer_center, inner_center = joint.center_br, joint.center_ei
    xo, wo = panel_rule(outer_center - hw, outer_center + hw,
                        max_panel_width=0.5, nodes_per_panel=8)
    total = 0.0
    inner_hi = inner_center + hw
    for x_out, w_out in zip(xo, wo):
        lo = abs(x_out)
        if inner_hi <= lo:
            continue
        xi, wi = panel_rule(lo, inner_hi, max_panel_width=0.5,
                            nodes_per_panel=8)
        if state.j == 0:
            vals = joint.pdf(xi, np.full_like(xi, x_out))
        else:
            vals = joint.pdf(np.full_like(xi, x_out), xi)
        total += w_out * float(np.sum(wi * vals))
    if not (0.0 <= total <= 1.0 + PROB_ABS_TOL):
        raise IntegrationError(f"wedge probability {total} out of range")
    return min(total, 1.0)


def evaluate_all(state: PascsState, ch, zeta_c: float,
                 spec: QuadratureSpec = DEFAULT_SPEC,
                 self_check: bool = False) -> SecurityMetrics:
    """Compute the full SecurityMetrics record.

    With ``self_check`` the computation is repeated for the opposite bit
    label and required to agree to 1e-10, catching axis-convention bugs.
    """
    ch = resolve_channel(ch)
    pc = tail_correct(state, ch, zeta_c, spec)
    pw = tail_wrong(state, ch, zeta_c, spec)
    r_acc = accepted_fraction(pc, pw)
    delta = bit_error_rate(pc, pw)
    i_ab = mutual_information(state, ch, zeta_c, spec)
    g_ab = information_gain(i_ab, r_acc)
    p_coll = collision_probability(state, ch, zeta_c, spec)
    tau = 1.0 + float(np.log2(p_coll))
    s_ab = secret_rate(r_acc, i_ab, p_coll)
    p_corr = eve_success_probability(state, spec)
    result = SecurityMetrics(pc, pw, r_acc, delta, i_ab, g_ab, p_coll, tau,
                             s_ab, p_corr)
    if self_check:
        twin = evaluate_all(PascsState(1 - state.j, state.alpha), ch, zeta_c,
                            spec, self_check=False)
        for name in METRIC_FIELDS:
            if abs(getattr(result, name) - getattr(twin, name)) > 1e-10:
                raise IntegrationError(
                    f"axis-symmetry self-check failed on {name}")
    return result
