"""Seeded Monte Carlo simulation of the five-step protocol.

A session is a pure function of its configuration, including the seed and
independent of the worker count: pulses are processed in fixed-size blocks,
each block drawing from a generator derived as SeedSequence((seed, block
index)), and the disclosure sample from SeedSequence((seed, 2**32)). The
block layout is part of the reproducibility contract.

Eavesdropper models: a beam-splitter tap (passive), intercept-resend
through a balanced splitter with maximum-likelihood re-preparation, and an
unambiguous-discrimination attack that substitutes vacuum on inconclusive
interceptions. A vacuum substitution still produces homodyne outcomes, so
the receiver's detection signal is distributional (an inflated error rate),
not a missing-signal flag.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import ChannelModel, FiberSpec, resolve_channel
from .distributions import intercept_joint, marginal
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .states import AXIS_I, AXIS_R, PascsState

BLOCK_SIZE = 8192
_DISCLOSE_TAG = 2 ** 32

ATTACK_KINDS = ("beam_splitter_tap", "intercept_resend", "usd_vacuum")


@dataclass(frozen=True)
class AttackModel:
    """Eavesdropper strategy; ``t_eve`` only applies to the tap attack."""

    kind: str
    t_eve: float | None = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.kind == "beam_splitter_tap":
            if self.t_eve is None or not (0.0 < self.t_eve <= 1.0):
                raise ValueError("beam_splitter_tap requires t_eve in (0, 1]")
        elif self.t_eve is not None:
            raise ValueError(f"{self.kind} takes no t_eve parameter")


@dataclass(frozen=True)
class SessionConfig:
    n_pulses: int
    alpha: float
    zeta_c: float
    channel: ChannelModel | FiberSpec
    disclose_fraction: float = 0.2
    error_tolerance: float = 0.05
    seed: int = 0
    attack: AttackModel | None = None

    def __post_init__(self):
        if not (isinstance(self.n_pulses, (int, np.integer))
                and self.n_pulses >= 1):
            raise ValueError("n_pulses must be a positive integer")
        # alpha = 0 is a degenerate but well-defined session (both signal
        # states coincide), useful as an attack-statistics control
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be a nonnegative real")
        if not (math.isfinite(self.zeta_c) and self.zeta_c > 0):
            raise ValueError("zeta_c must be a positive real")
        if not (0.0 < self.disclose_fraction < 1.0):
            raise ValueError("disclose_fraction must lie in (0, 1)")
        if not (0.0 <= self.error_tolerance < 1.0):
            raise ValueError("error_tolerance must lie in [0, 1)")
        resolve_channel(self.channel)


@dataclass(frozen=True)
class PulseRecord:
    alice_bit: int
    bob_basis_bit: int
    outcome: float
    conclusive: bool
    disclosed: bool


@dataclass
class ProtocolTranscript:
    """Complete outcome of one session.

    Per-pulse data is held as arrays; ``records`` materializes PulseRecord
    views on demand.
    """

    n_pulses: int
    alice_bits: np.ndarray
    bob_axis_bits: np.ndarray
    outcomes: np.ndarray
    conclusive: np.ndarray
    disclosed: np.ndarray
    sifted_alice: np.ndarray
    sifted_bob_flipped: np.ndarray
    empirical_r_acc: float
    empirical_delta: float | None
    message_log: list
    aborted: bool
    attack_info: dict = field(default_factory=dict)

    @cached_property
    def records(self) -> tuple:
        return tuple(
            PulseRecord(int(a), int(b), float(o), bool(c), bool(d))
            for a, b, o, c, d in zip(
                self.alice_bits, self.bob_axis_bits, self.outcomes,
                self.conclusive, self.disclosed))


@dataclass(frozen=True)
class EmpiricalStats:
    """Empirical counterparts of the analytic figures, with binomial
    standard errors; fields are None when the denominator is empty."""

    n_pulses: int
    n_conclusive: int
    n_disclosed: int
    r_acc: float
    r_acc_se: float
    delta_disclosed: float | None
    delta_disclosed_se: float | None
    delta_full: float | None
    delta_full_se: float | None


def sample_homodyne(state: PascsState, ch, axis: int, rng, size=None,
                    spec: QuadratureSpec = DEFAULT_SPEC):
    """Draw homodyne outcomes of one quadrature via the tabulated
    inverse CDF of the marginal density."""
    dens = marginal(state, resolve_channel(ch), axis, spec)
    u = rng.random(size)
    out = dens.sampler.draw(u)
    return out if size is not None else float(out)


class _InterceptSampler:
    """Inverse-CDF sampler and likelihood evaluator for the intercept
    attack's paired (position, momentum) measurement.

    Grids span the support of the balanced-splitter joint of one signal
    state; sampling is marginal-then-conditional with bilinear inverse-CDF
    interpolation across grid rows.
    """

    _GRID = 513
    _U = 2048

    def __init__(self, state: PascsState, spec: QuadratureSpec = DEFAULT_SPEC):
        joint = intercept_joint(state, spec)
        hw = 8.0
        self.br_grid = np.linspace(joint.center_br - hw, joint.center_br + hw,
                                   self._GRID)
        self.ei_grid = np.linspace(joint.center_ei - hw, joint.center_ei + hw,
                                   self._GRID)
        pdf = np.empty((self._GRID, self._GRID))
        chunk = 16
        for lo in range(0, self._GRID, chunk):
            hi = min(self._GRID, lo + chunk)
            pdf[lo:hi] = joint.pdf(self.br_grid[lo:hi, None],
                                   self.ei_grid[None, :])
        pdf = np.clip(pdf, 0.0, None)  # roundoff only; the joint is a true density
        dx_e = self.ei_grid[1] - self.ei_grid[0]
        marg = np.trapezoid(pdf, dx=dx_e, axis=1)
        cdf = self._cumtrapz(marg, self.br_grid[1] - self.br_grid[0])
        u = np.linspace(0.0, 1.0, self._U)
        self.u_grid = u
        self.br_inv = np.interp(u, cdf, self.br_grid)
        cond_inv = np.empty((self._GRID, self._U))
        for i in range(self._GRID):
            ccdf = self._cumtrapz(pdf[i], dx_e)
            cond_inv[i] = np.interp(u, ccdf, self.ei_grid)
        self.cond_inv = cond_inv

    @staticmethod
    def _cumtrapz(y, dx):
        c = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * dx)])
        c /= c[-1]
        c = np.maximum.accumulate(c)
        # strictly increasing for interpolation
        c += np.linspace(0.0, 1e-12, c.size)
        return c / c[-1]

    def draw(self, u1, u2):
        br = np.interp(u1, self.u_grid, self.br_inv)
        i0 = np.clip(np.searchsorted(self.br_grid, br) - 1, 0,
                     self._GRID - 2)
        f = (br - self.br_grid[i0]) / (self.br_grid[1] - self.br_grid[0])
        ku = u2 * (self._U - 1)
        k0 = np.clip(ku.astype(int), 0, self._U - 2)
        fu = ku - k0
        def row(i):
            return (self.cond_inv[i, k0] * (1.0 - fu)
                    + self.cond_inv[i, k0 + 1] * fu)
        ei = row(i0) * (1.0 - f) + row(i0 + 1) * f
        return br, ei


def _ml_state_choice(alpha: float, br, ei, spec: QuadratureSpec) -> np.ndarray:
    """Maximum-likelihood bit label given the intercept measurement."""
    j0 = intercept_joint(PascsState(0, alpha), spec)
    j1 = intercept_joint(PascsState(1, alpha), spec)
    guess = np.empty(br.shape[0], dtype=np.int64)
    chunk = 20000
    for lo in range(0, br.shape[0], chunk):
        hi = min(br.shape[0], lo + chunk)
        p0 = j0.pdf(br[lo:hi], ei[lo:hi])
        p1 = j1.pdf(br[lo:hi], ei[lo:hi])
        guess[lo:hi] = (p1 > p0).astype(np.int64)
    return guess


def _region_hit(j_bits: np.ndarray, br: np.ndarray, ei: np.ndarray):
    """Whether each measurement fell in the acceptance wedge of the sent
    state: position >= |momentum| tags bit 0, momentum > |position| bit 1."""
    in_a0 = br >= np.abs(ei)
    in_a1 = ei > np.abs(br)
    return np.where(j_bits == 0, in_a0, in_a1)


def _block_seeds(seed: int, n_blocks: int):
    return [np.random.SeedSequence((seed, b)) for b in range(n_blocks)]


def run_session(cfg: SessionConfig, jobs: int = 1) -> ProtocolTranscript:
    """Execute a full session; abort is a normal outcome, not an error."""
    ch = resolve_channel(cfg.channel)
    spec = DEFAULT_SPEC
    attack = cfg.attack
    kind = attack.kind if attack is not None else None

    states = {j: PascsState(j, cfg.alpha) for j in (0, 1)}
    ideal = ChannelModel(1.0)
    if kind == "beam_splitter_tap":
        bob_ch = ChannelModel(ch.t_amp * attack.t_eve)
    elif kind in ("intercept_resend", "usd_vacuum"):
        bob_ch = ideal
    else:
        bob_ch = ch

    # pre-build every sampler table outside the worker pool
    bob_samplers = {(j, ax): marginal(states[j], bob_ch, ax, spec).sampler
                    for j in (0, 1) for ax in (AXIS_R, AXIS_I)}
    eve_samplers = None
    eve_meas_samplers = None
    vac_sampler = None
    if kind == "intercept_resend":
        eve_samplers = {j: _InterceptSampler(states[j], spec) for j in (0, 1)}
    elif kind == "usd_vacuum":
        eve_meas_samplers = {(j, ax): marginal(states[j], ideal, ax, spec).sampler
                             for j in (0, 1) for ax in (AXIS_R, AXIS_I)}
        vac_sampler = marginal(PascsState(0, 0.0), ideal, AXIS_R, spec).sampler

    n = cfg.n_pulses
    n_blocks = (n + BLOCK_SIZE - 1) // BLOCK_SIZE
    seeds = _block_seeds(cfg.seed, n_blocks)

    def run_block(b: int):
        lo = b * BLOCK_SIZE
        nb = min(BLOCK_SIZE, n - lo)
        rng = np.random.default_rng(seeds[b])
        alice = rng.integers(0, 2, nb)
        bob = rng.integers(0, 2, nb)
        extra = {}
        if kind in (None, "beam_splitter_tap"):
            u = rng.random(nb)
            sent = alice
        elif kind == "intercept_resend":
            u1 = rng.random(nb)
            u2 = rng.random(nb)
            u = rng.random(nb)
            br = np.empty(nb)
            ei = np.empty(nb)
            for j in (0, 1):
                m = alice == j
                br[m], ei[m] = eve_samplers[j].draw(u1[m], u2[m])
            sent = _ml_state_choice(cfg.alpha, br, ei, spec)
            extra["eve_ml_hits"] = int(np.sum(sent == alice))
            extra["eve_region_hits"] = int(np.sum(_region_hit(alice, br, ei)))
        else:  # usd_vacuum
            axis_e = rng.integers(0, 2, nb)
            ue = rng.random(nb)
            u = rng.random(nb)
            out_e = np.empty(nb)
            for j in (0, 1):
                for ax in (AXIS_R, AXIS_I):
                    m = (alice == j) & (axis_e == ax)
                    out_e[m] = eve_meas_samplers[(j, ax)].draw(ue[m])
            concl_e = out_e < -cfg.zeta_c
            sent = 1 - axis_e
            extra["eve_conclusive"] = int(np.sum(concl_e))

        outcome = np.empty(nb)
        if kind == "usd_vacuum":
            vac = ~concl_e
            outcome[vac] = vac_sampler.draw(u[vac])
            for j in (0, 1):
                for ax in (AXIS_R, AXIS_I):
                    m = concl_e & (sent == j) & (bob == ax)
                    outcome[m] = bob_samplers[(j, ax)].draw(u[m])
        else:
            for j in (0, 1):
                for ax in (AXIS_R, AXIS_I):
                    m = (sent == j) & (bob == ax)
                    outcome[m] = bob_samplers[(j, ax)].draw(u[m])
        return alice, bob, outcome, extra

    if jobs > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_block, range(n_blocks)))
    else:
        results = [run_block(b) for b in range(n_blocks)]

    alice = np.concatenate([r[0] for r in results])
    bob = np.concatenate([r[1] for r in results])
    outcomes = np.concatenate([r[2] for r in results])
    attack_info = {}
    for r in results:
        for k, v in r[3].items():
            attack_info[k] = attack_info.get(k, 0) + v
    if kind is not None:
        attack_info["kind"] = kind
        if kind == "intercept_resend":
            attack_info["eve_ml_success"] = attack_info.pop("eve_ml_hits") / n
            attack_info["eve_region_success"] = (
                attack_info.pop("eve_region_hits") / n)
        elif kind == "usd_vacuum":
            n_c = attack_info.pop("eve_conclusive")
            attack_info["eve_conclusive_fraction"] = n_c / n
            attack_info["vacuum_substituted_fraction"] = 1.0 - n_c / n

    conclusive = outcomes < -cfg.zeta_c
    concl_idx = np.flatnonzero(conclusive)
    n_concl = concl_idx.size

    rng_d = np.random.default_rng(
        np.random.SeedSequence((cfg.seed, _DISCLOSE_TAG)))
    n_disc = int(math.floor(cfg.disclose_fraction * n_concl))
    disclosed = np.zeros(n, dtype=bool)
    if n_disc > 0:
        disc_idx = np.sort(rng_d.choice(concl_idx, n_disc, replace=False))
        disclosed[disc_idx] = True

    errors = (alice != 1 - bob) & conclusive
    message_log = [
        {"direction": "bob->alice", "kind": "conclusive_coordinates",
         "count": int(n_concl)},
        {"direction": "bob->alice", "kind": "disclosed_sample_outcomes",
         "count": int(n_disc)},
    ]
    emp_delta = None
    aborted = False
    if n_disc > 0:
        emp_delta = float(np.sum(errors & disclosed)) / n_disc
        aborted = emp_delta > cfg.error_tolerance
    message_log.append({"direction": "alice->bob", "kind": "verdict",
                        "payload": "abort" if aborted else "continue"})

    if aborted:
        sift_a = np.empty(0, dtype=np.int64)
        sift_b = np.empty(0, dtype=np.int64)
    else:
        keep = conclusive & ~disclosed
        sift_a = alice[keep].astype(np.int64)
        sift_b = (1 - bob[keep]).astype(np.int64)

    return ProtocolTranscript(
        n_pulses=n, alice_bits=alice.astype(np.int64),
        bob_axis_bits=bob.astype(np.int64), outcomes=outcomes,
        conclusive=conclusive, disclosed=disclosed,
        sifted_alice=sift_a, sifted_bob_flipped=sift_b,
        empirical_r_acc=n_concl / n, empirical_delta=emp_delta,
        message_log=message_log, aborted=aborted, attack_info=attack_info)


def apply_attack(cfg: SessionConfig, jobs: int = 1) -> ProtocolTranscript:
    """Run a session with an eavesdropper present."""
    if cfg.attack is None:
        raise ValueError("config carries no attack model")
    return run_session(cfg, jobs=jobs)


def _binom_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def estimate_statistics(t: ProtocolTranscript) -> EmpiricalStats:
    """Empirical acceptance and error rates with binomial standard errors.

    The disclosed-sample error rate is the pre-abort statistic; the
    full-conclusive-set rate is the post-hoc value used for comparison
    against the analytic figures.
    """
    n_concl = int(np.sum(t.conclusive))
    n_disc = int(np.sum(t.disclosed))
    r = n_concl / t.n_pulses
    errors = (t.alice_bits != 1 - t.bob_axis_bits) & t.conclusive
    dd = dd_se = df = df_se = None
    if n_disc > 0:
        dd = float(np.sum(errors & t.disclosed)) / n_disc
        dd_se = _binom_se(dd, n_disc)
    if n_concl > 0:
        df = float(np.sum(errors)) / n_concl
        df_se = _binom_se(df, n_concl)
    return EmpiricalStats(
        n_pulses=t.n_pulses, n_conclusive=n_concl, n_disclosed=n_disc,
        r_acc=r, r_acc_se=_binom_se(r, t.n_pulses),
        delta_disclosed=dd, delta_disclosed_se=dd_se,
        delta_full=df, delta_full_se=df_se)
