import math

import numpy as np
import pytest

from cvb92.channel import (ChannelModel, EvePoint, FiberSpec,
                           IDENTITY_CHANNEL, resolve_channel,
                           transmittance_from_distance, two_mode_wigner,
                           two_mode_wigner_xy)
from cvb92.quadrature import gauss_envelope_rule
from cvb92.states import PascsState, PhasePoint, wigner, wigner_xy


def test_channel_reflectance_derived():
    ch = ChannelModel(0.7)
    assert ch.r_amp == pytest.approx(math.sqrt(1 - 0.49), abs=1e-15)
    assert ch.t_amp ** 2 + ch.r_amp ** 2 == pytest.approx(1.0, abs=1e-12)


def test_channel_validation():
    with pytest.raises(ValueError):
        ChannelModel(0.0)
    with pytest.raises(ValueError):
        ChannelModel(1.2)
    with pytest.raises(ValueError):
        ChannelModel(0.7, 0.5)   # inconsistent pair
    assert IDENTITY_CHANNEL.r_amp == 0.0


def test_fiber_transmittance():
    ch = transmittance_from_distance(FiberSpec(0.0))
    assert ch.t_amp == pytest.approx(math.sqrt(0.9), abs=1e-15)
    ch10 = transmittance_from_distance(FiberSpec(10.0))
    assert ch10.t_amp == pytest.approx(
        math.sqrt(0.9 * 10.0 ** (-0.2)), abs=1e-15)
    with pytest.raises(ValueError):
        FiberSpec(-1.0)
    with pytest.raises(ValueError):
        FiberSpec(5.0, attenuation_exp=0.0)
    with pytest.raises(ValueError):
        FiberSpec(5.0, detector_eff=1.5)


def test_resolve_channel():
    ch = ChannelModel(0.8)
    assert resolve_channel(ch) is ch
    assert resolve_channel(FiberSpec(0.0)).t_amp == pytest.approx(
        math.sqrt(0.9))
    with pytest.raises(TypeError):
        resolve_channel(0.8)


def test_identity_channel_factorizes():
    s = PascsState(0, 1.2)
    for zr, zi, er, ei in [(0.5, -0.2, 0.3, 0.1), (-1.0, 0.8, -0.4, 0.9)]:
        val = two_mode_wigner(s, IDENTITY_CHANNEL, PhasePoint(zr, zi),
                              EvePoint(er, ei))
        vac = (2 / math.pi) * math.exp(-2 * (er * er + ei * ei))
        assert val == pytest.approx(wigner(s, PhasePoint(zr, zi)) * vac,
                                    rel=1e-12)


@pytest.mark.parametrize("t", [0.5, 0.7, 1.0])
@pytest.mark.parametrize("alpha", [0.6, 0.8, 1.2])
def test_two_mode_normalization(t, alpha):
    s = PascsState(0, alpha)
    ch = ChannelModel(t)
    zr, wzr = gauss_envelope_rule(alpha * ch.t_amp, 32)
    zi, wzi = gauss_envelope_rule(0.0, 32)
    er, wer = gauss_envelope_rule(-alpha * ch.r_amp, 32)
    ei, wei = gauss_envelope_rule(0.0, 32)
    vals = two_mode_wigner_xy(
        s, ch, zr[:, None, None, None], zi[None, :, None, None],
        er[None, None, :, None], ei[None, None, None, :])
    total = np.einsum("abcd,a,b,c,d->", vals, wzr, wzi, wer, wei)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_reflectance_sign_unobservable():
    # flipping R's sign leaves the signal-mode statistics unchanged once
    # the reflected mode is integrated out
    s = PascsState(0, 0.9)
    plus = ChannelModel(0.7)
    minus = ChannelModel(0.7, -plus.r_amp)
    e, we = gauss_envelope_rule(0.0, 32)
    e2, we2 = gauss_envelope_rule(-0.9 * plus.r_amp, 32)
    e2m, we2m = gauss_envelope_rule(0.9 * plus.r_amp, 32)
    for zr, zi in [(0.4, -0.1), (-0.8, 0.6)]:
        a = np.einsum("cd,c,d->", two_mode_wigner_xy(
            s, plus, zr, zi, e2[:, None], e[None, :]), we2, we)
        b = np.einsum("cd,c,d->", two_mode_wigner_xy(
            s, minus, zr, zi, e2m[:, None], e[None, :]), we2m, we)
        assert a == pytest.approx(b, rel=1e-10)


def test_single_mode_marginalizes_to_wigner():
    # integrating the reflected mode out of the two-mode function at T=1
    # returns the signal Wigner function
    s = PascsState(1, 0.6)
    e, we = gauss_envelope_rule(0.0, 32)
    vals = two_mode_wigner_xy(s, IDENTITY_CHANNEL, 0.3, -0.7,
                              e[:, None], e[None, :])
    reduced = np.einsum("cd,c,d->", vals, we, we)
    assert reduced == pytest.approx(float(wigner_xy(s, 0.3, -0.7)), rel=1e-10)
