import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvb92.states import (AXIS_I, AXIS_R, AxisConvention, FockTruncationError,
                          PascsState, PhasePoint, negativity_minimum,
                          normalization, wigner, wigner_fock_oracle, wigner_xy)

# reference values computed with an independent brute-force script before
# the module was written
W_PEAK_08 = 0.3918836753      # W(0.8, 0) at alpha=0.8, j=0
W_NEG_08 = -0.0149660349      # W(-0.225, 0)
W_ORIGIN_08 = -0.0271332483   # W(0, 0)
MIN_POINT_08 = 0.0438110192
MIN_VALUE_08 = -0.0277227732


def test_normalization_values():
    assert normalization(0.0) == 1.0
    assert normalization(0.64) == pytest.approx(3.3296, abs=1e-12)
    assert normalization(1.44) == pytest.approx(1.44 ** 2 + 3 * 1.44 + 1)
    with pytest.raises(ValueError):
        normalization(-0.1)


def test_state_validation():
    with pytest.raises(ValueError):
        PascsState(2, 1.0)
    with pytest.raises(ValueError):
        PascsState(0, -0.5)
    with pytest.raises(ValueError):
        PascsState(0, math.nan)
    s = PascsState(1, 0.8)
    assert s.norm == pytest.approx(normalization(0.64))
    assert s.gamma == 0.8j


def test_phase_point_finite():
    with pytest.raises(ValueError):
        PhasePoint(math.inf, 0.0)


def test_axis_convention():
    assert AxisConvention.for_bit(0) == AxisConvention(AXIS_R, AXIS_I)
    assert AxisConvention.for_bit(1) == AxisConvention(AXIS_I, AXIS_R)


def test_wigner_reference_values():
    s = PascsState(0, 0.8)
    assert wigner(s, PhasePoint(0.8, 0.0)) == pytest.approx(W_PEAK_08, abs=1e-10)
    assert wigner(s, PhasePoint(-0.225, 0.0)) == pytest.approx(W_NEG_08, abs=1e-10)
    assert wigner(s, PhasePoint(0.0, 0.0)) == pytest.approx(W_ORIGIN_08, abs=1e-10)


def test_vacuum_limit():
    s = PascsState(0, 0.0)
    for zr, zi in [(0.0, 0.0), (0.7, -0.3), (1.5, 2.0)]:
        expected = (2.0 / math.pi) * math.exp(-2.0 * (zr * zr + zi * zi))
        assert wigner(s, PhasePoint(zr, zi)) == pytest.approx(expected, rel=1e-12)


def test_bit_one_swaps_axes():
    s0, s1 = PascsState(0, 1.1), PascsState(1, 1.1)
    grid = np.linspace(-2, 2, 9)
    for x in grid:
        for y in grid:
            assert wigner(s1, PhasePoint(x, y)) == pytest.approx(
                wigner(s0, PhasePoint(y, x)), abs=1e-14)


@given(alpha=st.floats(0.0, 2.0), zr=st.floats(-4, 4), zi=st.floats(-4, 4),
       j=st.integers(0, 1))
@settings(max_examples=80, deadline=None)
def test_wigner_bounded(alpha, zr, zi, j):
    val = wigner(PascsState(j, alpha), PhasePoint(zr, zi))
    assert abs(val) <= 2.0 / math.pi + 1e-12


def test_fock_oracle_matches_closed_form():
    rng = np.random.default_rng(11)
    for alpha in (0.6, 0.8, 1.2):
        for j in (0, 1):
            s = PascsState(j, alpha)
            for _ in range(5):
                p = PhasePoint(*rng.uniform(-2.5, 2.5, 2))
                assert wigner_fock_oracle(s, p) == pytest.approx(
                    wigner(s, p), abs=1e-10)


def test_fock_oracle_vacuum_any_truncation():
    # with alpha=0 only the vacuum coefficient survives, so even n_max=1
    # reproduces the vacuum Wigner function exactly
    s = PascsState(0, 0.0)
    p = PhasePoint(0.9, -0.4)
    expected = (2.0 / math.pi) * math.exp(-2.0 * (0.9 ** 2 + 0.4 ** 2))
    assert wigner_fock_oracle(s, p, n_max=1) == pytest.approx(expected, rel=1e-12)


def test_fock_oracle_truncation_error():
    s = PascsState(0, 1.2)
    with pytest.raises(FockTruncationError):
        wigner_fock_oracle(s, PhasePoint(0.0, 0.0), n_max=2)


def test_negativity_minimum():
    point, value = negativity_minimum(PascsState(0, 0.8))
    assert value == pytest.approx(MIN_VALUE_08, abs=1e-9)
    assert point.zr == pytest.approx(MIN_POINT_08, abs=1e-6)
    assert point.zi == 0.0
    # the minimizer maps onto the momentum axis for the other bit
    p1, v1 = negativity_minimum(PascsState(1, 0.8))
    assert v1 == pytest.approx(value, abs=1e-12)
    assert p1.zr == 0.0
    assert p1.zi == pytest.approx(point.zr, abs=1e-9)
    with pytest.raises(ValueError):
        negativity_minimum(PascsState(0, 0.0))


def test_negativity_minimum_is_global():
    # no grid point anywhere beats the reported minimum
    s = PascsState(0, 0.8)
    _, value = negativity_minimum(s)
    z = np.linspace(-4, 4, 401)
    grid = wigner_xy(s, z[:, None], z[None, :])
    assert grid.min() >= value - 1e-9
