import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmod3d.channel import awgn, make_rng, xpd_pdl_matrix
from pmod3d.constellation import builtin_packing, ring_sliced_packing
from pmod3d.errors import LabelNotFound, SingularFilter, UnsupportedOrder
from pmod3d.modem import (
    BaselineKind,
    BaselineModem,
    Filter,
    PmodConfig,
    PmodModem,
    Receiver,
    cascade_demodulate,
    joint_ml_demodulate,
    ml_detect,
    nearest_phase_index,
    pmod_modulate,
)

MODES = [(L, N) for L in (2, 4, 8, 16) for N in (2, 4, 8) if L * N >= 4]


def cfg(L, N, **kw):
    return PmodConfig(builtin_packing(L), N, **kw)


def brute_force_ml(y, hx):
    # independent oracle: explicit norm for every candidate, first minimum
    out = []
    for v in y:
        d = [float(np.sum(np.abs(v - c) ** 2)) for c in hx]
        out.append(int(np.argmin(d)))
    return np.array(out)


# --- modulation ------------------------------------------------------------

def test_modulate_examples():
    c = cfg(2, 2)
    np.testing.assert_allclose(pmod_modulate("00", c).x, [1, 0], atol=1e-15)
    np.testing.assert_allclose(pmod_modulate("01", c).x, [-1, 0], atol=1e-15)
    s = pmod_modulate("0000", cfg(4, 4))
    np.testing.assert_allclose(s.x, [-1j, 0], atol=1e-15)
    assert (s.l, s.n) == (0, 0)


def test_modulate_errors():
    with pytest.raises(ValueError):
        pmod_modulate("000", cfg(2, 2))
    with pytest.raises(LabelNotFound):
        pmod_modulate("0x", cfg(2, 2))


@pytest.mark.parametrize("L,N", MODES)
def test_envelope_constancy(L, N):
    m = PmodModem(cfg(L, N, energy=2.5))
    np.testing.assert_allclose(np.sum(np.abs(m.candidates) ** 2, axis=1), 2.5, atol=1e-12)


def test_label_order_is_sphere_then_phase():
    m = PmodModem(cfg(4, 8))
    for k, lab in enumerate(m.labels):
        l, n = divmod(k, 8)
        assert lab == m.cfg.packing.labels[l] + m.phase_labels[n]
    assert sorted(m.labels) == [format(i, "05b") for i in range(32)]


def test_config_validation():
    with pytest.raises(UnsupportedOrder):
        cfg(2, 3)
    with pytest.raises(ValueError):
        cfg(2, 2, energy=0)


# --- joint ML --------------------------------------------------------------

@pytest.mark.parametrize("L,N", MODES)
def test_zero_noise_both_receivers(L, N):
    m = PmodModem(cfg(L, N))
    k = np.arange(m.K)
    np.testing.assert_array_equal(m.detect(m.candidates), k)
    np.testing.assert_array_equal(m.detect(m.candidates, receiver=Receiver.CASCADE_ZF), k)
    np.testing.assert_array_equal(m.detect(m.candidates, n0=1e-3, receiver=Receiver.CASCADE_MMSE), k)


def test_ml_tie_goes_low():
    hx = np.array([[1, 0], [-1, 0]], dtype=complex)
    assert ml_detect(np.zeros((1, 2)), hx)[0] == 0
    assert ml_detect(np.array([[1j, 0]]), hx)[0] == 0


def test_ml_matches_brute_force_oracle():
    rng = make_rng(42)
    h = xpd_pdl_matrix(6.0, 3.0).h
    total = 0
    for L, N in [(4, 8), (8, 4), (16, 2)]:
        m = PmodModem(cfg(L, N))
        hx = m.candidates @ h.T
        idx = rng.integers(0, m.K, 3400)
        y = hx[idx] + awgn(0.3, rng, idx.size)
        np.testing.assert_array_equal(m.detect(y, h), brute_force_ml(y, hx))
        total += idx.size
    assert total >= 10_000


def test_joint_ml_demodulate_bits():
    c = cfg(8, 4)
    m = PmodModem(c)
    for bits in ("00000", "10110", "11111"):
        res = joint_ml_demodulate(pmod_modulate(bits, c).x, None, c)
        assert res.bits == bits
        assert m.labels[res.l_hat * 4 + res.n_hat] == bits


# --- cascade ---------------------------------------------------------------

@pytest.mark.parametrize("L,N", MODES)
def test_cascade_demodulate_noiseless(L, N):
    c = cfg(L, N)
    m = PmodModem(c)
    for k, x in enumerate(m.candidates):
        for f, n0 in ((Filter.ZF, 0.0), (Filter.MMSE, 1e-6)):
            res = cascade_demodulate(x, None, c, f, n0)
            assert res.l_hat * N + res.n_hat == k


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_zf_and_mmse_pick_same_phase(seed):
    rng = make_rng(seed)
    m = PmodModem(cfg(8, 8))
    h = xpd_pdl_matrix(9.0, 3.0).h
    y = m.candidates[rng.integers(0, m.K, 64)] @ h.T + awgn(0.2, rng, 64)
    lz, nz = m.cascade(y, h, Filter.ZF)
    lm, nm = m.cascade(y, h, Filter.MMSE, 0.2)
    np.testing.assert_array_equal(lz, lm)
    np.testing.assert_array_equal(nz, nm)


def test_cascade_preconditions():
    m = PmodModem(cfg(4, 4))
    with pytest.raises(ValueError):
        m.cascade(m.candidates[:1], None, Filter.MMSE, 0.0)
    with pytest.raises(SingularFilter):
        m.cascade(m.candidates[:1], np.zeros((2, 2)), Filter.ZF)
    q = PmodModem(cfg(2, 4, symbols="qam"))
    with pytest.raises(ValueError):
        q.cascade(q.candidates[:1])


def test_cascade_recovers_through_channel():
    m = PmodModem(cfg(8, 8))
    h = xpd_pdl_matrix(9.0, 6.0).h
    k = np.arange(m.K)
    np.testing.assert_array_equal(m.detect(m.candidates @ h.T, h, 0.0, Receiver.CASCADE_ZF), k)


def test_nearest_phase_wrap_and_ties():
    np.testing.assert_array_equal(
        nearest_phase_index(np.array([0.0, -0.1, 2 * math.pi - 0.1, math.pi / 4, 3 * math.pi / 4]), 4),
        [0, 0, 0, 0, 1])
    # the tie between index 3 and 0 goes low
    assert nearest_phase_index(np.array([7 * math.pi / 4]), 4)[0] == 0


# --- baselines -------------------------------------------------------------

@pytest.mark.parametrize("kind,L,N,dmin", [
    ("dual_psk", 4, 4, 1.0),
    ("single_psk", 4, 4, 0.3902),
    ("single_qam", 4, 8, 0.4472),
    ("single_qam", 8, 8, 0.3086),
    ("dual_qam", 16, 16, 0.4472),
    ("single_psk", 2, 64, 0.0491),
])
def test_baseline_min_distance(kind, L, N, dmin):
    assert BaselineModem(kind, L, N).min_distance() == pytest.approx(dmin, abs=1e-4)


@pytest.mark.parametrize("kind", list(BaselineKind))
def test_baseline_structure(kind):
    m = BaselineModem(kind, 4, 8)
    assert m.K == 32 and m.bits_per_symbol == 5
    assert np.mean(np.sum(np.abs(m.candidates) ** 2, axis=1)) == pytest.approx(1.0)
    if kind.value.startswith("single"):
        assert not np.any(m.candidates[:, 1])
    else:
        np.testing.assert_allclose(np.mean(np.abs(m.candidates) ** 2, axis=0), [0.5, 0.5])
    np.testing.assert_array_equal(m.detect(m.candidates), np.arange(32))


def test_bpsk_baseline():
    m = BaselineModem("single_psk", 2, 1)
    np.testing.assert_allclose(m.candidates[:, 0], [1, -1])
    with pytest.raises(UnsupportedOrder):
        BaselineModem("dual_qam", 2, 1)
    with pytest.raises(ValueError):
        m.detect(m.candidates, receiver="cascade_zf")


def test_pmod_min_distance_matches_candidates():
    from pmod3d.analysis import min_distance
    for L, N in [(4, 8), (8, 8), (16, 4)]:
        c = cfg(L, N)
        x = PmodModem(c).candidates
        brute = min(np.linalg.norm(a - b) for a, b in itertools.combinations(x, 2))
        assert min_distance(c) == pytest.approx(brute, abs=1e-12)


def test_ring_sliced_modem():
    m = PmodModem(PmodConfig(ring_sliced_packing(8), 4))
    np.testing.assert_array_equal(m.detect(m.candidates), np.arange(32))
