import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pmod3d.constellation import (
    JonesVector,
    PackingSource,
    StokesVector,
    arctan2,
    builtin_packing,
    degree_of_polarization,
    format_packing,
    gray,
    jones_to_stokes,
    jones_to_stokes_array,
    load_packing,
    packing_from_cartesian,
    psk_alphabet,
    qam_alphabet,
    ring_sliced_packing,
    spherical_to_jones,
    spherical_to_stokes,
    stokes_to_jones,
)
from pmod3d.errors import NonUnitPoint, NotFullyPolarized, ParseError, UnsupportedOrder, ZeroIntensity

R2 = 1 / math.sqrt(2)


def brute_min_chordal(p):
    c = p.cartesian()
    return min(np.linalg.norm(a - b) for a, b in itertools.combinations(c, 2))


# --- arctan2 ---------------------------------------------------------------

@pytest.mark.parametrize("y,x,expected", [
    (0.0, 0.0, 0.0),
    (1.0, 0.0, math.pi / 2),
    (-1.0, 0.0, -math.pi / 2),
    (0.0, -1.0, math.pi),
    (-1.0, -1.0, -3 * math.pi / 4),
    (1.0, 1.0, math.pi / 4),
])
def test_arctan2_cases(y, x, expected):
    assert arctan2(y, x) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_arctan2_matches_numpy_off_origin(y, x):
    if x == 0 and y == 0:
        return
    if x < 0 and y == 0:
        assert arctan2(y, x) == pytest.approx(math.pi)
    else:
        assert arctan2(y, x) == pytest.approx(math.atan2(y, x), abs=1e-12)


# --- Stokes / Jones --------------------------------------------------------

def test_jones_to_stokes_examples():
    s = jones_to_stokes(JonesVector(R2, 1j * R2))
    np.testing.assert_allclose(s.as_array(), [1, 0, 0, 1], atol=1e-15)
    s = jones_to_stokes(JonesVector(R2, R2))
    np.testing.assert_allclose(s.as_array(), [1, 0, 1, 0], atol=1e-15)


def test_s3_sign_matches_defining_formula():
    ex, ey = 0.3 + 0.4j, -0.2 + 0.7j
    direct = (1j * (ex * np.conj(ey) - np.conj(ex) * ey)).real
    assert jones_to_stokes(JonesVector(ex, ey)).s3 == pytest.approx(direct, abs=1e-15)


def test_degree_of_polarization_example():
    assert degree_of_polarization(StokesVector(2, 1, 1, 1)) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)


def test_degree_of_polarization_zero_intensity():
    with pytest.raises(ZeroIntensity):
        degree_of_polarization(StokesVector(0, 0, 0, 0))


def test_stokes_validation():
    with pytest.raises(ValueError):
        StokesVector(1, 1, 1, 1)
    with pytest.raises(ValueError):
        StokesVector(-1, 0, 0, 0)


def test_stokes_to_jones_rejects_partial():
    with pytest.raises(NotFullyPolarized):
        stokes_to_jones(StokesVector(2, 1, 0, 0))


@given(st.floats(-math.pi, math.pi), st.floats(0, math.pi), st.floats(0.01, 100))
def test_stokes_jones_round_trip(phi, theta, energy):
    s = spherical_to_stokes(phi, theta, energy)
    back = jones_to_stokes(stokes_to_jones(s))
    np.testing.assert_allclose(back.as_array(), s.as_array(), atol=1e-9 * energy)
    assert s.is_fully_polarized()


@given(st.floats(-math.pi, math.pi), st.floats(0, math.pi), st.floats(-10, 10))
def test_phase_invariance_of_stokes(phi, theta, xi):
    e = spherical_to_jones(phi, theta).as_array()
    a = jones_to_stokes_array(e)
    b = jones_to_stokes_array(e * np.exp(1j * xi))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_jones_to_stokes_array_shape():
    e = np.ones((3, 5, 2), dtype=complex)
    assert jones_to_stokes_array(e).shape == (3, 5, 3)


# --- packings --------------------------------------------------------------

@pytest.mark.parametrize("L,expected", [
    (2, 2.0),
    (4, 1.6329931618554518),
    (8, 1.1997248968910241),
    (16, 0.874506962063202),
])
def test_builtin_min_chordal(L, expected):
    p = builtin_packing(L)
    assert p.L == L and p.source is PackingSource.BUILTIN
    assert p.min_chordal_distance() == pytest.approx(expected, abs=1e-12)
    assert brute_min_chordal(p) == pytest.approx(expected, abs=1e-12)


def test_tetrahedron_dot_products():
    c = builtin_packing(4).cartesian()
    g = c @ c.T
    np.testing.assert_allclose(g[~np.eye(4, dtype=bool)], -1 / 3, atol=1e-12)


def test_l16_has_four_rings():
    theta = builtin_packing(16).angles()[1]
    assert len(np.unique(np.round(theta, 9))) == 4


def test_l4_pole_state():
    # pole azimuth only sets a global phase of the Jones vector
    np.testing.assert_allclose(builtin_packing(4).jones()[0], [-1j, 0], atol=1e-15)


@pytest.mark.parametrize("L", [3, 32, 1])
def test_builtin_unsupported(L):
    with pytest.raises(UnsupportedOrder):
        builtin_packing(L)


@pytest.mark.parametrize("L", [2, 4, 8, 16])
def test_builtin_labels(L):
    p = builtin_packing(L)
    assert sorted(p.labels) == [format(i, f"0{p.bits}b") for i in range(L)]


@pytest.mark.parametrize("L,expected", [(4, math.sqrt(2)), (8, 1.0), (16, 0.6180339887498948)])
def test_ring_sliced(L, expected):
    p = ring_sliced_packing(L)
    assert p.source is PackingSource.RING_SLICED
    assert p.min_chordal_distance() == pytest.approx(expected, abs=1e-12)
    if L > 4:
        assert p.min_chordal_distance() < builtin_packing(L).min_chordal_distance()


def test_packing_round_trip(tmp_path):
    for L in (2, 4, 8, 16):
        p = builtin_packing(L)
        f = tmp_path / f"p{L}.txt"
        f.write_text(format_packing(p))
        q = load_packing(f)
        assert q.labels == p.labels
        np.testing.assert_allclose(q.cartesian(), p.cartesian(), atol=1e-9)
        assert abs(q.min_chordal_distance() - p.min_chordal_distance()) < 1e-9


def test_load_packing_errors(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("# header\n1 0 0\n0 1\n")
    with pytest.raises(ParseError, match=":3:"):
        load_packing(f)
    f.write_text("2 0 0\n0 1 0\n")
    with pytest.raises(NonUnitPoint):
        load_packing(f)
    assert load_packing(f, normalize=True).L == 2
    f.write_text("1 0 0 / 0\n0 1 0\n")
    with pytest.raises(ParseError):
        load_packing(f)
    f.write_text("# nothing\n")
    with pytest.raises(ParseError):
        load_packing(f)


def test_packing_from_cartesian_auto_labels():
    p = packing_from_cartesian([[0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0]])
    assert p.labels == ("00", "01", "10", "11")


# --- alphabets -------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 4, 8, 16, 32, 64, 128])
def test_psk_gray_adjacency(N):
    a = psk_alphabet(N)
    for i in range(N):
        x, y = a[i].label, a[(i + 1) % N].label
        assert sum(c != d for c, d in zip(x, y)) == 1
    assert a[0].label == "0" * int(math.log2(N))


def test_gray_code():
    assert [gray(i) for i in range(8)] == [0, 1, 3, 2, 6, 7, 5, 4]


@pytest.mark.parametrize("M,dmin", [
    (2, 2.0), (4, 1.4142), (8, 0.8165), (16, 0.6325),
    (32, 0.4472), (64, 0.3086), (128, 0.2209), (256, 0.1534),
])
def test_qam_min_distance(M, dmin):
    a = qam_alphabet(M)
    assert len(a.points) == M
    assert np.mean(np.abs(a.points) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert a.min_distance == pytest.approx(dmin, abs=1e-4)


@pytest.mark.parametrize("M", [4, 16, 64, 256])
def test_square_qam_gray_neighbours(M):
    a = qam_alphabet(M)
    d = np.abs(a.points[:, None] - a.points[None, :])
    for i, j in zip(*np.nonzero(np.isclose(d, a.min_distance))):
        assert sum(c != e for c, e in zip(a.labels[i], a.labels[j])) == 1


def test_qam_unsupported():
    with pytest.raises(UnsupportedOrder):
        qam_alphabet(12)
