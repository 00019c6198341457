"""Polarization math, sphere packings and symbol alphabets.

Stokes space is laid out with S1 on the z-axis, S2 on the x-axis and S3 on
the y-axis, so a point at elevation ``theta`` and azimuth ``phi`` sits at
``(S1, S2, S3) = (cos theta, sin theta cos phi, sin theta sin phi)``.
All angles are radians and all energies are linear.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    NonUnitPoint,
    NotFullyPolarized,
    ParseError,
    UnsupportedOrder,
    ZeroIntensity,
)

TWO_PI = 2.0 * math.pi

_POLARIZED_TOL = 1e-9


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def gray(n: int) -> int:
    return n ^ (n >> 1)


def bitstring(value: int, width: int) -> str:
    if width == 0:
        return ""
    return format(value, f"0{width}b")


def arctan2(y: float, x: float) -> float:
    """Four-quadrant arctangent in (-pi, pi], with ``arctan2(0, 0) = 0``."""
    if x > 0:
        return math.atan(y / x)
    if x < 0:
        if y >= 0:
            return math.atan(y / x) + math.pi
        return math.atan(y / x) - math.pi
    if y > 0:
        return math.pi / 2
    if y < 0:
        return -math.pi / 2
    return 0.0


# ---------------------------------------------------------------------------
# Stokes / Jones
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StokesVector:
    s0: float
    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        if self.s0 < 0:
            raise ValueError(f"s0 must be non-negative, got {self.s0}")
        excess = self.s1**2 + self.s2**2 + self.s3**2 - self.s0**2
        if excess > _POLARIZED_TOL * max(self.s0**2, 1e-300):
            raise ValueError("Stokes vector violates s0^2 >= s1^2 + s2^2 + s3^2")

    @property
    def polarized_power(self) -> float:
        return math.sqrt(self.s1**2 + self.s2**2 + self.s3**2)

    def is_fully_polarized(self, tol: float = _POLARIZED_TOL) -> bool:
        return abs(self.s0**2 - self.polarized_power**2) <= tol * self.s0**2

    def as_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3])


@dataclass(frozen=True)
class JonesVector:
    ex: complex
    ey: complex

    @property
    def energy(self) -> float:
        return abs(self.ex) ** 2 + abs(self.ey) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.ex, self.ey], dtype=complex)


def stokes_to_jones(s: StokesVector) -> JonesVector:
    """Jones vector of a fully polarized Stokes vector.

    The relative phase is recovered as ``arctan2(s3, s2) / 2`` and split
    symmetrically between the two components.
    """
    if not s.is_fully_polarized():
        raise NotFullyPolarized(
            f"|s0^2 - |s|^2| exceeds {_POLARIZED_TOL:g} s0^2 for {s}"
        )
    half = arctan2(s.s3, s.s2) / 2.0
    ax = math.sqrt(max(s.s0 + s.s1, 0.0) / 2.0)
    ay = math.sqrt(max(s.s0 - s.s1, 0.0) / 2.0)
    return JonesVector(ax * complex(math.cos(half), -math.sin(half)),
                       ay * complex(math.cos(half), math.sin(half)))


def spherical_to_jones(phi: float, theta: float, energy: float = 1.0) -> JonesVector:
    if energy <= 0:
        raise ValueError("energy must be positive")
    amp = math.sqrt(energy)
    return JonesVector(
        amp * math.cos(theta / 2) * complex(math.cos(phi / 2), -math.sin(phi / 2)),
        amp * math.sin(theta / 2) * complex(math.cos(phi / 2), math.sin(phi / 2)),
    )


def spherical_to_stokes(phi: float, theta: float, energy: float = 1.0) -> StokesVector:
    return StokesVector(
        energy,
        energy * math.cos(theta),
        energy * math.sin(theta) * math.cos(phi),
        energy * math.sin(theta) * math.sin(phi),
    )


def jones_to_stokes(e: JonesVector) -> StokesVector:
    px = abs(e.ex) ** 2
    py = abs(e.ey) ** 2
    cross = e.ex.conjugate() * e.ey
    return StokesVector(px + py, px - py, 2.0 * cross.real, 2.0 * cross.imag)


def jones_to_stokes_array(e: np.ndarray) -> np.ndarray:
    """Vectorized ``(..., 2)`` complex -> ``(..., 3)`` real ``(s1, s2, s3)``."""
    ex = e[..., 0]
    ey = e[..., 1]
    cross = np.conj(ex) * ey
    return np.stack(
        [np.abs(ex) ** 2 - np.abs(ey) ** 2, 2.0 * cross.real, 2.0 * cross.imag],
        axis=-1,
    )


def degree_of_polarization(s: StokesVector) -> float:
    if s.s0 <= 0:
        raise ZeroIntensity("degree of polarization needs s0 > 0")
    p = s.polarized_power / s.s0
    if 1.0 < p <= 1.0 + 1e-12:
        return 1.0
    return p


# ---------------------------------------------------------------------------
# Sphere packings
# ---------------------------------------------------------------------------


class PackingSource(str, enum.Enum):
    BUILTIN = "builtin"
    FILE = "file"
    RING_SLICED = "ring_sliced"


@dataclass(frozen=True)
class SpherePoint:
    phi: float
    theta: float
    label: str

    def __post_init__(self):
        if not 0.0 <= self.phi < TWO_PI:
            raise ValueError(f"phi={self.phi} outside [0, 2pi)")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        if self.label and set(self.label) - {"0", "1"}:
            raise ValueError(f"label {self.label!r} is not a bit string")

    @property
    def cartesian(self) -> np.ndarray:
        """Unit Stokes direction ``(s1, s2, s3)``."""
        st = math.sin(self.theta)
        return np.array([math.cos(self.theta), st * math.cos(self.phi), st * math.sin(self.phi)])

    def jones(self, energy: float = 1.0) -> JonesVector:
        return spherical_to_jones(self.phi, self.theta, energy)


@dataclass(frozen=True)
class Packing:
    points: tuple[SpherePoint, ...]
    source: PackingSource = PackingSource.BUILTIN

    def __post_init__(self):
        if len(self.points) < 1:
            raise ValueError("a packing needs at least one point")
        labels = [p.label for p in self.points]
        if len(set(labels)) != len(labels):
            raise ValueError("packing labels must be distinct")
        if len({len(lab) for lab in labels}) != 1:
            raise ValueError("packing labels must share one length")

    @property
    def L(self) -> int:
        return len(self.points)

    @property
    def bits(self) -> int:
        return len(self.points[0].label)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.points)

    def cartesian(self) -> np.ndarray:
        return np.array([p.cartesian for p in self.points])

    def angles(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([p.phi for p in self.points]),
                np.array([p.theta for p in self.points]))

    def jones(self, energy: float = 1.0) -> np.ndarray:
        """``(L, 2)`` array of Jones vectors."""
        return np.array([p.jones(energy).as_array() for p in self.points])

    def index_of(self, label: str) -> int:
        for i, p in enumerate(self.points):
            if p.label == label:
                return i
        raise KeyError(label)

    def min_chordal_distance(self) -> float:
        c = self.cartesian()
        d = np.linalg.norm(c[:, None, :] - c[None, :, :], axis=-1)
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())


def _point(phi: float, theta: float, label: str) -> SpherePoint:
    return SpherePoint(phi % TWO_PI, theta, label)


@lru_cache(maxsize=None)
def builtin_packing(L: int) -> Packing:
    """Tabulated packings for ``L`` in {2, 4, 8, 16} with Gray bit labels.

    The north pole of the ``L=4`` tetrahedron carries azimuth ``pi``. At the
    pole the azimuth has no geometric meaning and only fixes the carrier
    phase of that state; ``pi`` is the reference that makes the 4xN symbol
    sets reach minimum distances 1.0 (N=2) and 0.9194 (N=4).
    """
    pi = math.pi
    if L == 2:
        rows = [("0", 0.0, 0.0), ("1", 0.0, pi)]
    elif L == 4:
        a = math.acos(-1.0 / 3.0)
        rows = [("00", pi, 0.0), ("01", 0.0, a), ("10", 2 * pi / 3, a), ("11", 4 * pi / 3, a)]
    elif L == 8:
        rows = [
            ("000", 0.0, pi / 3), ("001", pi / 2, pi / 3),
            ("010", 3 * pi / 2, pi / 3), ("011", pi, pi / 3),
            ("100", pi / 4, 2 * pi / 3), ("101", 3 * pi / 4, 2 * pi / 3),
            ("110", 7 * pi / 4, 2 * pi / 3), ("111", 5 * pi / 4, 2 * pi / 3),
        ]
    elif L == 16:
        a = 2.0 / 3.0
        odd = [pi / 4, 3 * pi / 4, 7 * pi / 4, 5 * pi / 4]
        even = [0.0, pi / 2, 3 * pi / 2, pi]
        rings = [(odd, a), (even, 2 * a), (even, pi - a), (odd, pi - 2 * a)]
        rows = [
            (bitstring(4 * r + j, 4), phi, theta)
            for r, (phis, theta) in enumerate(rings)
            for j, phi in enumerate(phis)
        ]
    else:
        raise UnsupportedOrder(f"no built-in packing for L={L}; use load_packing")
    return Packing(tuple(_point(phi, th, lab) for lab, phi, th in rows), PackingSource.BUILTIN)


def ring_sliced_packing(L: int) -> Packing:
    """Equal-elevation rings of four points each, no inter-ring offset.

    ``max(1, L // 4)`` rings sit at elevations equally spaced inside
    ``(0, pi)``. Labels are the Gray code of the ring index followed by the
    Gray code of the position within the ring.
    """
    if L not in (4, 8, 16):
        raise UnsupportedOrder(f"ring-sliced packing supports L in {{4, 8, 16}}, got {L}")
    rings = max(1, L // 4)
    ring_bits = int(math.log2(rings))
    pts = []
    for k in range(rings):
        theta = (k + 1) * math.pi / (rings + 1)
        for j in range(4):
            label = bitstring(gray(k), ring_bits) + bitstring(gray(j), 2)
            pts.append(_point(j * math.pi / 2, theta, label))
    return Packing(tuple(pts), PackingSource.RING_SLICED)


def packing_from_cartesian(xyz, labels=None, source=PackingSource.FILE) -> Packing:
    """Build a packing from ``(x, y, z) = (s2, s3, s1)`` unit vectors."""
    xyz = np.asarray(xyz, dtype=float)
    n = len(xyz)
    if labels is None:
        width = max(1, math.ceil(math.log2(n))) if n > 1 else 1
        labels = [bitstring(i, width) for i in range(n)]
    pts = []
    for (x, y, z), lab in zip(xyz, labels):
        norm = math.sqrt(x * x + y * y + z * z)
        x, y, z = x / norm, y / norm, z / norm
        theta = math.acos(min(1.0, max(-1.0, z)))
        pts.append(_point(arctan2(y, x), theta, lab))
    return Packing(tuple(pts), source)


def load_packing(path, normalize: bool = False, unit_tol: float = 1e-6) -> Packing:
    """Read a packing file.

    One point per line as ``x y z`` optionally followed by ``/ bitlabel``.
    Blank lines and lines starting with ``#`` are skipped. Points are
    rescaled onto the unit sphere; with ``normalize=False`` a point whose
    norm is off by more than ``unit_tol`` raises :class:`NonUnitPoint`.
    """
    path = Path(path)
    coords, labels = [], []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        body, sep, label = line.partition("/")
        fields = body.split()
        if len(fields) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 coordinates, got {len(fields)}")
        try:
            x, y, z = (float(f) for f in fields)
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        label = label.strip()
        if sep and (not label or set(label) - {"0", "1"}):
            raise ParseError(f"{path}:{lineno}: bad bit label {label!r}")
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0 or not math.isfinite(norm):
            raise ParseError(f"{path}:{lineno}: degenerate point")
        if not normalize and abs(norm - 1.0) > unit_tol:
            raise NonUnitPoint(f"{path}:{lineno}: norm {norm:.9g} is not 1")
        coords.append((x, y, z))
        labels.append(label if sep else None)
    if not coords:
        raise ParseError(f"{path}: no points")
    given = [lab is not None for lab in labels]
    if any(given) and not all(given):
        raise ParseError(f"{path}: bit labels must be given for all points or none")
    try:
        return packing_from_cartesian(coords, labels if all(given) else None)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def format_packing(packing: Packing, digits: int = 10) -> str:
    """Inverse of :func:`load_packing`."""
    out = [f"# {packing.L} points, source={packing.source.value}"]
    for p in packing.points:
        s1, s2, s3 = p.cartesian
        out.append(f"{s2:.{digits}g} {s3:.{digits}g} {s1:.{digits}g} / {p.label}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Phase and QAM alphabets
# ---------------------------------------------------------------------------


class PskSymbol(NamedTuple):
    n: int
    N: int
    label: str

    @property
    def phase(self) -> float:
        return TWO_PI * self.n / self.N


def psk_alphabet(N: int) -> list[PskSymbol]:
    if N < 2 or not is_power_of_two(N):
        raise UnsupportedOrder(f"PSK order must be a power of two >= 2, got {N}")
    nb = int(math.log2(N))
    return [PskSymbol(n, N, bitstring(gray(n), nb)) for n in range(N)]


def psk_points(N: int, energy: float = 1.0) -> np.ndarray:
    return math.sqrt(energy) * np.exp(1j * TWO_PI * np.arange(N) / N)


class Alphabet(NamedTuple):
    points: np.ndarray
    labels: tuple[str, ...]

    @property
    def min_distance(self) -> float:
        p = self.points
        d = np.abs(p[:, None] - p[None, :])
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())


QAM_ORDERS = (2, 4, 8, 16, 32, 64, 128, 256)


def qam_alphabet(M: int, energy: float = 1.0) -> Alphabet:
    """Gray-labelled QAM with average energy ``energy``.

    Even powers of two give square grids, 8 gives a 4x2 rectangle, and 32
    and 128 give cross constellations folded from a rectangular Gray grid
    (quasi-Gray labels on the folded points).
    """
    if M not in QAM_ORDERS:
        raise UnsupportedOrder(f"QAM order must be one of {QAM_ORDERS}, got {M}")
    if energy <= 0:
        raise ValueError("energy must be positive")
    if M == 2:
        pts = np.array([1.0 + 0j, -1.0 + 0j])
        return Alphabet(pts * math.sqrt(energy), ("0", "1"))
    k = int(math.log2(M))
    bi, bq = (k + 1) // 2, k // 2
    ni, nq = 1 << bi, 1 << bq
    pts, labels = [], []
    for i in range(ni):
        for q in range(nq):
            re = 2 * i - (ni - 1)
            im = 2 * q - (nq - 1)
            if M >= 32 and k % 2 == 1 and abs(re) > 3 * nq // 2:
                # fold the outer columns onto the top and bottom rows
                re, im = (int(math.copysign(nq - abs(im), re)),
                          int(math.copysign(abs(re) - nq // 2, im)))
            pts.append(complex(re, im))
            labels.append(bitstring(gray(i), bi) + bitstring(gray(q), bq))
    pts = np.array(pts)
    pts *= math.sqrt(energy / np.mean(np.abs(pts) ** 2))
    return Alphabet(pts, tuple(labels))
