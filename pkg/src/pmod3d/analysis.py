"""Closed-form error analysis and minimum-distance tables."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import integrate
from scipy.special import erfc, ndtr

from .constellation import Packing, SpherePoint, builtin_packing, is_power_of_two, psk_alphabet
from .errors import LengthMismatch, MissingPacking, QuadratureNotConverged, UnsupportedOrder
from .modem import (
    BaselineKind,
    BaselineModem,
    Modem,
    PmodConfig,
    PmodModem,
    candidate_min_distance,
)

# Reference minimum distances of the lattice (LAM) baseline, which is not
# constructed here. Keyed by spectral efficiency in bits per symbol.
LAM_REFERENCE = {2: 1.4142, 3: 1.4142, 4: 1.0, 5: 0.8165, 6: 0.7559, 7: 0.6324, 8: 0.5443}

TABLE_COLUMNS = ("pmod3d", "dual_qam", "dual_psk", "single_qam", "single_psk")
TABLE_HEADER = ("LxN",) + TABLE_COLUMNS + ("lam_ref", "is_max")


def qfunc(x):
    """Gaussian tail probability ``P(Z > x)``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def hamming(a: str, b: str) -> int:
    if len(a) != len(b):
        raise LengthMismatch(f"bit strings of length {len(a)} and {len(b)}")
    return sum(ca != cb for ca, cb in zip(a, b))


def distance_sq(phi1, theta1, xi1, phi2, theta2, xi2, energy=1.0):
    """Squared Jones-domain distance between two 3D PMod symbols.

    Works elementwise on arrays. ``(phi, theta)`` locate the sphere points,
    ``xi`` are the phase-symbol angles.
    """
    dxi = np.subtract(xi1, xi2)
    half_dphi = np.subtract(phi1, phi2) / 2.0
    co = np.cos(np.asarray(theta1) / 2) * np.cos(np.asarray(theta2) / 2)
    si = np.sin(np.asarray(theta1) / 2) * np.sin(np.asarray(theta2) / 2)
    return 2.0 * energy * (1.0 - (np.cos(dxi - half_dphi) * co + np.cos(dxi + half_dphi) * si))


def pair_distance_sq(p1: SpherePoint, xi1: float, p2: SpherePoint, xi2: float,
                     energy: float = 1.0) -> float:
    if energy <= 0:
        raise ValueError("energy must be positive")
    return float(distance_sq(p1.phi, p1.theta, xi1, p2.phi, p2.theta, xi2, energy))


def _pair_grid(cfg: PmodConfig):
    """Angles of every symbol ``k = l*N + n`` of a PSK configuration."""
    phi, theta = cfg.packing.angles()
    xi = 2.0 * math.pi * np.arange(cfg.N) / cfg.N
    return (np.repeat(phi, cfg.N), np.repeat(theta, cfg.N), np.tile(xi, cfg.L))


def min_distance(obj) -> float:
    """Minimum pairwise Euclidean distance of a configuration or modem.

    A PSK :class:`PmodConfig` goes through the closed-form distance; modems
    and raw ``(K, 2)`` candidate arrays are searched directly.
    """
    if isinstance(obj, PmodConfig) and obj.symbols == "psk":
        phi, theta, xi = _pair_grid(obj)
        d2 = distance_sq(phi[:, None], theta[:, None], xi[:, None],
                         phi[None, :], theta[None, :], xi[None, :], obj.energy)
        d2[np.diag_indices_from(d2)] = np.inf
        return float(math.sqrt(max(d2.min(), 0.0)))
    if isinstance(obj, PmodConfig):
        obj = PmodModem(obj)
    if isinstance(obj, Modem):
        return obj.min_distance()
    return candidate_min_distance(np.asarray(obj))


# ---------------------------------------------------------------------------
# PSK error probability
# ---------------------------------------------------------------------------


def _inner(a):
    # integral of v * exp(-(v - a)^2 / 2) over v in [0, inf)
    return np.exp(-a * a / 2.0) + a * math.sqrt(2.0 * math.pi) * ndtr(a)


def psk_ser_integral(N: int, gamma: float) -> float:
    """M-PSK symbol error probability at symbol SNR ``gamma``.

    Evaluates the phase-density integral over the decision sector, with the
    radial integral done in closed form.
    """
    if gamma == 0:
        return 1.0 - 1.0 / N
    root = math.sqrt(2.0 * gamma)

    def density(t):
        return math.exp(-gamma * math.sin(t) ** 2) * _inner(root * math.cos(t))

    val, err = integrate.quad(density, 0.0, math.pi / N, epsabs=1e-14, epsrel=1e-13, limit=200)
    if err > 1e-11:
        raise QuadratureNotConverged(f"N={N}, gamma={gamma}: error estimate {err:g}")
    # symmetric integrand: twice the half sector
    return max(0.0, 1.0 - 2.0 * val / (2.0 * math.pi))


def exact_psk_ber(N: int, gamma: float) -> float:
    """Bit error rate of Gray-mapped N-PSK at symbol SNR ``gamma = E/N0``.

    BPSK and QPSK are exact closed forms. For N >= 8 the symbol error
    probability is integrated numerically and divided by ``log2(N)``.
    """
    if N < 2 or not is_power_of_two(N):
        raise UnsupportedOrder(f"PSK order must be a power of two >= 2, got {N}")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if math.isinf(gamma):
        return 0.0
    if N == 2:
        return float(qfunc(math.sqrt(2.0 * gamma)))
    if N == 4:
        q = float(qfunc(math.sqrt(gamma)))
        return q * (1.0 - q / 2.0)
    return psk_ser_integral(N, gamma) / math.log2(N)


# ---------------------------------------------------------------------------
# Union bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BerBound:
    signal: float
    polsk: float
    joint: float

    @property
    def total(self) -> float:
        return self.signal + self.polsk + self.joint


def _label_matrix(labels) -> np.ndarray:
    bits = np.array([[c == "1" for c in lab] for lab in labels], dtype=np.int64)
    return np.sum(bits[:, None, :] != bits[None, :, :], axis=-1)


def union_bound(cfg: PmodConfig, gamma: float) -> BerBound:
    """Three-term BER bound of a PSK configuration at ``gamma = E/N0``.

    ``signal`` covers phase errors on the right sphere point and uses the
    exact PSK BER; ``polsk`` covers sphere errors with the right phase;
    ``joint`` covers pairs wrong in both. All terms are normalized by the
    total bits per symbol.
    """
    if cfg.symbols != "psk":
        raise ValueError("the union bound is derived for PSK phase alphabets")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if math.isinf(gamma):
        return BerBound(0.0, 0.0, 0.0)
    L, N, E = cfg.L, cfg.N, cfg.energy
    nbits = cfg.Lb + cfg.Nb
    signal = cfg.Nb / nbits * exact_psk_ber(N, gamma) if N > 1 else 0.0

    phi, theta = cfg.packing.angles()
    d_l = _label_matrix(cfg.packing.labels)
    # 1 / (2 N0) = gamma / (2 E)
    scale = gamma / (2.0 * E)

    d2_sphere = distance_sq(phi[:, None], theta[:, None], 0.0, phi[None, :], theta[None, :], 0.0, E)
    off = ~np.eye(L, dtype=bool)
    polsk = np.sum(d_l[off] * qfunc(np.sqrt(np.clip(d2_sphere[off], 0, None) * scale))) / (L * nbits)

    d_n = _label_matrix([s.label for s in psk_alphabet(N)])
    xi = 2.0 * math.pi * np.arange(N) / N
    # axes: (l', l, n', n)
    d2 = distance_sq(phi[:, None, None, None], theta[:, None, None, None], xi[None, None, :, None],
                     phi[None, :, None, None], theta[None, :, None, None], xi[None, None, None, :], E)
    weight = d_l[:, :, None, None] + d_n[None, None, :, :]
    mask = off[:, :, None, None] & ~np.eye(N, dtype=bool)[None, None, :, :]
    joint = np.sum((weight * qfunc(np.sqrt(np.clip(d2, 0, None) * scale)))[mask]) / (L * N * nbits)
    return BerBound(float(signal), float(polsk), float(joint))


# ---------------------------------------------------------------------------
# Minimum-distance tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    L: int
    N: int
    pmod3d: float | None
    dual_qam: float
    dual_psk: float
    single_qam: float
    single_psk: float
    lam_ref: float
    is_max: tuple[str, ...] = ()

    @property
    def mode(self) -> str:
        return f"{self.L}x{self.N}"

    def value(self, column: str) -> float | None:
        return getattr(self, column)


def factorizations(se: int) -> list[tuple[int, int]]:
    """``L x N`` splits of ``se`` bits, extreme splits first, mirrors paired."""
    out = []
    for a in range(1, se // 2 + 1):
        b = se - a
        out.append((2**a, 2**b))
        if a != b:
            out.append((2**b, 2**a))
    return out


def mindist_table(se: int, packings: Mapping[int, Packing] | None = None,
                  strict: bool = False, tol: float = 1e-4) -> list[TableRow]:
    """Minimum distances of every ``L x N`` mode carrying ``se`` bits.

    Sphere packings come from ``packings`` when given there, otherwise from
    the built-in set. Rows whose packing is unavailable are skipped with a
    warning, or raise :class:`MissingPacking` when ``strict``. The
    ``is_max`` field names the columns (LAM excluded) that hold the largest
    value of the whole table, within ``tol``.
    """
    if not 2 <= se <= 8:
        raise ValueError(f"spectral efficiency must be in 2..8, got {se}")
    packings = dict(packings or {})
    rows = []
    for L, N in factorizations(se):
        pack = packings.get(L)
        if pack is None:
            try:
                pack = builtin_packing(L)
            except UnsupportedOrder:
                if strict:
                    raise MissingPacking(f"no packing for L={L}") from None
                warnings.warn(f"skipping {L}x{N}: no packing for L={L}", stacklevel=2)
                continue
        cells = {"pmod3d": min_distance(PmodConfig(pack, N))}
        for kind in BaselineKind:
            cells[kind.value] = min_distance(BaselineModem(kind, L, N))
        rows.append(TableRow(L, N, lam_ref=LAM_REFERENCE[se], **cells))

    best = max(r.value(c) for r in rows for c in TABLE_COLUMNS if r.value(c) is not None)
    marked = []
    for r in rows:
        winners = tuple(c for c in TABLE_COLUMNS
                        if r.value(c) is not None and r.value(c) >= best - tol)
        marked.append(TableRow(**{**r.__dict__, "is_max": winners}))
    return marked


def _fmt(v) -> str:
    return "" if v is None else f"{v:.10g}"


def table_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for r in rows:
        w.writerow([r.mode] + [_fmt(r.value(c)) for c in TABLE_COLUMNS]
                   + [_fmt(r.lam_ref), ";".join(r.is_max)])
    return buf.getvalue()
