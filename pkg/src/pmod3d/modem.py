"""3D PMod and baseline dual-polarization modems.

Every modem is a finite set of ``K`` candidate Jones vectors (rows of
``candidates``) with one bit label each. Symbol ``k`` of a 3D PMod modem is
sphere point ``l = k // N`` with phase index ``n = k % N``; its label is the
sphere label followed by the phase label.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import as_matrix
from .constellation import (
    Packing,
    is_power_of_two,
    jones_to_stokes_array,
    psk_alphabet,
    psk_points,
    qam_alphabet,
)
from .errors import LabelNotFound, SingularFilter, UnsupportedOrder

_TIE_RTOL = 1e-12


class Receiver(str, enum.Enum):
    JOINT = "joint"
    CASCADE_ZF = "cascade_zf"
    CASCADE_MMSE = "cascade_mmse"


class Filter(str, enum.Enum):
    ZF = "zf"
    MMSE = "mmse"


class Modem:
    """Common surface used by the Monte Carlo engine and the CLI."""

    name: str
    candidates: np.ndarray
    labels: tuple[str, ...]
    energy: float

    @property
    def K(self) -> int:
        return len(self.labels)

    @property
    def bits_per_symbol(self) -> int:
        return len(self.labels[0])

    @cached_property
    def label_words(self) -> np.ndarray:
        """Integer value of each symbol's label."""
        return np.array([int(lab, 2) for lab in self.labels], dtype=np.int64)

    @cached_property
    def word_to_index(self) -> np.ndarray:
        lut = np.full(1 << self.bits_per_symbol, -1, dtype=np.int64)
        lut[self.label_words] = np.arange(self.K)
        return lut

    def index_of(self, bits: str) -> int:
        if len(bits) != self.bits_per_symbol:
            raise ValueError(f"expected {self.bits_per_symbol} bits, got {len(bits)}")
        try:
            return self.labels.index(bits)
        except ValueError:
            raise LabelNotFound(bits) from None

    def modulate(self, bits: str) -> np.ndarray:
        return self.candidates[self.index_of(bits)].copy()

    def min_distance(self) -> float:
        return candidate_min_distance(self.candidates)

    def detect(self, y: np.ndarray, h=None, n0: float = 0.0,
               receiver: Receiver | str = Receiver.JOINT) -> np.ndarray:
        """Symbol indices for a ``(B, 2)`` batch of received vectors."""
        if Receiver(receiver) is not Receiver.JOINT:
            raise ValueError(f"{self.name} only supports the joint receiver")
        return ml_detect(y, self.candidates @ as_matrix(h).T)


def candidate_min_distance(x: np.ndarray) -> float:
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def ml_detect(y: np.ndarray, hx: np.ndarray) -> np.ndarray:
    """Minimum-distance decision over the received candidates ``hx``.

    Candidates whose metric is within a relative ``1e-12`` of the best one
    count as tied, and ties resolve to the lowest index.
    """
    y = np.ascontiguousarray(np.atleast_2d(y), dtype=complex)
    yr = y.view(float)
    hr = np.ascontiguousarray(hx, dtype=complex).view(float)
    energy = np.einsum("ki,ki->k", hr, hr)
    # (K, B) layout keeps the reductions over K elementwise across rows
    metric = (-2.0 * hr) @ yr.T
    metric += energy[:, None]
    thr = metric.min(axis=0)
    scale = np.einsum("bi,bi->b", yr, yr)
    scale += 1.0 + energy.max()
    thr += _TIE_RTOL * scale
    tied = metric <= thr
    idx = np.full(yr.shape[0], hr.shape[0] - 1, dtype=np.int64)
    for k in range(hr.shape[0] - 2, -1, -1):
        np.copyto(idx, k, where=tied[k])
    return idx


def nearest_phase_index(xi: np.ndarray, N: int) -> np.ndarray:
    """Closest of ``N`` equally spaced phases, wrap-aware; exact ties go low."""
    k = np.mod(xi, 2.0 * math.pi) * (N / (2.0 * math.pi))
    lo = np.floor(k).astype(np.int64) % N
    frac = k - np.floor(k)
    hi = (lo + 1) % N
    return np.where(frac < 0.5, lo, np.where(frac > 0.5, hi, np.minimum(lo, hi)))


# ---------------------------------------------------------------------------
# 3D PMod
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PmodConfig:
    """Sphere packing plus phase alphabet.

    ``symbols="qam"`` swaps the PSK phase alphabet for a unit-energy QAM one
    (2D PMod with ``L = 2``); the constant envelope, the cascade receiver and
    the union bound then no longer apply.
    """

    packing: Packing
    psk_order: int
    energy: float = 1.0
    symbols: str = "psk"

    def __post_init__(self):
        L, N = self.packing.L, self.psk_order
        if not is_power_of_two(L) or not is_power_of_two(N):
            raise UnsupportedOrder(f"L={L} and N={N} must be powers of two")
        if L < 2 or N < 2 or L * N < 4:
            raise UnsupportedOrder(f"L x N = {L}x{N} is too small")
        if self.packing.bits != int(math.log2(L)):
            raise UnsupportedOrder("packing labels do not carry log2(L) bits")
        if self.energy <= 0:
            raise ValueError("energy must be positive")
        if self.symbols not in ("psk", "qam"):
            raise ValueError(f"unknown symbol alphabet {self.symbols!r}")

    @property
    def L(self) -> int:
        return self.packing.L

    @property
    def N(self) -> int:
        return self.psk_order

    @property
    def Lb(self) -> int:
        return int(math.log2(self.L))

    @property
    def Nb(self) -> int:
        return int(math.log2(self.N))


@dataclass(frozen=True)
class PmodSymbol:
    x: np.ndarray
    l: int
    n: int


@dataclass(frozen=True)
class DemodResult:
    l_hat: int
    n_hat: int
    bits: str


class PmodModem(Modem):
    def __init__(self, cfg: PmodConfig, name: str | None = None):
        self.cfg = cfg
        self.energy = cfg.energy
        self.name = name or f"pmod{cfg.L}x{cfg.N}"
        if cfg.symbols == "psk":
            alphabet = psk_alphabet(cfg.N)
            self.phase_points = psk_points(cfg.N)
            self.phase_labels = tuple(s.label for s in alphabet)
        else:
            qam = qam_alphabet(cfg.N, 1.0)
            self.phase_points = qam.points
            self.phase_labels = qam.labels
        self.sphere_jones = cfg.packing.jones(cfg.energy)
        self.candidates = (self.sphere_jones[:, None, :] * self.phase_points[None, :, None]).reshape(-1, 2)
        self.labels = tuple(
            sl + pl for sl in cfg.packing.labels for pl in self.phase_labels
        )

    def split(self, k):
        return np.divmod(k, self.cfg.N)

    def symbol(self, bits: str) -> PmodSymbol:
        cfg = self.cfg
        if len(bits) != cfg.Lb + cfg.Nb:
            raise ValueError(f"expected {cfg.Lb + cfg.Nb} bits, got {len(bits)}")
        sphere_bits, phase_bits = bits[: cfg.Lb], bits[cfg.Lb:]
        try:
            l = cfg.packing.labels.index(sphere_bits)
            n = self.phase_labels.index(phase_bits)
        except ValueError:
            raise LabelNotFound(bits) from None
        return PmodSymbol(self.candidates[l * cfg.N + n].copy(), l, n)

    def result(self, k: int) -> DemodResult:
        l, n = self.split(int(k))
        return DemodResult(int(l), int(n), self.labels[int(k)])

    def detect(self, y, h=None, n0: float = 0.0, receiver=Receiver.JOINT) -> np.ndarray:
        receiver = Receiver(receiver)
        if receiver is Receiver.JOINT:
            return ml_detect(y, self.candidates @ as_matrix(h).T)
        # MMSE tends to ZF as n0 -> 0, which keeps noiseless sweeps usable
        filt = Filter.ZF if receiver is Receiver.CASCADE_ZF or n0 <= 0 else Filter.MMSE
        l_hat, n_hat = self.cascade(y, h, filt, n0)
        return l_hat * self.cfg.N + n_hat

    def cascade(self, y, h=None, filt: Filter | str = Filter.MMSE, n0: float = 0.0):
        """Stokes-domain sphere decision followed by a filtered phase decision.

        Returns ``(l_hat, n_hat)`` index arrays for a ``(B, 2)`` batch.
        """
        if self.cfg.symbols != "psk":
            raise ValueError("the cascade receiver needs a PSK phase alphabet")
        filt = Filter(filt)
        if filt is Filter.MMSE and n0 <= 0:
            raise ValueError("the MMSE filter needs n0 > 0")
        y = np.atleast_2d(y)
        hm = as_matrix(h)
        # reference states as seen through the channel; equal to the packing for H = I
        ref = jones_to_stokes_array(self.sphere_jones @ hm.T)
        rn = np.linalg.norm(ref, axis=1, keepdims=True)
        ref = np.divide(ref, rn, out=np.zeros_like(ref), where=rn > 0)
        s = jones_to_stokes_array(y)
        norm = np.linalg.norm(s, axis=1, keepdims=True)
        s = np.divide(s, norm, out=np.zeros_like(s), where=norm > 0)
        l_hat = np.argmax(s @ ref.T, axis=1)

        u = self.sphere_jones[l_hat] @ hm.T
        gain = np.sum(np.abs(u) ** 2, axis=1)
        if filt is Filter.ZF:
            if np.any(gain < 1e-30):
                raise SingularFilter("zero-forcing denominator vanished")
            a = u / gain[:, None]
        else:
            cov = u[:, :, None] * u.conj()[:, None, :] + n0 * np.eye(2)
            a = np.linalg.solve(cov, u[:, :, None])[:, :, 0]
        r = np.sum(a.conj() * y, axis=1)
        n_hat = nearest_phase_index(np.angle(r), self.cfg.N)
        return l_hat, n_hat


def pmod_modulate(bits: str, cfg: PmodConfig) -> PmodSymbol:
    return PmodModem(cfg).symbol(bits)


def joint_ml_demodulate(y, h, cfg: PmodConfig) -> DemodResult:
    modem = PmodModem(cfg)
    return modem.result(modem.detect(np.asarray(y)[None, :], h)[0])


def cascade_demodulate(y, h, cfg: PmodConfig, filter: Filter | str = Filter.MMSE,
                       n0: float = 0.0) -> DemodResult:
    modem = PmodModem(cfg)
    l_hat, n_hat = modem.cascade(np.asarray(y)[None, :], h, filter, n0)
    return modem.result(l_hat[0] * cfg.N + n_hat[0])


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


class BaselineKind(str, enum.Enum):
    DUAL_QAM = "dual_qam"
    DUAL_PSK = "dual_psk"
    SINGLE_QAM = "single_qam"
    SINGLE_PSK = "single_psk"


def _psk_alphabet_points(M: int, energy: float):
    return psk_points(M, energy), tuple(s.label for s in psk_alphabet(M))


class BaselineModem(Modem):
    """Dual kinds put an L-ary symbol on H and an N-ary one on V, each at
    half the energy; single kinds put an (L*N)-ary symbol on H only."""

    def __init__(self, kind: BaselineKind | str, L: int, N: int, energy: float = 1.0):
        kind = BaselineKind(kind)
        if not is_power_of_two(L) or not is_power_of_two(N):
            raise UnsupportedOrder(f"L={L} and N={N} must be powers of two")
        self.kind, self.L, self.N, self.energy = kind, L, N, energy
        self.name = f"{kind.value}{L}x{N}"
        qam = kind in (BaselineKind.DUAL_QAM, BaselineKind.SINGLE_QAM)

        def alphabet(M, e):
            if qam:
                a = qam_alphabet(M, e)
                return a.points, a.labels
            if M == 2:
                return np.array([1.0, -1.0]) * math.sqrt(e) + 0j, ("0", "1")
            return _psk_alphabet_points(M, e)

        if kind in (BaselineKind.DUAL_QAM, BaselineKind.DUAL_PSK):
            if L < 2 or N < 2:
                raise UnsupportedOrder("dual baselines need L, N >= 2")
            ph, lh = alphabet(L, energy / 2)
            pv, lv = alphabet(N, energy / 2)
            cand = np.stack(np.broadcast_arrays(ph[:, None], pv[None, :]), axis=-1).reshape(-1, 2)
            labels = tuple(a + b for a in lh for b in lv)
        else:
            if L * N < 2:
                raise UnsupportedOrder("single baselines need L*N >= 2")
            p, labels = alphabet(L * N, energy)
            cand = np.stack([p, np.zeros_like(p)], axis=-1)
        self.candidates = cand.astype(complex)
        self.labels = labels


def baseline_modem(kind: BaselineKind | str, L: int, N: int, energy: float = 1.0) -> BaselineModem:
    return BaselineModem(kind, L, N, energy)
