"""Reproducible Monte Carlo BER/SER/throughput engine.

Trials are drawn in fixed-size chunks. Chunk ``c`` of sweep point ``p``
always uses the random stream ``(seed, p, c)``, and chunks are merged in
index order up to the one that satisfies the stop rule. A result therefore
depends only on ``(seed, spec)``, never on how many workers ran it.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import BerBound, union_bound
from .channel import NO_XPD, awgn, db_to_linear, make_rng, snr_to_n0, xpd_pdl_matrix
from .modem import Modem, PmodModem, Receiver

CI_Z = 1.96

REPORT_HEADER = ("axis_db", "trials", "bit_errors", "ber", "ci95", "ser", "throughput",
                 "bound_total", "bound_signal", "bound_polsk", "bound_joint")


class Axis(str, enum.Enum):
    SNR = "snr_db"
    PDL = "pdl_db"
    XPD = "xpd_db"


@dataclass(frozen=True)
class StopRule:
    min_errors: int = 2000
    max_trials: int = 10_000_000

    def __post_init__(self):
        if self.min_errors < 1 or self.max_trials < self.min_errors:
            raise ValueError("need 1 <= min_errors <= max_trials")


@dataclass(frozen=True)
class SimSpec:
    modem: Modem
    points: tuple[float, ...]
    axis: Axis = Axis.SNR
    receiver: Receiver = Receiver.JOINT
    snr_db: float = 10.0
    xpd_db: float = NO_XPD
    pdl_db: float = 0.0
    stop: StopRule = field(default_factory=StopRule)
    seed: int = 0
    chunk_size: int = 1 << 14
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "receiver", Receiver(self.receiver))
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if self.receiver is not Receiver.JOINT and not isinstance(self.modem, PmodModem):
            raise ValueError("cascade receivers only apply to 3D PMod modems")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be positive")

    def conditions(self, axis_value: float) -> tuple[float, float, float]:
        """``(snr_db, xpd_db, pdl_db)`` at one sweep point."""
        snr, xpd, pdl = self.snr_db, self.xpd_db, self.pdl_db
        if self.axis is Axis.SNR:
            snr = axis_value
        elif self.axis is Axis.XPD:
            xpd = axis_value
        else:
            pdl = axis_value
        return snr, xpd, pdl


@dataclass(frozen=True)
class BerReport:
    axis_db: float
    trials: int
    bit_errors: int
    symbol_errors: int
    bits_per_symbol: int
    bound: BerBound | None = None

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.bits_per_symbol) if self.trials else 0.0

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.trials if self.trials else 0.0

    @property
    def throughput(self) -> float:
        return self.bits_per_symbol * (1.0 - self.ser)

    @property
    def ci95(self) -> float:
        n = self.trials * self.bits_per_symbol
        if n == 0:
            return 0.0
        p = self.ber
        return CI_Z * math.sqrt(p * (1.0 - p) / n)

    def row(self) -> dict:
        b = self.bound
        return {
            "axis_db": self.axis_db, "trials": self.trials, "bit_errors": self.bit_errors,
            "ber": self.ber, "ci95": self.ci95, "ser": self.ser, "throughput": self.throughput,
            "bound_total": b.total if b else None, "bound_signal": b.signal if b else None,
            "bound_polsk": b.polsk if b else None, "bound_joint": b.joint if b else None,
        }


def simulate_chunk(modem: Modem, receiver: Receiver, h: np.ndarray, n0: float,
                   rng: np.random.Generator, size: int) -> tuple[int, int]:
    """Run ``size`` symbols; return ``(bit_errors, symbol_errors)``."""
    words = rng.integers(0, 1 << modem.bits_per_symbol, size=size)
    idx = modem.word_to_index[words]
    hx = np.take(modem.candidates @ h.T, idx, axis=0)
    if n0 > 0:
        y = awgn(n0, rng, size)
        y += hx
    else:
        y = hx
    idx_hat = modem.detect(y, h, n0, receiver)
    diff = words ^ modem.label_words[idx_hat]
    return int(np.bitwise_count(diff).sum()), int(np.count_nonzero(diff))


def _chunk_job(args):
    modem, receiver, h, n0, seed, stream, chunk, size = args
    return simulate_chunk(modem, receiver, h, n0, make_rng(seed, stream, chunk), size)


def _bound_for(spec: SimSpec, snr_db: float, xpd_db: float, pdl_db: float):
    modem = spec.modem
    if not isinstance(modem, PmodModem) or modem.cfg.symbols != "psk":
        return None
    if not (math.isinf(xpd_db) and pdl_db == 0):
        return None
    gamma = math.inf if math.isinf(snr_db) else modem.energy / snr_to_n0(snr_db, modem.energy)
    return union_bound(modem.cfg, gamma)


def run_point(spec: SimSpec, axis_value: float, stream: int = 0,
              executor: ProcessPoolExecutor | None = None) -> BerReport:
    """Simulate one sweep point until the stop rule fires."""
    snr, xpd, pdl = spec.conditions(axis_value)
    h = xpd_pdl_matrix(xpd, pdl).h
    n0 = snr_to_n0(snr, spec.modem.energy)
    stop = spec.stop

    remaining = stop.max_trials
    trials = bit_errors = symbol_errors = 0
    chunk = 0
    done = False
    wave = spec.workers if executor is not None else 1
    while not done:
        jobs = []
        for _ in range(wave):
            size = min(spec.chunk_size, remaining)
            if size <= 0:
                break
            jobs.append((spec.modem, spec.receiver, h, n0, spec.seed, stream, chunk, size))
            remaining -= size
            chunk += 1
        if not jobs:
            break
        results = executor.map(_chunk_job, jobs) if executor is not None else map(_chunk_job, jobs)
        for job, (be, se) in zip(jobs, results):
            trials += job[-1]
            bit_errors += be
            symbol_errors += se
            if bit_errors >= stop.min_errors or trials >= stop.max_trials:
                done = True
                break
    return BerReport(axis_value, trials, bit_errors, symbol_errors,
                     spec.modem.bits_per_symbol, _bound_for(spec, snr, xpd, pdl))


def run_sweep(spec: SimSpec) -> list[BerReport]:
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            return [run_point(spec, v, i, pool) for i, v in enumerate(spec.points)]
    return [run_point(spec, v, i) for i, v in enumerate(spec.points)]


def sweep_points(start: float, stop: float, step: float) -> tuple[float, ...]:
    if step <= 0 or start > stop:
        raise ValueError("need step > 0 and start <= stop")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(n))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.10g}"


def reports_csv(reports: list[BerReport], extra: dict | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    extra = extra or {}
    w.writerow(list(extra) + list(REPORT_HEADER))
    for r in reports:
        row = r.row()
        w.writerow(list(extra.values()) + [_fmt(row[k]) for k in REPORT_HEADER])
    return buf.getvalue()


__all__ = [
    "Axis", "BerReport", "SimSpec", "StopRule", "db_to_linear", "reports_csv",
    "run_point", "run_sweep", "simulate_chunk", "sweep_points",
]
