"""Command-line front end: ``pmod3d {mindist,ber,dump}``.

Exit codes: 0 success, 1 usage or configuration error, 2 missing data.

A ``ber`` config is an INI file with one ``[sweep]`` section and one
``[modem NAME]`` section per curve::

    [sweep]
    axis = snr_db          ; snr_db, pdl_db or xpd_db
    start = 0
    stop = 18
    step = 2
    snr_db = 9             ; fixed values of the two other axes
    xpd_db = inf
    pdl_db = 0
    min_errors = 2000
    max_trials = 10000000
    seed = 1
    format = csv           ; csv or json

    [modem pmod48]
    kind = pmod            ; pmod, dual_qam, dual_psk, single_qam, single_psk
    L = 4
    N = 8
    packing = builtin      ; builtin, ring_sliced or a packing file path
    receiver = joint       ; joint, cascade_zf, cascade_mmse

The environment variable ``PMOD3D_SEED`` overrides the configured seed;
``--seed`` overrides both.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import re
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import TABLE_COLUMNS, mindist_table, table_csv
from .constellation import (
    Packing,
    builtin_packing,
    format_packing,
    jones_to_stokes_array,
    load_packing,
    ring_sliced_packing,
)
from .errors import MissingPacking, PmodError, UnsupportedOrder
from .modem import BaselineKind, BaselineModem, Modem, PmodConfig, PmodModem, Receiver
from .montecarlo import Axis, SimSpec, StopRule, reports_csv, run_sweep, sweep_points

EXIT_OK, EXIT_CONFIG, EXIT_MISSING = 0, 1, 2
SEED_ENV = "PMOD3D_SEED"


class ConfigError(Exception):
    """Bad configuration; maps to exit code 1."""


class MissingData(Exception):
    """Required input file or packing absent; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# mindist
# ---------------------------------------------------------------------------


def load_packing_dir(directory) -> dict[int, Packing]:
    """Every packing file in ``directory``, keyed by point count."""
    d = Path(directory)
    if not d.is_dir():
        raise MissingData(f"packing directory not found: {d}")
    out = {}
    for path in sorted(d.iterdir()):
        if path.is_file() and not path.name.startswith("."):
            pack = load_packing(path, normalize=True)
            out[pack.L] = pack
    return out


def cmd_mindist(args) -> int:
    packings = load_packing_dir(args.packings) if args.packings else {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = mindist_table(args.se, packings)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if not rows:
        raise MissingData(f"no packings available for se={args.se}")
    _write(table_csv(rows), args.out)
    for r in rows:
        if r.is_max:
            cells = ",".join(_num(r.value(c)) for c in TABLE_COLUMNS)
            print(f"max: {r.mode},{cells},{_num(r.lam_ref)},{';'.join(r.is_max)}",
                  file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# ber
# ---------------------------------------------------------------------------


@dataclass
class ModemEntry:
    name: str
    modem: Modem
    receiver: Receiver


@dataclass
class RunConfig:
    axis: Axis
    points: tuple[float, ...]
    snr_db: float
    xpd_db: float
    pdl_db: float
    stop: StopRule
    seed: int
    fmt: str
    workers: int
    modems: list[ModemEntry]


def _line_index(text: str) -> dict[tuple[str, str | None], int]:
    """Line numbers of section headers and keys, for diagnostics."""
    where: dict[tuple[str, str | None], int] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), lineno)
        elif section is not None and re.match(r"[^#;=:\s][^=:]*[=:]", s):
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            where.setdefault((section, key), lineno)
    return where


def parse_run_config(path, seed: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise MissingData(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = _line_index(text)

    def fail(section, key, msg):
        lineno = lines.get((section, key), lines.get((section, None), 0))
        field = f"[{section}] {key}" if key else f"[{section}]"
        raise ConfigError(f"{path}:{lineno}: {field}: {msg}")

    def get(section, key, conv, default=None):
        sec = cp[section]
        if key not in sec:
            if default is None:
                fail(section, None, f"missing field '{key}'")
            return default
        raw = sec[key]
        try:
            return conv(raw)
        except (ValueError, KeyError) as exc:
            fail(section, key, f"bad value {raw!r} ({exc})")

    if "sweep" not in cp:
        raise ConfigError(f"{path}:0: missing [sweep] section")
    axis = get("sweep", "axis", Axis, Axis.SNR)
    start = get("sweep", "start", float)
    stop = get("sweep", "stop", float)
    step = get("sweep", "step", float)
    if step <= 0:
        fail("sweep", "step", "must be > 0")
    if start > stop:
        fail("sweep", "start", "must be <= stop")
    snr_db = get("sweep", "snr_db", float, 10.0)
    xpd_db = get("sweep", "xpd_db", float, math.inf)
    pdl_db = get("sweep", "pdl_db", float, 0.0)
    for key, v in (("xpd_db", xpd_db), ("pdl_db", pdl_db)):
        if v < 0:
            fail("sweep", key, "impairments are attenuations and must be >= 0")
    min_errors = get("sweep", "min_errors", int, 2000)
    max_trials = get("sweep", "max_trials", int, 10_000_000)
    try:
        rule = StopRule(min_errors, max_trials)
    except ValueError as exc:
        fail("sweep", "max_trials", str(exc))
    cfg_seed = get("sweep", "seed", int, 0)
    fmt = get("sweep", "format", str, "csv").lower()
    if fmt not in ("csv", "json"):
        fail("sweep", "format", "must be csv or json")
    workers = get("sweep", "workers", int, 1)
    if workers < 1:
        fail("sweep", "workers", "must be >= 1")

    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    seed = cfg_seed if seed is None else seed
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed {seed} is not an unsigned 64-bit integer")

    modems = []
    for section in cp.sections():
        if not section.startswith("modem"):
            if section != "sweep":
                fail(section, None, "unknown section")
            continue
        name = section[len("modem"):].strip()
        if not name:
            fail(section, None, "modem sections need a name, e.g. [modem pmod48]")
        kind = get(section, "kind", str).lower()
        L = get(section, "l", int)
        N = get(section, "n", int)
        receiver = get(section, "receiver", Receiver, Receiver.JOINT)
        try:
            if kind == "pmod":
                spec = get(section, "packing", str, "builtin")
                if spec == "builtin":
                    pack = builtin_packing(L)
                elif spec == "ring_sliced":
                    pack = ring_sliced_packing(L)
                else:
                    ppath = Path(spec)
                    if not ppath.is_absolute():
                        ppath = path.parent / ppath
                    if not ppath.is_file():
                        raise MissingData(f"{path}:{lines.get((section, 'packing'), 0)}: "
                                          f"packing file not found: {ppath}")
                    pack = load_packing(ppath, normalize=True)
                modem = PmodModem(PmodConfig(pack, N), name)
            else:
                try:
                    bk = BaselineKind(kind)
                except ValueError:
                    fail(section, "kind", f"unknown kind {kind!r}")
                if receiver is not Receiver.JOINT:
                    fail(section, "receiver", "baselines only support the joint receiver")
                modem = BaselineModem(bk, L, N)
                modem.name = name
        except (PmodError, ValueError) as exc:
            fail(section, None, str(exc))
        modems.append(ModemEntry(name, modem, receiver))
    if not modems:
        raise ConfigError(f"{path}:0: no [modem NAME] sections")
    return RunConfig(axis, sweep_points(start, stop, step), snr_db, xpd_db, pdl_db,
                     rule, seed, fmt, workers, modems)


def run_config(cfg: RunConfig):
    """Run every modem of ``cfg``; returns ``[(entry, reports)]``."""
    out = []
    for entry in cfg.modems:
        spec = SimSpec(entry.modem, cfg.points, cfg.axis, entry.receiver, cfg.snr_db,
                       cfg.xpd_db, cfg.pdl_db, cfg.stop, cfg.seed, workers=cfg.workers)
        out.append((entry, run_sweep(spec)))
    return out


def cmd_ber(args) -> int:
    cfg = parse_run_config(args.config, args.seed)
    if args.workers is not None:
        cfg.workers = args.workers
    results = run_config(cfg)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "json":
        doc = {
            "axis": cfg.axis.value, "seed": cfg.seed,
            "series": [{"modem": e.name, "receiver": e.receiver.value,
                        "points": [{k: (None if v is None else float(v)) for k, v in r.row().items()}
                                   for r in reps]}
                       for e, reps in results],
        }
        (out / "merged.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")
    else:
        merged = io.StringIO()
        for i, (e, reps) in enumerate(results):
            (out / f"{e.name}.csv").write_text(reports_csv(reps), encoding="utf-8")
            body = reports_csv(reps, {"modem": e.name, "receiver": e.receiver.value})
            merged.write(body if i == 0 else body.split("\n", 1)[1])
        (out / "merged.csv").write_text(merged.getvalue(), encoding="utf-8")
    print(f"wrote {len(results)} series to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# dump
# ---------------------------------------------------------------------------

DUMP_HEADER = ("index", "label", "s1", "s2", "s3", "ex_re", "ex_im", "ey_re", "ey_im")


def _packing_arg(spec: str, L: int) -> Packing:
    if spec == "builtin":
        return builtin_packing(L)
    if spec == "ring_sliced":
        return ring_sliced_packing(L)
    path = Path(spec)
    if not path.is_file():
        raise MissingData(f"packing file not found: {path}")
    pack = load_packing(path, normalize=True)
    if pack.L != L:
        raise ConfigError(f"{path} holds {pack.L} points, expected L={L}")
    return pack


def dump_rows(pack: Packing, N: int | None = None) -> list[tuple]:
    if N is None:
        jones = pack.jones()
        labels = pack.labels
    else:
        modem = PmodModem(PmodConfig(pack, N))
        jones, labels = modem.candidates, modem.labels
    stokes = jones_to_stokes_array(jones)
    return [(i, lab, *stokes[i], jones[i, 0].real, jones[i, 0].imag, jones[i, 1].real, jones[i, 1].imag)
            for i, lab in enumerate(labels)]


def cmd_dump(args) -> int:
    try:
        pack = _packing_arg(args.packing, args.L)
    except UnsupportedOrder as exc:
        raise MissingData(str(exc)) from None
    if args.format == "packing":
        text = format_packing(pack)
    else:
        rows = dump_rows(pack, args.N)
        if args.format == "json":
            text = json.dumps([dict(zip(DUMP_HEADER, (r[0], r[1], *map(float, r[2:])))) for r in rows],
                              indent=2) + "\n"
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(DUMP_HEADER)
            for r in rows:
                w.writerow([r[0], r[1]] + [_num(v) for v in r[2:]])
            text = buf.getvalue()
    _write(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _se(value: str) -> int:
    se = int(value)
    if not 2 <= se <= 8:
        raise argparse.ArgumentTypeError(f"must be in 2..8, got {se}")
    return se


def _u64(value: str) -> int:
    v = int(value)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pmod3d", description="3D polarized modulation: tables, BER sweeps, constellations")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mindist", help="minimum-distance table for one spectral efficiency")
    p.add_argument("--se", type=_se, required=True, help="bits per symbol, 2..8")
    p.add_argument("--packings", help="directory of packing files for L > 16")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_mindist)

    p = sub.add_parser("ber", help="Monte Carlo BER sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=_u64, help=f"overrides the config and ${SEED_ENV}")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--workers", type=int, help="process count (results do not depend on it)")
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("dump", help="constellation points with Stokes and Jones coordinates")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--N", type=int, help="also apply an N-PSK phase alphabet")
    p.add_argument("--packing", default="builtin", help="builtin, ring_sliced or a file path")
    p.add_argument("--format", choices=("csv", "json", "packing"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_dump)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MissingData, MissingPacking, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigError, PmodError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
