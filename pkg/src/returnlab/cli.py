"""Config-driven experiment runner.

    returnlab decay --config bernoulli.json --output out/ --threads 0

Every run writes plot-ready CSV tables and one ``summary.json`` into the
output directory.  Wall-clock timings live under the summary's ``timings``
key only, so two runs of one config agree byte for byte everywhere else.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from .core import GCurve, InsufficientDataError, exponential_cdf, g_from_ecdf, intensity_report
from .generators import (
    Provenance,
    SpecError,
    SymbolSequence,
    generate,
    process_from_dict,
    process_to_dict,
)
from .scan import DEFAULT_MIN_COUNT

log = logging.getLogger("returnlab")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

EXPERIMENTS = (
    "theorem1_decay",
    "limit_law_probe",
    "kac_suite",
    "analyze",
    "ornstein_weiss_scale",
    "example1_check",
    "example2_attracting_check",
    "remark4_check",
    "mirrored_check",
)
PROBE_TOLERANCE = 0.05


class ConfigError(ValueError):
    pass


class SequenceParseError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


# -- configuration ------------------------------------------------------------


@dataclass
class ExperimentConfig:
    process: dict
    sample_length: int
    seed: int
    n_range: tuple = (4, 10)
    epsilon: float = 0.05
    min_count: int = DEFAULT_MIN_COUNT
    t_grid: Optional[list] = None
    experiments: list = field(default_factory=lambda: ["theorem1_decay", "limit_law_probe", "kac_suite"])
    output_dir: str = "."

    def spec(self):
        return process_from_dict(self.process)

    def echo(self) -> dict:
        d = asdict(self)
        d["n_range"] = list(self.n_range)
        return d


_REQUIRED = ("process", "sample_length", "seed")
_FIELDS = set(ExperimentConfig.__dataclass_fields__)


def _field_error(name: str, message: str) -> ConfigError:
    return ConfigError(f"field {name!r}: {message}")


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise _field_error(unknown[0], "unknown field")
    for name in _REQUIRED:
        if name not in data:
            raise _field_error(name, "missing")
    cfg = ExperimentConfig(**data)
    validate_config(cfg)
    return cfg


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every field, including the scan guard, before anything is generated."""
    if not isinstance(cfg.process, dict):
        raise _field_error("process", "must be an object with a 'kind' key")
    try:
        cfg.spec()
    except SpecError as exc:
        raise _field_error("process", str(exc)) from None
    if not _is_int(cfg.sample_length) or cfg.sample_length < 1:
        raise _field_error("sample_length", "must be a positive integer")
    if not _is_int(cfg.seed) or not 0 <= cfg.seed < 2**64:
        raise _field_error("seed", "must be an unsigned 64-bit integer")
    nr = cfg.n_range
    if not (isinstance(nr, (list, tuple)) and len(nr) == 2 and all(_is_int(v) for v in nr)):
        raise _field_error("n_range", "must be [min, max] integers")
    if not 1 <= nr[0] <= nr[1]:
        raise _field_error("n_range", "need 1 <= min <= max")
    if nr[1] > cfg.sample_length / 10:
        raise _field_error("n_range", f"max block length {nr[1]} exceeds the scan guard sample_length/10 = {cfg.sample_length / 10:g}")
    cfg.n_range = (int(nr[0]), int(nr[1]))
    if not isinstance(cfg.epsilon, (int, float)) or isinstance(cfg.epsilon, bool) or not 0 < cfg.epsilon < 1:
        raise _field_error("epsilon", "must be a real in (0, 1)")
    if not _is_int(cfg.min_count) or cfg.min_count < 2:
        raise _field_error("min_count", "must be an integer >= 2")
    if cfg.t_grid is not None:
        if not isinstance(cfg.t_grid, list) or not cfg.t_grid or not all(isinstance(t, (int, float)) and t >= 0 for t in cfg.t_grid):
            raise _field_error("t_grid", "must be a nonempty list of nonnegative reals")
    if not isinstance(cfg.experiments, list) or not cfg.experiments:
        raise _field_error("experiments", "must be a nonempty list")
    for name in cfg.experiments:
        if name not in EXPERIMENTS:
            raise _field_error("experiments", f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    if not isinstance(cfg.output_dir, str):
        raise _field_error("output_dir", "must be a path string")


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# -- sequence files -----------------------------------------------------------


def content_digest(seq: SymbolSequence) -> str:
    """64-bit BLAKE2b digest of the symbols as little-endian uint32."""
    return hashlib.blake2b(seq.symbols.astype("<u4").tobytes(), digest_size=8).hexdigest()


_PER_LINE = 64


def _symbol_lines(symbols: np.ndarray) -> bytes:
    if symbols.size == 0:
        return b""
    if int(symbols.max()) < 10:
        # one digit per symbol: build the text directly
        k = symbols.size
        rows = -(-k // _PER_LINE)
        buf = np.full(rows * _PER_LINE * 2, ord(" "), dtype=np.uint8)
        buf[: 2 * k : 2] = symbols + ord("0")
        buf[2 * _PER_LINE - 1 :: 2 * _PER_LINE] = ord("\n")
        out = buf[: 2 * k].tobytes()
        return out[:-1] + b"\n"
    lines = [" ".join(map(str, symbols[i : i + _PER_LINE].tolist())) for i in range(0, symbols.size, _PER_LINE)]
    return ("\n".join(lines) + "\n").encode()


def save_sequence(path, seq: SymbolSequence) -> str:
    """Write ``seq`` in the text format; returns the digest written."""
    prov = "none" if seq.provenance is None else json.dumps(asdict(seq.provenance), sort_keys=True)
    digest = content_digest(seq)
    with open(path, "wb") as fh:
        fh.write(f"alphabet {seq.alphabet_size} length {len(seq)}\n".encode())
        fh.write(f"provenance {prov}\n".encode())
        fh.write(_symbol_lines(seq.symbols))
        fh.write(f"digest {digest}\n".encode())
    return digest


_HEADER = re.compile(rb"alphabet (\d+) length (\d+)\n")
_PROV = re.compile(rb"provenance (.*)\n")
_DIGEST = re.compile(rb"digest ([0-9a-f]{16})\n?\Z")


def load_sequence(path) -> SymbolSequence:
    raw = Path(path).read_bytes()
    m = _HEADER.match(raw)
    if not m:
        raise SequenceParseError(0, "malformed header, expected 'alphabet <k> length <L>'")
    k, L = int(m.group(1)), int(m.group(2))
    if k < 1:
        raise SequenceParseError(0, "alphabet size must be positive")
    pos = m.end()
    pm = _PROV.match(raw, pos)
    if not pm:
        raise SequenceParseError(pos, "malformed provenance line")
    provenance = None
    if pm.group(1) != b"none":
        try:
            provenance = Provenance(**json.loads(pm.group(1)))
        except (ValueError, TypeError) as exc:
            raise SequenceParseError(pos, f"bad provenance: {exc}") from None
    body_start = pm.end()
    dm = _DIGEST.search(raw, body_start)
    if not dm:
        tail = raw.rfind(b"digest", body_start)
        raise SequenceParseError(tail if tail >= 0 else len(raw), "missing or malformed digest line")
    body = raw[body_start : dm.start()]
    tokens = body.split()
    try:
        symbols = np.array(tokens, dtype=np.int64) if tokens else np.zeros(0, dtype=np.int64)
        bad = np.flatnonzero((symbols < 0) | (symbols >= k))
    except ValueError:
        bad = None
    if bad is None or bad.size:
        for i, tok in enumerate(re.finditer(rb"\S+", body)):
            if not tok.group().isdigit() or int(tok.group()) >= k:
                raise SequenceParseError(body_start + tok.start(), f"symbol {tok.group().decode(errors='replace')!r} outside alphabet of size {k}")
    if symbols.size != L:
        raise SequenceParseError(dm.start(), f"header declares {L} symbols, found {symbols.size}")
    seq = SymbolSequence(k, symbols, provenance)
    if content_digest(seq) != dm.group(1).decode():
        raise SequenceParseError(dm.start(), "digest mismatch")
    return seq


# -- report writing -----------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def g_curve_points(G: GCurve) -> np.ndarray:
    """Breakpoints of G plus the segment critical points against the exponential baseline."""
    pts = [G.t]
    s = G.slope
    for a, b, sl in zip(G.t, np.append(G.t[1:], np.inf), s):
        if 0 < sl < 1:
            tc = -math.log(sl)
            if a < tc < b:
                pts.append(np.array([tc]))
    return np.unique(np.concatenate(pts))


def write_g_curve(path: Path, G: GCurve) -> None:
    t = g_curve_points(G)
    write_csv(path, ("t", "G", "baseline"), zip(t.tolist(), G(t).tolist(), exponential_cdf(t).tolist()))


# -- experiment runners -------------------------------------------------------


@dataclass
class Outcome:
    verdict: str
    statistics: dict
    files: list
    error: Optional[str] = None


def _n_list(cfg) -> range:
    return range(cfg.n_range[0], cfg.n_range[1] + 1)


def run_decay(seq, cfg, out: Path, threads: int) -> Outcome:
    curve = ex.theorem1_decay(seq, _n_list(cfg), cfg.epsilon, cfg.min_count, threads)
    name = "decay.csv"
    write_csv(
        out / name,
        ("n", "epsilon", "repelling_mass", "attracting_mass", "analyzed_mass", "block_count"),
        [(r.n, curve.epsilon, r.repelling_mass, r.attracting_mass, r.analyzed_mass, r.block_count) for r in curve.rows],
    )
    good = [r for r in curve.rows if r.error is None]
    errors = {str(r.n): r.error for r in curve.rows if r.error is not None}
    if not good:
        return Outcome("error", {"errors": errors}, [name], "no analyzable block length")
    final = good[-1]
    stats = {"final_n": final.n, "final_repelling_mass": final.repelling_mass, "errors": errors}
    return Outcome("pass" if final.repelling_mass <= cfg.epsilon else "fail", stats, [name])


def run_probe(seq, cfg, out: Path, threads: int) -> Outcome:
    grid = cfg.t_grid if cfg.t_grid is not None else ex.DEFAULT_T_GRID
    probe = ex.limit_law_probe(seq, _n_list(cfg), cfg.epsilon, grid, cfg.min_count, threads)
    name = "probe.csv"
    write_csv(
        out / name,
        ("n", "epsilon", "violation_fraction", "analyzed_mass"),
        [(r.n, probe.epsilon, r.violation_fraction, r.analyzed_mass) for r in probe.rows],
    )
    good = [r for r in probe.rows if r.error is None]
    if not good:
        return Outcome("error", {}, [name], "no analyzable block length")
    final = good[-1]
    stats = {"final_n": final.n, "final_violation_fraction": final.violation_fraction, "t_grid": list(probe.t_grid)}
    return Outcome("pass" if final.violation_fraction <= PROBE_TOLERANCE else "fail", stats, [name])


def run_kac(seq, cfg, out: Path, threads: int) -> Outcome:
    rows = ex.kac_suite(seq, _n_list(cfg), cfg.min_count, threads=threads)
    name = "kac.csv"
    write_csv(
        out / name,
        ("n", "mean_normalized_return", "analyzed_mass", "verdict"),
        [(r.n, r.mean_normalized_return, r.analyzed_mass, "pass" if r.passed else "fail") for r in rows],
    )
    return Outcome("pass" if all(r.passed for r in rows) else "fail", {"means": {str(r.n): r.mean_normalized_return for r in rows}}, [name])


def run_analyze(seq, cfg, out: Path, threads: int, n: Optional[int] = None) -> Outcome:
    n = n or cfg.n_range[1]
    s = ex.block_survey(seq, n, cfg.min_count, threads)
    blocks = f"blocks_n{n}.csv"
    rows = []
    for j, i in enumerate(s.index):
        word = "".join(str(a) if seq.alphabet_size <= 10 else f"{a}." for a in s.table.word(int(i))).rstrip(".")
        rows.append(
            (word, int(s.table.counts[i]), float(s.measures[j]), float(s.means[j]), float(s.ks[j]),
             float(s.repelling[j]), _nan_none(s.repelling_at[j]), float(s.attracting[j]), _nan_none(s.attracting_at[j]))
        )
    write_csv(
        out / blocks,
        ("block", "count", "measure", "mean_return", "sup_distance", "repelling", "repelling_t", "attracting", "attracting_t"),
        rows,
    )
    files = [blocks]
    stats = {"n": n, "analyzed_mass": s.analyzed_mass, "block_count": s.block_count}
    if s.block_count:
        G = g_from_ecdf(ex.aggregate_return_law(seq, n, cfg.min_count))
        curve = f"g_curve_n{n}.csv"
        write_g_curve(out / curve, G)
        files.append(curve)
        rep = intensity_report(G)
        stats["aggregate_repelling"] = rep.repelling.intensity
        stats["aggregate_attracting"] = rep.attracting.intensity
    return Outcome("pass", stats, files)


def _nan_none(x) -> Optional[float]:
    x = float(x)
    return None if math.isnan(x) else x


def run_ornstein_weiss(seq, cfg, out: Path, threads: int) -> Outcome:
    rows = ex.ornstein_weiss_scale(seq, _n_list(cfg), cfg.min_count)
    name = "scale.csv"
    write_csv(out / name, ("n", "median_gap", "exponent"), [(r.n, r.median_gap, r.exponent) for r in rows])
    ok = all(0.8 <= r.exponent <= 1.2 for r in rows)
    return Outcome("pass" if ok else "fail", {"exponents": {str(r.n): r.exponent for r in rows}}, [name])


def run_example1(seq, cfg, out: Path, threads: int, spec=None) -> Outcome:
    spec = spec or cfg.spec()
    r = ex.example1_check(seq, spec, min_count=cfg.min_count, threads=threads)
    stats = asdict(r)
    stats["normalized_gap_range"] = list(r.normalized_gap_range)
    name = "example1.csv"
    write_csv(out / name, ("statistic", "value"), sorted(stats.items()))
    return Outcome("pass" if r.passed else "fail", stats, [name])


def run_example2(seq, cfg, out: Path, threads: int, spec=None) -> Outcome:
    spec = spec or cfg.spec()
    rows = ex.example2_attracting_check(seq, (spec.n, spec.n**2), cfg.min_count, threads=threads)
    name = "example2.csv"
    write_csv(
        out / name,
        ("n", "analyzed_mass", "attracting_mass", "median_attracting", "repelling_mass", "block_count"),
        [(r.n, r.analyzed_mass, r.attracting_mass, r.median_attracting, r.repelling_mass, r.block_count) for r in rows],
    )
    stats = {"lengths": [r.n for r in rows], "min_median_attracting": min((r.median_attracting for r in rows), default=None)}
    return Outcome("pass" if ex.example2_passed(rows) else "fail", stats, [name])


def run_remark4(seq, cfg, out: Path, threads: int, n: Optional[int] = None) -> Outcome:
    n = n or cfg.n_range[1]
    r = ex.remark4_check(seq, n, cfg.min_count)
    name = f"remark4_g_curve_n{n}.csv"
    write_g_curve(out / name, r.aggregate)
    i = r.intensities
    stats = {
        "n": n,
        "sup_distance": r.sup_distance,
        "repelling": i.repelling.intensity,
        "repelling_t": i.repelling.distance,
        "attracting": i.attracting.intensity,
        "attracting_t": i.attracting.distance,
    }
    return Outcome("pass" if r.passed else "fail", stats, [name])


def run_mirrored(seq, cfg, out: Path, threads: int, n: Optional[int] = None) -> Outcome:
    r = ex.mirrored_check(seq, n or cfg.n_range[1], min_count=cfg.min_count, threads=threads)
    stats = asdict(r)
    stats.update(unbiased=r.unbiased, low_entropy=r.low_entropy)
    name = "mirrored.csv"
    write_csv(out / name, ("statistic", "value"), sorted(stats.items()))
    return Outcome("pass" if r.passed else "fail", stats, [name])


RUNNERS = {
    "theorem1_decay": run_decay,
    "limit_law_probe": run_probe,
    "kac_suite": run_kac,
    "analyze": run_analyze,
    "ornstein_weiss_scale": run_ornstein_weiss,
    "example1_check": run_example1,
    "example2_attracting_check": run_example2,
    "remark4_check": run_remark4,
    "mirrored_check": run_mirrored,
}


def _guarded(name: str, fn, *args, **kwargs) -> tuple[Outcome, float]:
    t0 = time.perf_counter()
    try:
        outcome = fn(*args, **kwargs)
    except (InsufficientDataError, SpecError, ValueError, MemoryError) as exc:
        log.error("%s: %s", name, exc)
        outcome = Outcome("error", {}, [], str(exc))
    return outcome, time.perf_counter() - t0


def write_summary(out: Path, config_echo: dict, outcomes: dict, timings: dict) -> None:
    summary = {
        "config": config_echo,
        "results": {k: asdict(v) for k, v in outcomes.items()},
        "verdicts": {k: v.verdict for k, v in outcomes.items()},
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (tuple, set)):
        return list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _exit_code(outcomes: dict) -> int:
    verdicts = {o.verdict for o in outcomes.values()}
    if "error" in verdicts:
        return EXIT_RUNTIME
    return EXIT_FAIL if "fail" in verdicts else EXIT_PASS


def run(cfg: ExperimentConfig, names=None, threads: int = 1, sequence: Optional[SymbolSequence] = None, n: Optional[int] = None) -> int:
    """Generate (or take) the sample, run the experiments, write reports; returns the exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(names or cfg.experiments)
    timings = {}
    if sequence is None:
        t0 = time.perf_counter()
        sequence = generate(cfg.spec(), cfg.sample_length, cfg.seed)
        timings["generate"] = time.perf_counter() - t0
    outcomes = {}
    for name in names:
        log.info("running %s", name)
        kwargs = {"n": n} if n is not None and name in ("analyze", "remark4_check", "mirrored_check") else {}
        outcomes[name], timings[name] = _guarded(name, RUNNERS[name], sequence, cfg, out, threads, **kwargs)
        log.info("%s: %s", name, outcomes[name].verdict)
    write_summary(out, cfg.echo(), outcomes, timings)
    return _exit_code(outcomes)


def run_examples(sample_length: int, seed: int, out: Path, threads: int = 1, min_count: int = DEFAULT_MIN_COUNT) -> int:
    """Validators for the desk instances of Examples 1-3, each on its own sample."""
    out.mkdir(parents=True, exist_ok=True)
    plan = [
        ("example1_check", ex.DESK_EXAMPLE1, lambda s, c: run_example1(s, c, out, threads, spec=ex.DESK_EXAMPLE1)),
        ("example2_attracting_check", ex.DESK_EXAMPLE2, lambda s, c: run_example2(s, c, out, threads, spec=ex.DESK_EXAMPLE2)),
        ("remark4_check", ex.DESK_REMARK4, lambda s, c: run_remark4(s, c, out, threads, n=24)),
        ("mirrored_check", ex.DESK_MIRRORED, lambda s, c: run_mirrored(s, c, out, threads, n=10)),
    ]
    outcomes, timings, echo = {}, {}, {"sample_length": sample_length, "seed": seed, "min_count": min_count, "processes": {}}
    for name, spec, fn in plan:
        cfg = ExperimentConfig(process_to_dict(spec), sample_length, seed, min_count=min_count, output_dir=str(out))
        echo["processes"][name] = cfg.process
        t0 = time.perf_counter()
        try:
            seq = generate(spec, sample_length, seed)
        except (SpecError, ValueError, RuntimeError) as exc:
            outcomes[name], timings[name] = Outcome("error", {}, [], str(exc)), time.perf_counter() - t0
            continue
        outcomes[name], dt = _guarded(name, fn, seq, cfg)
        timings[name] = time.perf_counter() - t0
        log.info("%s: %s", name, outcomes[name].verdict)
    write_summary(out, _listify(echo), outcomes, timings)
    return _exit_code(outcomes)


def _listify(x):
    return json.loads(json.dumps(x, default=_json_default))


# -- argument handling --------------------------------------------------------

_SUBCOMMANDS = {
    "generate": None,
    "analyze": ["analyze"],
    "decay": ["theorem1_decay"],
    "probe": ["limit_law_probe"],
    "kac": ["kac_suite"],
    "examples": None,
    "all": None,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--output", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads per experiment, 0 = one per CPU")
    common.add_argument("--quiet", action="store_true", help="only report errors")
    p = argparse.ArgumentParser(prog="returnlab", description="Return-time statistics of block occurrences in stationary processes.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="sample the configured process and save it")
    a = sub.add_parser("analyze", parents=[common], help="per-block report at one block length")
    a.add_argument("--n", type=int, help="block length (default: n_range max)")
    a.add_argument("--input", help="analyze a saved sequence file instead of generating")
    for name, text in (("decay", "repelling/attracting mass per block length"), ("probe", "hitting-time dominance probe"), ("kac", "mean normalized return per block length")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--input", help="use a saved sequence file instead of generating")
    e = sub.add_parser("examples", parents=[common], help="validate the Example 1/2/3 desk instances")
    e.add_argument("--length", type=int, default=10_000_000, help="sample length per instance")
    s = sub.add_parser("all", parents=[common], help="run every experiment listed in the config")
    s.add_argument("--input", help="use a saved sequence file instead of generating")
    return p


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if args.output:
        cfg.output_dir = args.output
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    if args.threads < 0:
        log.error("--threads must be >= 0")
        return EXIT_USAGE
    try:
        if args.command == "examples":
            seed = args.seed if args.seed is not None else 0
            cfg = _load(args) if args.config else None
            if cfg is not None:
                seed = cfg.seed
            out = Path(args.output or (cfg.output_dir if cfg else "."))
            return run_examples(args.length, seed, out, args.threads, cfg.min_count if cfg else DEFAULT_MIN_COUNT)
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    try:
        if args.command == "generate":
            out = Path(cfg.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            seq = generate(cfg.spec(), cfg.sample_length, cfg.seed)
            digest = save_sequence(out / "sequence.txt", seq)
            log.info("wrote %s (digest %s)", out / "sequence.txt", digest)
            return EXIT_PASS
        sequence = None
        if getattr(args, "input", None):
            sequence = load_sequence(args.input)
        names = _SUBCOMMANDS[args.command]
        return run(cfg, names, args.threads, sequence, getattr(args, "n", None))
    except (SequenceParseError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (InsufficientDataError, SpecError, ValueError, RuntimeError, MemoryError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
