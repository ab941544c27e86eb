"""``edist`` command line: exact metrics, tree distance, sampling, estimation, hard pairs, bench."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import exact
from .estimation import EstimateReport, approximate_ed, dtep_report
from .etree import TreeParams, exact_e_distance, ilog, next_power, pad_pair
from .hard import HardInstance, HardInstanceParams, gen_hard_pair
from .instances import FAMILIES, make_pair
from .sampling import build_sample_tree
from .similarity import ExplicitDist, projected_pmf, similarity_alpha, uniform_similarity
from .text import CODECS, Text, decode, encode

EXACT_WARN_N = 10 ** 5
BENCH_EXACT_MAX = 4096


class CliError(Exception):
    pass


def _read(path: str, codec: str) -> Text:
    try:
        return decode(Path(path).read_bytes(), codec)
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from e


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands ----------------------------------------------------------------


def cmd_exact(args) -> int:
    x, y = _read(args.x, args.codec), _read(args.y, args.codec)
    if max(len(x), len(y)) > EXACT_WARN_N:
        print(f"edist: warning: quadratic DP on n={max(len(x), len(y))}", file=sys.stderr)
    t0 = time.perf_counter()
    value = {"ed": exact.ed, "edd": exact.edd, "lcs": exact.lcs}[args.metric](x, y)
    print(f"{args.metric}\t{value}\tmillis={(time.perf_counter() - t0) * 1000:.3f}")
    return 0


def cmd_edist(args) -> int:
    x, y = _read(args.x, args.codec), _read(args.y, args.codec)
    if len(x) == 0 or len(y) == 0:
        raise CliError("tree distance needs non-empty inputs")
    px, py, n, h = pad_pair(x, y, args.b)
    t0 = time.perf_counter()
    value = exact_e_distance(px, py, args.b)
    print(f"edist\t{value}\tn={n}\tb={args.b}\th={h}\t"
          f"millis={(time.perf_counter() - t0) * 1000:.3f}")
    return 0


def _tree_params(args, n: int) -> TreeParams:
    return TreeParams(n=n, b=args.b, beta=float(args.beta), c_p=args.c_p, seed=args.seed,
                      root_factor=args.root_factor)


def cmd_sample(args) -> int:
    if ilog(args.n, args.b) is None:
        raise CliError(f"n={args.n} is not a power of b={args.b}")
    tree = build_sample_tree(_tree_params(args, args.n))
    _emit(tree.to_text(), args.out)
    return 0


def _dtep(args, beta: float) -> EstimateReport:
    x, y = _read(args.x, args.codec), _read(args.y, args.codec)
    if len(x) == 0 or len(y) == 0:
        raise CliError("estimation needs non-empty inputs")
    px, py, n, _ = pad_pair(x, y, args.b)
    args.beta = beta
    return dtep_report(px, py, beta, _tree_params(args, n), shift_mode=args.shift_mode)


def cmd_dtep(args) -> int:
    sys.stdout.write(_dtep(args, args.beta).to_record())
    return 0


def cmd_approx(args) -> int:
    if args.beta is not None:
        sys.stdout.write(_dtep(args, args.beta).to_record())
        return 0
    x, y = _read(args.x, args.codec), _read(args.y, args.codec)
    res = approximate_ed(x, y, args.b, args.seed, c_p=args.c_p, root_factor=args.root_factor)
    rep = EstimateReport(res.estimate, res.queries, args.seed,
                         float(res.beta_star) if res.beta_star else math.nan,
                         args.b, res.n, res.time,
                         decision="far" if res.beta_star else "close")
    sys.stdout.write(rep.to_record())
    return 0


def cmd_gen_hard(args) -> int:
    params = HardInstanceParams(sigma=args.sigma, block_len=args.block_len,
                                shift_mag=args.shift, levels=args.levels,
                                bin_len=args.bin_len, seed=args.seed)
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0x6E4]))
    x, y = gen_hard_pair(params, args.which, rng, binary=not args.symbols)
    codec = "raw" if max(x.alphabet_size, y.alphabet_size) <= 256 else "hex16"
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.x").write_bytes(encode(x, codec))
    Path(f"{prefix}.y").write_bytes(encode(y, codec))
    manifest = HardInstance(params).manifest()
    manifest.update(which=args.which, binary=not args.symbols, codec=codec, length=len(x))
    Path(f"{prefix}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {prefix}.x {prefix}.y ({len(x)} symbols, codec {codec})")
    return 0


def read_dist(path: str) -> ExplicitDist:
    """Lines ``probability string``; ``#`` starts a comment."""
    pairs = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from e
    for k, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) == 1:
            parts.append("")
        try:
            p = float(parts[0])
        except ValueError:
            raise CliError(f"{path}:{k}: bad probability {parts[0]!r}") from None
        pairs.append((parts[1].strip(), p))
    if not pairs:
        raise CliError(f"{path}: no support lines")
    return ExplicitDist.from_pairs(pairs)


def cmd_similarity(args) -> int:
    dists = [read_dist(p) for p in args.dists]
    n = dists[0].n
    if any(d.n != n for d in dists):
        raise CliError("all distributions must have the same string length")
    full = similarity_alpha([projected_pmf(d, range(n)) for d in dists])
    print(f"alpha\t{full!r}")
    if not args.no_uniform:
        print(f"uniform_alpha\t{uniform_similarity(dists)!r}")
    return 0


# -- bench ------------------------------------------------------------------------


@dataclass
class BenchConfig:
    sizes: List[int] = field(default_factory=lambda: [256, 1024])
    b: List[int] = field(default_factory=lambda: [4])
    beta: List[float] = field(default_factory=lambda: [2.0, 8.0])
    trials: int = 3
    seed: int = 0
    family: str = "random-edits"
    output: Optional[str] = None
    c_p: float = 1.0
    workers: int = 0

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if any(n < 1 for n in self.sizes) or any(bb < 2 for bb in self.b):
            raise ValueError("sizes must be positive and b at least 2")
        if any(beta < 1 for beta in self.beta):
            raise ValueError("beta must be at least 1")
        # every n pads to a power of every b
        for n in self.sizes:
            for bb in self.b:
                if next_power(n, bb) < n:
                    raise ValueError(f"n={n} incompatible with b={bb}")

    @classmethod
    def from_json(cls, path: str) -> "BenchConfig":
        return cls(**json.loads(Path(path).read_text()))


BENCH_FIELDS = ("n", "b", "beta", "trial", "estimate", "exact", "ratio", "queries", "millis")


def _cell_seed(seed: int, n: int, b: int, beta: float, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, n, b, int(round(beta * 1000)), trial])


def _bench_cell(job):
    cfg, n, b, beta, trial = job
    ss = _cell_seed(cfg.seed, n, b, beta, trial)
    rng = np.random.default_rng(ss)
    x, y = make_pair(cfg.family, n, rng)
    px, py, N, _ = pad_pair(x, y, b)
    params = TreeParams(n=N, b=b, beta=float(beta), c_p=cfg.c_p,
                        seed=int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1)))
    rep = dtep_report(px, py, beta, params)
    true = exact.ed(x, y) if n <= BENCH_EXACT_MAX else None
    if true is None:
        ratio = math.nan
    else:
        ratio = rep.estimate / true if true else (1.0 if rep.estimate == 0 else math.inf)
    return (n, b, float(beta), trial, rep.estimate, true, ratio, rep.queries_used,
            rep.wall_time * 1000)


def run_bench(cfg: BenchConfig) -> str:
    """Run every ``(n, b, beta, trial)`` cell; returns the report text."""
    cfg.validate()
    jobs = [(cfg, n, b, beta, t) for n in cfg.sizes for b in cfg.b
            for beta in cfg.beta for t in range(cfg.trials)]
    workers = cfg.workers or min(len(jobs), os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_cell, jobs))
    else:
        rows = [_bench_cell(j) for j in jobs]
    settings = {k: v for k, v in asdict(cfg).items() if k not in ("output", "workers")}
    out = ["#edist-bench v1 " + json.dumps(settings, sort_keys=True, separators=(",", ":")),
           "\t".join(BENCH_FIELDS)]
    for r in rows:
        n, b, beta, t, est, true, ratio, q, ms = r
        out.append("\t".join([str(n), str(b), repr(beta), str(t), repr(float(est)),
                              "-" if true is None else str(true), repr(float(ratio)),
                              str(q), f"{ms:.3f}"]))
    cells = sorted({(r[0], r[1], r[2]) for r in rows})
    for n, b, beta in cells:
        sel = [r for r in rows if (r[0], r[1], r[2]) == (n, b, beta)]
        ratios = [r[6] for r in sel if not math.isnan(r[6])]
        med_ratio = float(np.median(ratios)) if ratios else math.nan
        out.append(f"#summary\tn={n}\tb={b}\tbeta={beta!r}"
                   f"\tmedian_ratio={med_ratio!r}"
                   f"\tmedian_queries={float(np.median([r[7] for r in sel]))!r}"
                   f"\tmedian_millis={float(np.median([r[8] for r in sel])):.3f}")
    return "\n".join(out) + "\n"


def cmd_bench(args) -> int:
    cfg = BenchConfig.from_json(args.config) if args.config else BenchConfig()
    for name in ("sizes", "b", "beta", "trials", "family", "c_p", "workers"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    cfg.seed = args.seed
    cfg.output = args.out or cfg.output
    text = run_bench(cfg)
    if cfg.output:
        with open(cfg.output, "a") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# -- parser -----------------------------------------------------------------------


def _pair_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--codec", choices=CODECS, default="raw")


def _estimator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--b", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--c-p", dest="c_p", type=float, default=1.0,
                   help="constant in the sampling rate")
    p.add_argument("--root-factor", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edist", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact ed, edd or lcs")
    _pair_args(p)
    p.add_argument("--metric", choices=("ed", "edd", "lcs"), default="ed")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("edist", help="exact tree distance")
    _pair_args(p)
    p.add_argument("--b", type=int, default=4)
    p.set_defaults(func=cmd_edist)

    p = sub.add_parser("sample", help="build and print a sample tree")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--out")
    _estimator_args(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("approx", help="approximate ed; single threshold with --beta")
    _pair_args(p)
    _estimator_args(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--shift-mode", choices=("restricted", "exact"), default="restricted")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("dtep", help="decide far/close at one threshold")
    _pair_args(p)
    _estimator_args(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--shift-mode", choices=("restricted", "exact"), default="restricted")
    p.set_defaults(func=cmd_dtep)

    p = sub.add_parser("gen-hard", help="write a hard pair and its manifest")
    p.add_argument("--sigma", type=int, default=8)
    p.add_argument("--block-len", type=int, default=64)
    p.add_argument("--shift", type=int, default=4)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--bin-len", type=int, default=8)
    p.add_argument("--which", choices=("same", "cross"), required=True)
    p.add_argument("--symbols", action="store_true", help="skip the binary code")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_gen_hard)

    p = sub.add_parser("similarity", help="similarity of explicit distributions")
    p.add_argument("dists", nargs="+")
    p.add_argument("--no-uniform", action="store_true")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("bench", help="approximation-ratio benchmark")
    p.add_argument("--config")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--b", type=int, nargs="+")
    p.add_argument("--beta", type=float, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--c-p", dest="c_p", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError, IndexError, OSError) as e:
        print(f"edist: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
