"""Command-line front end: ``fastdla patches|train|eval|complexity|sweep``.

Exit codes are 0 on success, 1 for runtime or data errors and 2 for usage
errors.  Every output file is written atomically, after all inputs have been
read and validated.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import complexity
from .dataio import (PGMError, MatrixFormatError, atomic_write, concat_patches, decode_matrix,
                     encode_report_csv, extract_patches, read_matrix, read_pgm, write_matrix)
from .fasttransform import (FactoredGeneral, FactoredOrthogonal, FormatError, apply,
                            apply_general, apply_transpose, deserialize, serialize)
from .learn import TrainConfig, TrainReport, dct_dictionary, train_gdla, train_qdla, train_rdla
from .sparsecode import omp, threshold_dense

ORDER_NAMES = {"seq": "sequential", "rand": "random"}
SWEEP_COLUMNS = ("method", "m", "s", "rel_error_pct", "model_ops")


class UsageError(Exception):
    """Invalid flag combination detected after parsing."""


# -- helpers --------------------------------------------------------------

def _input_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _output_file(path: str) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")
    if p.is_dir():
        raise IsADirectoryError(f"output path is a directory: {path}")
    return p


def _thread_count(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("FASTDLA_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"FASTDLA_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("FASTDLA_THREADS must be >= 1")
        return n
    return None


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _m_list(text: str) -> list[int]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("m-list is empty")
    try:
        ms = [int(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad m-list {text!r}") from None
    if min(ms) < 1:
        raise argparse.ArgumentTypeError("every m must be positive")
    return ms


def _load_data(path: Path) -> np.ndarray:
    y = read_matrix(path)
    if not np.all(np.isfinite(y)):
        raise MatrixFormatError("data contains non-finite values")
    return y


def _rel_error(y: np.ndarray, obj: float) -> float:
    energy = float(np.sum(y * y))
    return obj / energy if energy > 0 else 0.0


def is_orthogonal(d: np.ndarray, tol: float = 1e-8) -> bool:
    return d.shape[0] == d.shape[1] and np.allclose(d.T @ d, np.eye(d.shape[0]), atol=tol, rtol=0)


def code_and_error(d, y: np.ndarray, s: int) -> float:
    """Squared error of ``y`` coded in ``d`` at sparsity ``s``.

    Orthogonal dictionaries (factored or dense) use thresholding, anything
    else uses Batch-OMP.
    """
    if s == 0:
        return float(np.sum(y * y))
    if isinstance(d, FactoredOrthogonal):
        x = threshold_dense(apply_transpose(d, y), s)
        r = y - apply(d, x)
    elif isinstance(d, FactoredGeneral):
        r = y - apply_general(d, omp(d, y, s).dense)
    elif is_orthogonal(d):
        r = y - d @ threshold_dense(d.T @ y, s)
    else:
        r = y - d @ omp(d, y, s).dense
    return float(np.sum(r * r))


def _single_row_report(y: np.ndarray, obj: float) -> TrainReport:
    report = TrainReport(float(np.sum(y * y)))
    report.step(obj)
    report.end_iteration(obj)
    return report.finish()


# -- subcommands ----------------------------------------------------------

def cmd_patches(args) -> int:
    images = [_input_file(p) for p in args.image]
    out = _output_file(args.out)
    sets = [extract_patches(read_pgm(p), args.patch_side) for p in images]
    y = concat_patches(sets)
    write_matrix(out, y)
    print(f"n={y.shape[0]} N={y.shape[1]}")
    return 0


def cmd_train(args) -> int:
    if args.method in ("g", "r") and args.m is None:
        raise UsageError(f"--m is required for --method {args.method}")
    data = _input_file(args.data)
    dict_out = _output_file(args.dict_out)
    report_out = _output_file(args.report)
    y = _load_data(data)
    n = y.shape[0]
    if args.s > n:
        raise UsageError(f"--s {args.s} exceeds the signal dimension {n}")
    if args.method == "dct":
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise UsageError(f"--method dct needs square patches, got n={n}")
        d = dct_dictionary(side)
        report = _single_row_report(y, code_and_error(d, y, args.s))
        payload = None
    else:
        cfg = TrainConfig(m=args.m if args.m is not None else 1, s=args.s, iters=args.iters,
                          seed=args.seed, order=ORDER_NAMES[args.order],
                          min_gain=args.min_gain)
        try:
            cfg.validate(n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.method == "g":
            t, _, report = train_gdla(y, cfg)
            payload = serialize(t)
        elif args.method == "r":
            t, _, report = train_rdla(y, cfg)
            payload = serialize(t)
        else:
            d, _, report = train_qdla(y, cfg)
            payload = None
    if payload is None:
        write_matrix(dict_out, d)
    else:
        atomic_write(dict_out, payload)
    atomic_write(report_out, encode_report_csv(report))
    print(f"rel_error_pct={100.0 * report.final_rel_error:.6f}")
    return 0


def cmd_eval(args) -> int:
    data = _input_file(args.data)
    dict_path = _input_file(args.dict)
    report_out = _output_file(args.report) if args.report else None
    y = _load_data(data)
    raw = dict_path.read_bytes()
    if raw[:4] == b"FDLM":
        d = decode_matrix(raw)
    else:
        d = deserialize(raw)
    n = d.n if isinstance(d, (FactoredOrthogonal, FactoredGeneral)) else d.shape[0]
    if isinstance(d, np.ndarray) and d.shape[0] != d.shape[1]:
        raise MatrixFormatError(f"dictionary must be square, got {d.shape}")
    if n != y.shape[0]:
        raise MatrixFormatError(f"dictionary has {n} rows, data has {y.shape[0]}")
    if args.s > n:
        raise UsageError(f"--s {args.s} exceeds the signal dimension {n}")
    obj = code_and_error(d, y, args.s)
    if report_out is not None:
        atomic_write(report_out, encode_report_csv(_single_row_report(y, obj)))
    print(f"rel_error_pct={100.0 * _rel_error(y, obj):.6f}")
    return 0


def cmd_complexity(args) -> int:
    n, N, s = args.n, args.N, args.s
    if s > n:
        raise UsageError("--s must not exceed --n")
    methods = ("general", "ortho", "g", "r") if args.method == "all" else (args.method,)
    for method in methods:
        if method == "general":
            ops = complexity.ops_general(n, N, s)
        elif method == "ortho":
            ops = complexity.ops_ortho(n, N, s)
        elif method == "g":
            ops = complexity.ops_gfact(args.m, n, N, s)
        else:
            ops = complexity.ops_rfact(args.m, n, N, s)
        label = f"{method}(m={args.m})" if method in ("g", "r") else method
        print(f"ops {label}: {ops}")
    m2 = complexity.parity_m2(n, N, s)
    print(f"parity m1 (G vs dense orthogonal): {complexity.parity_m1(n)}")
    print(f"parity m2 (R vs dense general): {m2}")
    print(f"parity G of R(m2={m2}): {complexity.parity_g_of_r(m2, n, s)}")
    print("householder p -> G factors:")
    for p, m in complexity.parity_table(n):
        print(f"  H{p} ~ G{m}")
    return 0


def cmd_sweep(args) -> int:
    data = _input_file(args.data)
    out = _output_file(args.out)
    y = _load_data(data)
    n, N = y.shape
    if args.s > n:
        raise UsageError(f"--s {args.s} exceeds the signal dimension {n}")
    train = train_gdla if args.method == "g" else train_rdla
    cost = complexity.ops_gfact if args.method == "g" else complexity.ops_rfact
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for m in args.m_list:
        cfg = TrainConfig(m=m, s=args.s, iters=args.iters, seed=args.seed)
        _, _, report = train(y, cfg)
        pct = 100.0 * report.final_rel_error
        writer.writerow([args.method, m, args.s, repr(pct), cost(m, n, N, args.s)])
        print(f"{args.method} m={m}: rel_error_pct={pct:.6f}", flush=True)
    atomic_write(out, buf.getvalue().encode("utf-8"))
    return 0


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastdla",
                                     description="Learn fast factored dictionaries for image patches.")
    parser.add_argument("--threads", type=_positive, default=None,
                        help="BLAS thread count (default: FASTDLA_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("patches", help="extract mean-removed patches from PGM images")
    p.add_argument("--image", nargs="+", required=True)
    p.add_argument("--patch-side", type=_positive, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_patches)

    p = sub.add_parser("train", help="learn a dictionary")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("g", "r", "q", "dct"), required=True)
    p.add_argument("--m", type=_positive, default=None)
    p.add_argument("--s", type=_positive, default=4)
    p.add_argument("--iters", type=_nonneg, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--order", choices=tuple(ORDER_NAMES), default="seq")
    p.add_argument("--min-gain", type=float, default=0.0)
    p.add_argument("--dict-out", required=True)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="relative representation error of a dictionary")
    p.add_argument("--data", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--s", type=_nonneg, default=4)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("complexity", help="model operation counts and parity values")
    p.add_argument("--n", type=_positive, default=64)
    p.add_argument("--N", type=_positive, default=4096)
    p.add_argument("--s", type=_positive, default=4)
    p.add_argument("--m", type=_nonneg, default=128)
    p.add_argument("--method", choices=("all", "general", "ortho", "g", "r"), default="all")
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("sweep", help="train over several m and tabulate error and cost")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("g", "r"), required=True)
    p.add_argument("--m-list", type=_m_list, required=True)
    p.add_argument("--s", type=_positive, default=4)
    p.add_argument("--iters", type=_nonneg, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:           # argparse: 2 on usage errors, 0 for --help
        return int(exc.code or 0)
    try:
        threads = _thread_count(args.threads)
        with threadpool_limits(limits=threads):
            return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fastdla: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, PGMError, MatrixFormatError, FormatError, ValueError) as exc:
        print(f"fastdla: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
