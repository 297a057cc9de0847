"""Command-line pipeline: synthesize/ingest -> preprocess -> train -> encode
-> classify / query / sweep / pareto.

Results go to files or stdout; diagnostics go to stderr. Exit codes:
0 success, 2 usage error, 1 data or runtime error. Every command is
deterministic for a fixed --seed, independent of --threads.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import kmeans  # noqa: F401  (re-exported pipeline deps)
from . import persistence, pq, report, search, sweep as sweep_mod
from .errors import InvalidParams, SchemaError, SoilPQError
from .preprocess import (
    apply_scaler,
    clean,
    dataset_from_table,
    fit_transform,
    gen_synthetic,
    read_raw_csv,
    write_dataset_csv,
    write_table_csv,
)


def _threads_arg(text: str) -> int:
    if text == "auto":
        return os.cpu_count() or 1
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must contain at least one value")
    return values


def _float_list(text: str) -> np.ndarray:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated number list, got {text!r}")
    return np.asarray(values, dtype=np.float64)


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=_threads_arg, default="auto",
                   help="worker thread cap; results are identical for any value (default: auto)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soilpq",
        description="Product-quantization toolkit: train per-subspace codebooks over "
                    "tabular data, encode rows into compact class labels, and answer "
                    "approximate nearest-neighbor (analog) queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-synthetic", help="generate a positive Gaussian-mixture CSV")
    p.add_argument("--rows", type=int, required=True, help="number of rows")
    p.add_argument("--dims", type=int, default=48, help="feature dimensions (default: 48)")
    p.add_argument("--clusters", type=int, default=8, help="cluster count (default: 8)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("preprocess", help="clean rows and apply the log/standardize chain")
    p.add_argument("--input", required=True, help="raw CSV (lon,lat,features)")
    p.add_argument("--ph-cols", default="",
                   help="comma-separated pH column names, may be empty (default: empty)")
    p.add_argument("--out", required=True, help="transformed CSV path")
    p.add_argument("--scaler-out", required=True, help="fitted scaler JSON path")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("train", help="train a product-quantizer codebook")
    p.add_argument("--input", required=True, help="preprocessed CSV")
    p.add_argument("--subspaces", type=int, required=True, help="subspace count M")
    p.add_argument("--centroids", type=int, required=True, help="centroids per subspace K")
    p.add_argument("--seed", type=int, default=0, help="base RNG seed (default: 0)")
    p.add_argument("--max-iters", type=int, default=100,
                   help="k-means iteration cap (default: 100)")
    p.add_argument("--tol", type=float, default=1e-4,
                   help="k-means relative SSE tolerance (default: 1e-4)")
    p.add_argument("--scaler", default=None,
                   help="optional scaler JSON to embed for raw-vector queries")
    p.add_argument("--out", required=True, help="codebook JSON path")
    _add_threads(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("encode", help="encode rows into binary PQ codes")
    p.add_argument("--input", required=True, help="preprocessed CSV")
    p.add_argument("--codebook", required=True, help="codebook JSON")
    p.add_argument("--out", required=True, help="binary codes path")
    _add_threads(p)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("reconstruct", help="report round-trip reconstruction error")
    p.add_argument("--input", required=True, help="preprocessed CSV")
    p.add_argument("--codebook", required=True, help="codebook JSON")
    p.add_argument("--codes", required=True, help="binary codes file")
    _add_threads(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("query", help="approximate nearest neighbors / analog lookup")
    p.add_argument("--codebook", required=True, help="codebook JSON")
    p.add_argument("--codes", required=True, help="binary codes file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--vector", type=_float_list,
                     help="comma-separated query vector (raw features if the codebook "
                          "embeds a scaler, otherwise standardized)")
    src.add_argument("--row", type=int,
                     help="use this database row's reconstruction as the query")
    p.add_argument("--k", type=int, default=10, help="neighbors to return (default: 10)")
    p.add_argument("--mode", choices=["adc", "sdc"], default="adc",
                   help="distance mode (default: adc)")
    p.add_argument("--analogs", action="store_true",
                   help="return code-exact matches from the inverted index instead of knn")
    _add_threads(p)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("classify", help="export row_id,lon,lat,class_id assignments")
    p.add_argument("--codes", required=True, help="binary codes file")
    p.add_argument("--codebook", required=True, help="codebook JSON")
    p.add_argument("--coords", required=True, help="CSV providing lon,lat per row")
    p.add_argument("--out", required=True, help="assignments CSV path")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("sweep", help="grid-search (M, K) and record error/time trade-offs")
    p.add_argument("--input", required=True, help="preprocessed CSV")
    p.add_argument("--subspaces", type=_int_list, required=True,
                   help="comma-separated M values")
    p.add_argument("--centroids", type=_int_list, required=True,
                   help="comma-separated K values")
    p.add_argument("--seed", type=int, default=0, help="base RNG seed (default: 0)")
    p.add_argument("--max-iters", type=int, default=100,
                   help="k-means iteration cap (default: 100)")
    p.add_argument("--tol", type=float, default=1e-4,
                   help="k-means relative SSE tolerance (default: 1e-4)")
    p.add_argument("--repeats", type=int, default=1,
                   help="timing repetitions per cell, median reported (default: 1)")
    p.add_argument("--out", required=True, help="sweep CSV path")
    p.add_argument("--no-plot", action="store_true",
                   help="skip rendering the trade-off figure next to the CSV")
    _add_threads(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("pareto", help="flag non-dominated sweep rows (error vs train time)")
    p.add_argument("--in", dest="in_path", required=True, help="sweep CSV")
    p.add_argument("--out", required=True, help="flagged CSV path")
    p.add_argument("--no-plot", action="store_true",
                   help="skip rendering the front figure next to the CSV")
    p.set_defaults(func=_cmd_pareto)

    return parser


# ---------------------------------------------------------------------------
# Subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_gen(args) -> None:
    table, _labels = gen_synthetic(args.rows, args.dims, args.clusters, args.seed)
    write_table_csv(table, args.out)


def _cmd_preprocess(args) -> None:
    table = read_raw_csv(args.input)
    dataset, summary = clean(table)
    print(f"{args.input}: {summary}", file=sys.stderr)
    ph = {name.strip() for name in args.ph_cols.split(",") if name.strip()}
    transformed, scaler = fit_transform(dataset, ph)
    write_dataset_csv(transformed, args.out)
    persistence.save_scaler(scaler, args.scaler_out)


def _load_dataset(path):
    return dataset_from_table(read_raw_csv(path))


def _cmd_train(args) -> None:
    dataset = _load_dataset(args.input)
    scaler = persistence.load_scaler(args.scaler) if args.scaler else None
    cb = pq.train(
        dataset,
        args.subspaces,
        args.centroids,
        seed=args.seed,
        max_iters=args.max_iters,
        tol=args.tol,
        threads=args.threads,
        scaler=scaler,
    )
    persistence.save_codebook(cb, args.out)


def _cmd_encode(args) -> None:
    dataset = _load_dataset(args.input)
    cb = persistence.load_codebook(args.codebook)
    codes = pq.encode(dataset, cb, threads=args.threads)
    persistence.save_codes(codes, args.out)


def _cmd_reconstruct(args) -> None:
    dataset = _load_dataset(args.input)
    cb = persistence.load_codebook(args.codebook)
    codes = persistence.load_codes(args.codes)
    mse, rmse = pq.reconstruction_error(dataset, cb, codes=codes, threads=args.threads)
    print(f"mse={mse!r} rmse={rmse!r}")


def _query_vector(args, cb, codes) -> np.ndarray:
    if args.row is not None:
        if not 0 <= args.row < codes.n_rows:
            raise InvalidParams(f"--row {args.row} outside [0, {codes.n_rows})")
        return pq.decode(codes.entries[args.row], cb)
    if cb.scaler is not None:
        return apply_scaler(args.vector, cb.scaler)
    return args.vector


def _cmd_query(args) -> None:
    cb = persistence.load_codebook(args.codebook)
    codes = persistence.load_codes(args.codes)
    y = _query_vector(args, cb, codes)
    if args.analogs:
        idx = search.build_inverted_index(codes, cb)
        ids = search.analog_lookup(y, idx, cb)
        code_y = pq.encode(y, cb)
        if args.mode == "adc":
            dist = search.adc_distance(code_y, search.build_lookup_table(y, cb))
        else:
            dist = search.sdc_distance(code_y, code_y, cb)
        neighbors = [search.Neighbor(int(i), dist) for i in ids]
    else:
        neighbors = search.knn(y, codes, cb, args.k, mode=args.mode, threads=args.threads)
    for rank, nb in enumerate(neighbors, start=1):
        print(f"{rank},{nb.row_id},{nb.distance:.9g}")


def _cmd_classify(args) -> None:
    codes = persistence.load_codes(args.codes)
    cb = persistence.load_codebook(args.codebook)
    table = read_raw_csv(args.coords)
    if table.n_rows != codes.n_rows:
        raise SchemaError(
            f"{args.coords}: {table.n_rows} rows, codes file has {codes.n_rows}"
        )
    persistence.save_assignments(codes, table.values[:, :2], cb, args.out)


def _plot_path(out) -> Path:
    return Path(out).with_suffix(".png")


def _cmd_sweep(args) -> None:
    dataset = _load_dataset(args.input)
    records = sweep_mod.run_sweep(
        dataset,
        args.subspaces,
        args.centroids,
        seed=args.seed,
        max_iters=args.max_iters,
        tol=args.tol,
        repeats=args.repeats,
        threads=args.threads,
    )
    for r in records:
        if r.status == "skipped":
            print(f"skipped M={r.M}, K={r.K}: {r.reason}", file=sys.stderr)
    persistence.save_sweep(records, args.out)
    if not args.no_plot:
        report.plot_sweep(records, _plot_path(args.out))


def _cmd_pareto(args) -> None:
    records = persistence.load_sweep(args.in_path)
    points = sweep_mod.pareto_front(records)
    skipped = [r for r in records if r.status != "ok"]
    persistence.save_pareto(points, args.out, skipped=skipped)
    if not args.no_plot:
        report.plot_pareto(points, _plot_path(args.out))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        args.func(args)
    except SoilPQError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
