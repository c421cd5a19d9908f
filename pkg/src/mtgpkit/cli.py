"""Command-line entry point: dc, gen, kv, sim and check subcommands.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from mtgpkit import equidist, mtgpdc, parlane, smoke
from mtgpkit.mtgp import MERSENNE_EXPONENTS, OutputMode, RecursionParams, TemperingParams, generate, seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
KV_BUDGET = 4423

# (p, w) pairs accepted by `dc`: the standard MTGP exponents at w = 32, a few
# desk-scale exponents at w = 32, and the tiny test sizes.
SUPPORTED = {
    32: (521, 607, 1279, 2203, 2281) + mtgpdc.STANDARD_EXPONENTS,
    16: (89,),
    8: (17, 19, 89),
    4: (13,),
}


class UsageError(Exception):
    pass


def _parse_ids(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = (int(x, 0) for x in text.split("..", 1))
            if hi < lo:
                raise UsageError(f"empty id range {text!r}")
            ids = list(range(lo, hi + 1))
        else:
            ids = [int(text, 0)]
    except ValueError:
        raise UsageError(f"bad id {text!r}") from None
    if any(not 0 <= i < 2**32 for i in ids):
        raise UsageError("ids must be 32-bit unsigned integers")
    return ids


def _open_out(path):
    return open(path, "w", encoding="ascii") if path else sys.stdout


def _load_records(path: str) -> list[mtgpdc.ParamRecord]:
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return mtgpdc.parse_records(text)
    except mtgpdc.RecordFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _pick_record(args) -> mtgpdc.ParamRecord:
    records = _load_records(args.param_file)
    if not records:
        raise UsageError(f"{args.param_file}: no records")
    if not 0 <= args.record < len(records):
        raise UsageError(f"record index {args.record} out of range (file has {len(records)})")
    return records[args.record]


def cmd_dc(args) -> int:
    if args.wordsize not in SUPPORTED or args.mexp not in SUPPORTED[args.wordsize]:
        raise UsageError(f"unsupported (mexp, wordsize) = ({args.mexp}, {args.wordsize})")
    ids = _parse_ids(args.id)
    records = []
    for id_ in ids:
        start = time.perf_counter()
        try:
            rec = mtgpdc.create_record(args.mexp, args.wordsize, id_, args.seed,
                                       max_candidates=args.max_candidates)
        except mtgpdc.SearchExhausted as exc:
            print(f"id {id_}: {exc}", file=sys.stderr)
            return EXIT_FAIL
        records.append(rec)
        print(f"id {id_}: sha1 {rec.charpoly_sha1} delta {rec.delta} "
              f"({time.perf_counter() - start:.1f} s)", file=sys.stderr)
    try:
        out = _open_out(args.out)
        out.write(mtgpdc.emit_records(records))
        if out is not sys.stdout:
            out.close()
    except OSError as exc:
        print(f"cannot write output: {exc.strerror}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.count <= 0:
        raise UsageError("count must be positive")
    rec = _pick_record(args)
    mode = OutputMode(args.mode)
    if mode is not OutputMode.UINT and rec.rp.wordsize != 32:
        raise UsageError("float mode requires 32-bit words")
    state = seed(rec.rp, rec.tp, args.seed)
    start = time.perf_counter()
    chunks = []
    left = args.count
    while left:
        n = min(left, 1 << 22)
        chunks.append(generate(state, rec.tp, n, mode))
        left -= n
    elapsed = time.perf_counter() - start
    data = np.concatenate(chunks)
    if args.throughput:
        rate = args.count / elapsed / 1e6 if elapsed > 0 else float("inf")
        print(f"generated {args.count} outputs in {elapsed:.3f} s ({rate:.1f} M/s)", file=sys.stderr)
    if args.format == "none":
        return EXIT_OK
    if args.format == "binary":
        payload = data.astype("<u4") if data.dtype != np.float32 else data.astype("<f4")
        if args.out:
            with open(args.out, "wb") as fh:
                fh.write(payload.tobytes())
        else:
            sys.stdout.buffer.write(payload.tobytes())
        return EXIT_OK
    out = _open_out(args.out)
    if args.format == "hex":
        words = data.view(np.uint32) if data.dtype == np.float32 else data
        digits = -(-rec.rp.wordsize // 4)
        out.write("".join(f"{x:0{digits}x}\n" for x in words.tolist()))
    else:
        if mode is OutputMode.FLOAT12:
            data = data.view(np.float32)
        out.write("".join(f"{x!r}\n" for x in data.tolist()))
    if out is not sys.stdout:
        out.close()
    return EXIT_OK


def cmd_kv(args) -> int:
    rec = _pick_record(args)
    p = rec.rp.mexp
    if args.method == "rank" and p > KV_BUDGET and not args.allow_large:
        raise UsageError(f"p = {p} exceeds the rank-method budget {KV_BUDGET}; "
                         "pass --allow-large or --method lattice")
    side = equidist.Side(args.side)
    report = equidist.kv_table(rec.rp, rec.tp, side, method=args.method)
    out = _open_out(args.out)
    if args.format == "csv":
        out.write("v,k,d,r\n")
        for v, (k, d) in enumerate(zip(report.kv, report.dv), start=1):
            out.write(f"{v},{k},{d},{equidist.format_ratio(k, d)}\n")
        out.write(f"delta,{report.delta},max_d,{report.max_defect}\n")
    else:
        out.write(f"{'v':>3} {'k(v)':>8} {'d(v)':>6} {'r(v)%':>7}\n")
        for v, (k, d) in enumerate(zip(report.kv, report.dv), start=1):
            out.write(f"{v:>3} {k:>8} {d:>6} {equidist.format_ratio(k, d):>7}\n")
        out.write(f"Delta = {report.delta}  (max d(v) = {report.max_defect})\n")
    if out is not sys.stdout:
        out.close()
    return EXIT_OK


def _sim_blocks(args) -> list[tuple[RecursionParams, TemperingParams]]:
    if args.param_file:
        records = _load_records(args.param_file)
        if not records:
            raise UsageError(f"{args.param_file}: no records")
        return [(r.rp, r.tp) for r in records][: args.blocks]
    if args.mexp is None:
        raise UsageError("sim needs --param-file or --mexp")
    # Structurally valid but uncertified parameters: equivalence does not need a
    # maximal period.
    blocks = []
    for b in range(args.blocks):
        rng = mtgpdc.SearchRng(args.seed, b, args.mexp)
        try:
            n, r = mtgpdc.derive_sizes(args.mexp, args.wordsize)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        lo, hi = mtgpdc.middle_range(n)
        sh1, sh2 = mtgpdc.shifts(args.wordsize)
        rmat = mtgpdc.random_r(rng, args.wordsize)
        rp = RecursionParams(args.mexp, args.wordsize, n, lo + rng.below(hi - lo + 1), r,
                             sh1, sh2, rmat)
        tp = TemperingParams.from_rows([rng.bits(args.wordsize) for _ in range(4)], args.wordsize)
        blocks.append((rp, tp))
    return blocks


def cmd_sim(args) -> int:
    blocks = _sim_blocks(args)
    rp0 = blocks[0][0]
    lanes = args.lanes if args.lanes is not None else parlane.default_lanes(rp0)
    if lanes < 1:
        raise UsageError("lanes must be positive")
    bound = min(rp.n - rp.m for rp, _ in blocks)
    if lanes > bound:
        print(f"{lanes} lanes exceeds parallelism bound N-M = {bound}", file=sys.stderr)
        return EXIT_USAGE
    cfg = parlane.LaneConfig(lanes, block_count=len(blocks))
    count = args.count if args.count is not None else 1000 * lanes
    count -= count % lanes
    if count <= 0:
        raise UsageError("count must be at least the lane count")
    ok = True
    if len(blocks) == 1:
        rp, tp = blocks[0]
        ok = parlane.verify_equivalence(rp, tp, args.seed, cfg, count)
    else:
        streams = parlane.run_blocks([(rp, tp, args.seed) for rp, tp in blocks], cfg, count)
        for (rp, tp), got in zip(blocks, streams):
            ok &= bool(np.array_equal(got, generate(seed(rp, tp, args.seed), tp, count)))
    print(f"lanes={lanes} blocks={len(blocks)} outputs={count} {'PASS' if ok else 'FAIL'}")
    if args.report_conflicts:
        rp, tp = blocks[0]
        _, trace = parlane.run_block(rp, tp, args.seed, cfg, count)
        report = parlane.count_bank_conflicts(trace, cfg, include_tables=args.include_tables)
        print(report.as_text())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check(args) -> int:
    records = _load_records(args.param_file)
    ok = True
    for k, rec in enumerate(records):
        cert = mtgpdc.recertify(rec)
        if not cert.ok:
            print(f"record {k} (id {rec.id}): FAIL {cert.failed_field}: {cert.detail}")
            ok = False
            continue
        print(f"record {k} (id {rec.id}): certified")
        if args.skip_smoke:
            continue
        if rec.rp.mexp < smoke.MIN_EXPONENT:
            print(f"record {k}: smoke battery skipped (period too short)")
            continue
        words = generate(seed(rec.rp, rec.tp, args.seed), rec.tp, args.count)
        for res in smoke.battery(words, rec.rp.wordsize):
            verdict = "pass" if res.passed else "FAIL"
            print(f"record {k}: {res.name} stat={res.statistic:.3f} p={res.p_value:.4g} {verdict}")
            ok &= res.passed
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtgpkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dc", help="search parameter sets for one or more IDs")
    p.add_argument("--mexp", type=int, required=True)
    p.add_argument("--wordsize", type=int, default=32)
    p.add_argument("--id", default="0", help="single id or inclusive range a..b")
    p.add_argument("--seed", type=int, default=1, help="search seed")
    p.add_argument("--max-candidates", type=int, default=mtgpdc.DEFAULT_MAX_CANDIDATES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dc)

    p = sub.add_parser("gen", help="generate outputs from a parameter file")
    p.add_argument("--param-file", required=True)
    p.add_argument("--record", type=int, default=0, help="0-based record index")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--mode", choices=[m.value for m in OutputMode], default="uint")
    p.add_argument("--format", choices=["hex", "binary", "text", "none"], default="hex")
    p.add_argument("--throughput", action="store_true", help="report generation speed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("kv", help="print the k(v)/d(v) table of a parameter set")
    p.add_argument("--param-file", required=True)
    p.add_argument("--record", type=int, default=0)
    p.add_argument("--side", choices=[s.value for s in equidist.Side], default="msb")
    p.add_argument("--method", choices=["rank", "lattice"], default="rank")
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.add_argument("--allow-large", action="store_true",
                   help=f"run the rank method above p = {KV_BUDGET}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kv)

    p = sub.add_parser("sim", help="simulate the lane-parallel scheme")
    p.add_argument("--param-file")
    p.add_argument("--mexp", type=int)
    p.add_argument("--wordsize", type=int, default=32)
    p.add_argument("--lanes", type=int)
    p.add_argument("--blocks", type=int, default=1)
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--report-conflicts", action="store_true")
    p.add_argument("--include-tables", action="store_true",
                   help="count lookup-table reads as shared-memory accesses")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("check", help="re-certify a parameter file and run the smoke battery")
    p.add_argument("--param-file", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=10**6)
    p.add_argument("--skip-smoke", action="store_true")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "mexp", None) is not None and args.mexp not in MERSENNE_EXPONENTS:
        print(f"error: {args.mexp} is not a Mersenne exponent", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "blocks", 1) < 1:
        print("error: blocks must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
