"""Command-line pipelines: graph construction, offline decoding, streaming
simulation, and queueing benchmarks.

Primary outputs (transcripts, FST text, JSON reports) are deterministic for
fixed inputs, flags, and seed; anything wall-clock dependent (run headers,
RTFx summaries, warnings) goes to stderr.
"""

from __future__ import annotations

import argparse
import gzip
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .arpa import build_grammar_fst, parse_arpa
from .benchmark import run_kernel_benchmark
from .boosting import BoostTable, boost_costs, load_boost_table
from .decoder import DecodeFailure, DecoderConfig, decode_batch, flatten
from .errors import CtcWfstError
from .graph import build_tlg
from .lexicon import build_lexicon_fst, parse_lexicon, word_symbols
from .logits import read_loglik
from .queueing import MD1Params, compute_stats, md1_latency, simulate_md1
from .streaming import BatcherConfig, Chunk, StreamPool
from .topology import UnitInventory, build_ctc_topo_compact, build_ctc_topo_normal
from .wfst import (
    SymbolTable,
    Wfst,
    format_weight,
    read_fst_text,
    read_symbols,
    write_fst_text,
    write_symbols,
)


def _read_text(path: str) -> str:
    if path.endswith(".gz"):
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return fh.read()
    return Path(path).read_text(encoding="utf-8")


def _load_fst(path: str) -> Wfst:
    return read_fst_text(_read_text(path))


def _save_fst(path: str, g: Wfst) -> None:
    Path(path).write_text(write_fst_text(g), encoding="utf-8")


def _load_words(path: str) -> SymbolTable:
    return read_symbols(_read_text(path))


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_boost(path: str, words: SymbolTable, beam: float) -> BoostTable:
    table, skipped = load_boost_table(_read_text(path), words)
    if skipped:
        _info(f"# warning: skipped {len(skipped)} out-of-vocabulary boost words: "
              + " ".join(skipped))
    big = [words.symbol(w) for w, c in table.entries.items() if -c > beam / 2]
    if big:
        _info(f"# warning: boost magnitude exceeds half the beam width ({beam / 2:g}) "
              f"for: " + " ".join(big))
    return table


# -- graph construction subcommands ------------------------------------------


def _cmd_build_t(args) -> int:
    units = _load_words(args.units)
    inv = UnitInventory.from_symbols(units, args.blank)
    build = build_ctc_topo_normal if args.topology == "normal" else build_ctc_topo_compact
    _save_fst(args.output, build(inv))
    return 0


def _cmd_build_l(args) -> int:
    units = _load_words(args.units)
    inv = UnitInventory.from_symbols(units, args.blank)
    entries = parse_lexicon(_read_text(args.lexicon), inv)
    words_path = Path(args.words)
    if words_path.exists():
        words = _load_words(args.words)
    else:
        words = word_symbols(entries)
        words_path.write_text(write_symbols(words), encoding="utf-8")
        _info(f"# wrote word symbol table to {args.words}")
    _save_fst(args.output, build_lexicon_fst(entries, inv, words))
    return 0


def _cmd_build_g(args) -> int:
    model = parse_arpa(_read_text(args.arpa))
    words = _load_words(args.words)
    _save_fst(args.output, build_grammar_fst(model, words))
    return 0


def _cmd_compose_tlg(args) -> int:
    tlg = build_tlg(_load_fst(args.t), _load_fst(args.l), _load_fst(args.g))
    _save_fst(args.output, tlg)
    _info(f"# tlg states={tlg.num_states} arcs={tlg.num_arcs()}")
    return 0


# -- decoding ------------------------------------------------------------------


def _logf_files(directory: str) -> list[Path]:
    files = sorted(Path(directory).glob("*.logf"))
    if not files:
        raise CtcWfstError(f"no .logf files in {directory}")
    return files


def _cmd_decode(args) -> int:
    graph = _load_fst(args.graph)
    words = _load_words(args.words)
    config = DecoderConfig(
        beam=args.beam, max_active=args.max_active, acoustic_scale=args.acoustic_scale
    )
    _info(
        f"# decode beam={args.beam} max-active={args.max_active} "
        f"acoustic-scale={args.acoustic_scale} workers={args.workers} "
        f"kernel={kernels.KERNEL_NAME}"
    )
    boost = None
    if args.boost:
        table = _load_boost(args.boost, words, args.beam)
        boost = boost_costs(table, flatten(graph).max_olabel)

    files = _logf_files(args.logits_dir)
    utts = [read_loglik(f) for f in files]
    start = time.perf_counter()
    results = decode_batch(graph, config, utts, workers=args.workers, boost=boost)
    wall = time.perf_counter() - start

    lines = []
    failures = 0
    for f, result in zip(files, results):
        if isinstance(result, DecodeFailure):
            failures += 1
            _info(f"# error: {f.stem}: {result.error}")
            continue
        text = " ".join(words.symbol(w) for w in result.words)
        lines.append(f"{f.stem}\t{text}\t{format_weight(result.total_cost)}\n")
    output = "".join(lines)
    if args.output:
        Path(args.output).write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)

    audio_seconds = sum(u.shape[0] for u in utts) * args.frame_shift_ms / 1e3
    _info(f"# rtfx {audio_seconds / wall:.2f} ({audio_seconds:.2f}s audio / {wall:.3f}s wall)")
    return 1 if failures else 0


# -- streaming simulation ------------------------------------------------------


def _cmd_stream_sim(args) -> int:
    graph = _load_fst(args.graph)
    words = _load_words(args.words)
    config = DecoderConfig(
        beam=args.beam, max_active=args.max_active, acoustic_scale=args.acoustic_scale
    )
    files = _logf_files(args.logits_dir)
    num_streams = args.streams if args.streams else len(files)

    boost_map: dict[str, str] = {}
    if args.boost_map:
        boost_map = json.loads(Path(args.boost_map).read_text(encoding="utf-8"))

    # Stream k plays file k (cycled); names gain a suffix when files repeat.
    stream_files = [files[k % len(files)] for k in range(num_streams)]
    stream_names = [
        f.stem if k < len(files) else f"{f.stem}#{k // len(files)}"
        for k, f in enumerate(stream_files)
    ]

    pool = StreamPool(
        graph,
        config,
        BatcherConfig(max_batch=args.max_batch, max_wait_ms=args.max_wait_ms),
        workers=args.workers,
    )
    sid_of = {}
    for name, f in zip(stream_names, stream_files):
        table = None
        if args.boost:
            table = _load_boost(args.boost, words, args.beam)
        if name in boost_map or f.stem in boost_map:
            table = _load_boost(boost_map.get(name, boost_map.get(f.stem)), words, args.beam)
        sid_of[name] = pool.create_stream(boost=table)

    # Arrival schedule in virtual seconds: each stream submits one chunk per
    # 1/rate, streams staggered uniformly inside that period.
    cf = args.chunk_frames
    period = 1.0 / args.rate
    arrivals = []  # (time, stream index, chunk)
    total_frames = 0
    for k, (name, f) in enumerate(zip(stream_names, stream_files)):
        mat = read_loglik(f)
        total_frames += mat.shape[0]
        n_chunks = max(1, math.ceil(mat.shape[0] / cf))
        for i in range(n_chunks):
            chunk = Chunk(
                stream_id=sid_of[name],
                frames=mat[i * cf : (i + 1) * cf],
                is_last=(i == n_chunks - 1),
            )
            arrivals.append((k * period / num_streams + i * period, k, chunk))
    arrivals.sort(key=lambda a: (a[0], a[1]))

    max_wait = args.max_wait_ms / 1e3
    samples = []
    server_free = 0.0
    idx = 0
    waiting: list[tuple[float, int]] = []  # (arrival time, stream index) FIFO
    arrival_of: dict[int, list[float]] = {k: [] for k in range(num_streams)}
    k_of_sid = {sid_of[name]: k for k, name in enumerate(stream_names)}

    def admit(until: float):
        nonlocal idx
        while idx < len(arrivals) and arrivals[idx][0] <= until:
            t, k, chunk = arrivals[idx]
            pool.push_chunk(chunk)
            waiting.append((t, k))
            arrival_of[k].append(t)
            idx += 1

    while idx < len(arrivals) or waiting:
        if not waiting:
            admit(arrivals[idx][0])
            continue
        oldest_t = waiting[0][0]
        t0 = max(server_free, oldest_t)
        admit(t0)
        ready_streams = len({k for _, k in waiting})
        if ready_streams >= args.max_batch:
            launch = t0
        else:
            # Wait for batch-mates until the oldest chunk's deadline.
            fill_time = math.inf
            seen = {k for _, k in waiting}
            for j in range(idx, len(arrivals)):
                seen.add(arrivals[j][1])
                if len(seen) >= args.max_batch:
                    fill_time = arrivals[j][0]
                    break
            launch = max(t0, min(oldest_t + max_wait, fill_time))
        admit(launch)

        t_start = time.perf_counter()
        advanced = pool.step()
        measured = time.perf_counter() - t_start
        service = args.service_ms / 1e3 if args.service_ms is not None else measured
        for sid, _ in advanced:
            k = k_of_sid[sid]
            arrival = arrival_of[k].pop(0)
            waiting.remove((arrival, k))
            samples.append((service * 1e3, (launch - arrival) * 1e3))
        server_free = launch + service

    finals = pool.drain()
    pool.close()

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in stream_names:
        hyp = finals[sid_of[name]]
        text = " ".join(words.symbol(w) for w in hyp.words)
        (outdir / f"{name}.txt").write_text(
            f"{name}\t{text}\t{format_weight(hyp.total_cost)}\n", encoding="utf-8"
        )

    audio_seconds = total_frames * args.frame_shift_ms / 1e3
    stats = compute_stats(samples, rtfx=audio_seconds / server_free)
    (outdir / "latency.json").write_text(
        json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _info(f"# streams={num_streams} chunks={len(samples)} "
          f"avg-total={stats.avg_total_ms:.2f}ms rtfx={stats.rtfx:.2f}")
    return 0


# -- benchmarks ----------------------------------------------------------------


def _cmd_bench_md1(args) -> int:
    lat = md1_latency(MD1Params(lam=args.lam, mu=args.mu))
    report = {
        "avg_compute_ms": lat.compute * 1e3,
        "avg_queue_ms": lat.queue * 1e3,
        "avg_total_ms": lat.total * 1e3,
        "p99_total_ms": lat.total * 1e3,  # deterministic service: no spread modeled
        "rtfx": 0.0,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_bench_sim(args) -> int:
    result = simulate_md1(args.lam, args.service_ms / 1e3, args.n, args.seed)
    report = result.stats.to_dict()
    report["unstable"] = result.unstable
    if result.unstable:
        _info("# warning: unstable parameters (arrival rate >= service rate); "
              "queue latencies grow with run length")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def _cmd_bench_kernels(args) -> int:
    report = run_kernel_benchmark(
        num_utts=args.utts, frames=args.frames, num_words=args.words, seed=args.seed
    )
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctcwfst",
        description="WFST beam-search decoding for CTC models: graph building, "
        "offline decoding, streaming simulation, and queueing analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-t", help="build the CTC token transducer")
    p.add_argument("--units", required=True, help="acoustic unit symbol table")
    p.add_argument("--blank", required=True, help="blank unit symbol")
    p.add_argument("--topology", choices=("normal", "compact"), default="compact")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_build_t)

    p = sub.add_parser("build-l", help="build the lexicon transducer")
    p.add_argument("--lexicon", required=True, help="word<tab>units file")
    p.add_argument("--units", required=True)
    p.add_argument("--blank", required=True, help="blank unit symbol")
    p.add_argument("--words", required=True,
                   help="word symbol table (created from the lexicon if missing)")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_build_l)

    p = sub.add_parser("build-g", help="build the grammar acceptor from an ARPA LM")
    p.add_argument("--arpa", required=True, help="ARPA file (.gz supported)")
    p.add_argument("--words", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_build_g)

    p = sub.add_parser("compose-tlg", help="compose token, lexicon, and grammar graphs")
    p.add_argument("--t", required=True)
    p.add_argument("--l", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_compose_tlg)

    def add_decode_args(p):
        p.add_argument("--graph", required=True, help="TLG fst")
        p.add_argument("--words", required=True)
        p.add_argument("--logits-dir", required=True, help="directory of .logf files")
        p.add_argument("--beam", type=float, default=17.0)
        p.add_argument("--max-active", type=int, default=10_000)
        p.add_argument("--acoustic-scale", type=float, default=1.0)
        p.add_argument("--boost", help="word boost file (word<tab>magnitude)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--frame-shift-ms", type=float, default=10.0)

    p = sub.add_parser("decode", help="offline batch decoding")
    add_decode_args(p)
    p.add_argument("--output", help="transcript file (default: stdout)")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("stream-sim", help="streaming inference simulation")
    add_decode_args(p)
    p.add_argument("--chunk-frames", type=int, default=60)
    p.add_argument("--streams", type=int, default=0,
                   help="number of streams (files are cycled; default one per file)")
    p.add_argument("--rate", type=float, default=2.5, help="chunk requests/sec per stream")
    p.add_argument("--max-batch", type=int, default=8)
    p.add_argument("--max-wait-ms", type=float, default=50.0)
    p.add_argument("--service-ms", type=float, default=None,
                   help="fixed virtual service time per batch (default: measured wall time)")
    p.add_argument("--boost-map", help="JSON file {stream name: boost file}")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_stream_sim)

    p = sub.add_parser("bench", help="queueing model and kernel benchmarks")
    bench_sub = p.add_subparsers(dest="bench_command", required=True)

    b = bench_sub.add_parser("md1", help="closed-form M/D/1 latencies")
    b.add_argument("--lambda", dest="lam", type=float, required=True)
    b.add_argument("--mu", type=float, required=True)
    b.set_defaults(func=_cmd_bench_md1)

    b = bench_sub.add_parser("sim", help="M/D/1 discrete-event simulation")
    b.add_argument("--lambda", dest="lam", type=float, required=True)
    b.add_argument("--service-ms", type=float, required=True)
    b.add_argument("--n", type=int, default=200_000)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=_cmd_bench_sim)

    b = bench_sub.add_parser("kernels", help="compare compiled and pure-Python kernels")
    b.add_argument("--utts", type=int, default=20)
    b.add_argument("--frames", type=int, default=200)
    b.add_argument("--words", type=int, default=30)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=_cmd_bench_kernels)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CtcWfstError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
