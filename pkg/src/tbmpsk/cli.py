"""Command line front end.

Every file-producing command writes a JSON manifest next to its output;
``replay`` re-runs a manifest and must reproduce the output byte-for-byte
(the manifest's own timestamp is the only thing allowed to differ).

Exit codes: 0 success, 2 configuration/validation error, 3 runtime guard
(enumeration limit, unreachable bound target).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bounds import db_to_linear, linear_to_db, min_snr_for_rate, normal_approx_rate
from .decoders import SINGLE_USER_DECODERS, ml_oracle_decode
from .factor_graph import build_graph, export_edges
from .modulation import encode, transmit_signal
from .ring_code import CASES, TensorShape, case_matrix, systematic_form
from . import sim as simmod
from .sim import SimConfig, config_from_dict, config_to_dict, result_csv, run, sweep_csv, sweep_table, write_manifest


def parse_shape(text: str) -> tuple[int, ...]:
    """Accept '4,2,2' or '4x2x2'."""
    sep = "x" if "x" in text else ","
    try:
        dims = tuple(int(v) for v in text.split(sep) if v.strip())
    except ValueError:
        raise ValueError(f"cannot parse shape {text!r}")
    if not dims:
        raise ValueError(f"cannot parse shape {text!r}")
    return dims


def _shape(args) -> TensorShape:
    dims = parse_shape(args.shape)
    shape = TensorShape(dims, args.mod)
    if shape.dims != dims:
        print(
            f"note: shape {simmod.shape_label(dims)} canonicalized to "
            f"{simmod.shape_label(shape.dims)}",
            file=sys.stderr,
        )
    return shape


def _emit(out_path: str | None, text: str, command: str, config_doc: dict, extras: dict | None = None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
        write_manifest(out_path, command, config_doc, extras)
    else:
        sys.stdout.write(text)


def _read_complex_lines(path: str) -> np.ndarray:
    """One 're im' pair per line."""
    values = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{ln}: expected 're im', got {line.strip()!r}")
            values.append(complex(float(parts[0]), float(parts[1])))
    return np.array(values, dtype=complex)


def _parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


# --- per-command text producers (shared by the commands and replay) ----------


def matrix_text(doc: dict) -> str:
    shape = TensorShape(tuple(doc["dims"]), doc["modulation_order"])
    g = case_matrix(shape, doc["case"])
    if doc.get("systematic"):
        if doc["case"] != 1:
            raise ValueError("--systematic applies to case 1 only")
        g, _ = systematic_form(g, shape)
    return g.to_text()


def encode_text(doc: dict) -> str:
    shape = TensorShape(tuple(doc["dims"]), doc["modulation_order"])
    codeword = encode(np.array(doc["info"]), shape, doc["case"])
    samples = transmit_signal(codeword, shape.modulation_order)
    return "".join(f"{float(z.real)!r} {float(z.imag)!r}\n" for z in samples)


def decode_text(doc: dict) -> str:
    shape = TensorShape(tuple(doc["dims"]), doc["modulation_order"])
    y = np.array([complex(re, im) for re, im in doc["received"]])
    if y.size != shape.blocklength:
        raise ValueError(f"expected {shape.blocklength} samples, got {y.size}")
    if doc["decoder"] == "ml":
        decided = ml_oracle_decode(y, shape, doc["case"])
    else:
        decided = SINGLE_USER_DECODERS["bp"](
            y[None], doc["noise_var"], shape, doc["case"], doc["max_iters"], doc["damping"]
        )[0]
    return " ".join(str(int(v)) for v in decided) + "\n"


def graph_text(doc: dict) -> str:
    shape = TensorShape(tuple(doc["dims"]), doc["modulation_order"])
    return export_edges(build_graph(shape, doc["case"]))


def simulate_text(doc: dict) -> str:
    return result_csv(run(config_from_dict(doc)))


def sweep_text(doc: dict) -> str:
    configs = [config_from_dict(c) for c in doc["configs"]]
    rows = sweep_table(
        configs, doc["target_error"], doc["lo_db"], doc["hi_db"], doc["resolution_db"]
    )
    return sweep_csv(rows)


REPLAYERS = {
    "matrix": matrix_text,
    "encode": encode_text,
    "decode": decode_text,
    "export-graph": graph_text,
    "simulate": simulate_text,
    "sweep": sweep_text,
}


# --- command handlers ---------------------------------------------------------


def cmd_matrix(args) -> int:
    shape = _shape(args)
    doc = {
        "dims": list(shape.dims),
        "modulation_order": shape.modulation_order,
        "case": args.case,
        "systematic": bool(args.systematic),
    }
    _emit(args.out, matrix_text(doc), "matrix", doc, {"shape_given": args.shape})
    return 0


def cmd_encode(args) -> int:
    shape = _shape(args)
    if (args.info is None) == (args.infile is None):
        raise ValueError("provide exactly one of --info or --in")
    if args.info is not None:
        info = _parse_ints(args.info)
    else:
        with open(args.infile) as fh:
            info = _parse_ints(fh.read())
    doc = {
        "dims": list(shape.dims),
        "modulation_order": shape.modulation_order,
        "case": args.case,
        "info": info,
    }
    _emit(args.out, encode_text(doc), "encode", doc, {"shape_given": args.shape})
    return 0


def cmd_decode(args) -> int:
    shape = _shape(args)
    y = _read_complex_lines(args.infile)
    doc = {
        "dims": list(shape.dims),
        "modulation_order": shape.modulation_order,
        "case": args.case,
        "decoder": args.decoder,
        "noise_var": args.noise_var,
        "max_iters": args.max_iters,
        "damping": args.damping,
        "received": [[z.real, z.imag] for z in y],
    }
    _emit(args.out, decode_text(doc), "decode", doc, {"shape_given": args.shape})
    return 0


def cmd_export_graph(args) -> int:
    shape = _shape(args)
    doc = {
        "dims": list(shape.dims),
        "modulation_order": shape.modulation_order,
        "case": args.case,
    }
    _emit(args.out, graph_text(doc), "export-graph", doc, {"shape_given": args.shape})
    return 0


def cmd_bound(args) -> int:
    if (args.snr_db is None) == (args.rate is None):
        raise ValueError("provide exactly one of --snr-db or --rate")
    if args.snr_db is not None:
        rate = normal_approx_rate(args.blocklength, args.target_error, db_to_linear(args.snr_db))
        print(repr(rate))
    else:
        snr = min_snr_for_rate(args.blocklength, args.target_error, args.rate)
        print(repr(linear_to_db(snr)))
    return 0


def _config_from_args(args) -> SimConfig:
    shape = _shape(args)
    return SimConfig(
        dims=shape.dims,
        modulation_order=shape.modulation_order,
        snrs_db=tuple(float(v) for v in args.snr_db.replace(",", " ").split()),
        trials=args.trials,
        seed=args.seed,
        case=args.case,
        scenario=args.scenario,
        decoder=args.decoder,
        num_users=args.users,
        num_antennas=args.antennas,
        stop_errors=args.stop_errors,
        max_iters=args.max_iters,
        damping=args.damping,
        threads=args.threads,
        batch_size=args.batch_size,
    )


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    doc = config_to_dict(config)
    _emit(args.out, simulate_text(doc), "simulate", doc, {"shape_given": args.shape})
    return 0


def cmd_sweep(args) -> int:
    shapes = [parse_shape(s) for s in args.shapes.split(";") if s.strip()]
    mods = [int(v) for v in args.mods.replace(",", " ").split()]
    configs = []
    for dims in shapes:
        for m in mods:
            configs.append(
                SimConfig(
                    dims=TensorShape(dims, m).dims,
                    modulation_order=m,
                    snrs_db=(args.snr_lo, args.snr_hi),
                    trials=args.trials,
                    seed=args.seed,
                    case=args.case,
                    scenario="awgn",
                    decoder=args.decoder,
                    stop_errors=args.stop_errors,
                    max_iters=args.max_iters,
                    damping=args.damping,
                    threads=args.threads,
                    batch_size=args.batch_size,
                )
            )
    doc = {
        "configs": [config_to_dict(c) for c in configs],
        "target_error": args.target_per,
        "lo_db": args.snr_lo,
        "hi_db": args.snr_hi,
        "resolution_db": args.resolution,
    }
    _emit(args.out, sweep_text(doc), "sweep", doc, {"shapes_given": args.shapes})
    return 0


def cmd_replay(args) -> int:
    with open(args.manifest) as fh:
        doc = json.load(fh)
    command = doc.get("command")
    if command not in REPLAYERS:
        raise ValueError(f"manifest command {command!r} is not replayable")
    config_doc = doc["config"]
    if args.threads is not None:
        if command == "simulate":
            config_doc["threads"] = args.threads
        elif command == "sweep":
            for c in config_doc["configs"]:
                c["threads"] = args.threads
    out_path = args.out or doc.get("output")
    if not out_path:
        raise ValueError("manifest records no output path; pass --out")
    text = REPLAYERS[command](config_doc)
    _emit(out_path, text, command, config_doc)
    return 0


# --- parser -------------------------------------------------------------------


def _add_shape_args(p: argparse.ArgumentParser, with_case: bool = True) -> None:
    p.add_argument("--shape", required=True, help="tensor dims, e.g. 4,2,2 or 4x2x2")
    p.add_argument("--mod", type=int, required=True, help="PSK modulation order M")
    if with_case:
        p.add_argument("--case", type=int, default=1, choices=CASES,
                       help="reference-symbol case (default 1, non-coherent)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbmpsk",
        description="Tensor-based modulation over M-PSK: codes, receivers, simulation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matrix", help="write a generator matrix as text")
    _add_shape_args(p)
    p.add_argument("--systematic", action="store_true",
                   help="write the [I | P] column permutation (case 1)")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("encode", help="map info symbols to complex samples")
    _add_shape_args(p)
    p.add_argument("--info", help="info symbols, e.g. 0,1,2,3,0")
    p.add_argument("--in", dest="infile", help="file of whitespace-separated info symbols")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode complex samples back to info symbols")
    _add_shape_args(p)
    p.add_argument("--in", dest="infile", required=True, help="file of 're im' lines")
    p.add_argument("--noise-var", type=float, default=1e-6,
                   help="channel noise variance assumed by the decoder")
    p.add_argument("--decoder", choices=sorted(SINGLE_USER_DECODERS), default="bp")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("export-graph", help="write the factor graph's edge list")
    _add_shape_args(p)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("bound", help="normal-approximation rate or minimum SNR")
    p.add_argument("--blocklength", type=int, required=True)
    p.add_argument("--target-error", type=float, required=True)
    p.add_argument("--snr-db", type=float, help="report the achievable rate at this SNR")
    p.add_argument("--rate", type=float, help="report the minimum SNR (dB) for this rate")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="Monte Carlo error-rate points")
    _add_shape_args(p)
    p.add_argument("--scenario", choices=simmod.SCENARIOS, default="awgn")
    p.add_argument("--decoder", choices=sorted(SINGLE_USER_DECODERS), default="bp")
    p.add_argument("--snr-db", required=True, help="SNR points in dB, e.g. 0,2,4")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True,
                   help="master seed (mandatory: results are part of the record)")
    p.add_argument("--stop-errors", type=int, default=100,
                   help="stop a point once this many errors accumulate (0 disables)")
    p.add_argument("--users", type=int, default=1, help="active users (simo-mac)")
    p.add_argument("--antennas", type=int, default=1, help="receive antennas (simo-mac)")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="rate vs measured minimum SNR table")
    p.add_argument("--shapes", required=True, help="semicolon-separated shapes, e.g. 4,2,2;4,4,2")
    p.add_argument("--mods", required=True, help="modulation orders, e.g. 2,4")
    p.add_argument("--case", type=int, default=1, choices=CASES)
    p.add_argument("--decoder", choices=sorted(SINGLE_USER_DECODERS), default="bp")
    p.add_argument("--target-per", type=float, required=True)
    p.add_argument("--snr-lo", type=float, required=True, help="bracket low end, dB")
    p.add_argument("--snr-hi", type=float, required=True, help="bracket high end, dB")
    p.add_argument("--resolution", type=float, default=0.25, help="grid spacing, dB")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stop-errors", type=int, default=100)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("replay", help="re-run a manifest; output must reproduce exactly")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="override the recorded output path")
    p.add_argument("--threads", type=int, help="override worker count (results unchanged)")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
