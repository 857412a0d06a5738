"""Command-line front end.

Subcommands::

    prove     make one proof entry and print it as 140 hex chars
    match     decide whether two proof entries vouch for the same secret
    vectors   emit a proof test-vector file for cross-implementation checks
    synth     write a synthetic scenario as FCD CSV
    simulate  run the simulator over an FCD trace or synthetic scenario
    fit       fit y = a*ln(x) + b over a metrics CSV

Exit status: 0 on success (and on MATCH), 1 for a domain no (NO-MATCH),
2 for usage or validation errors.
"""

from __future__ import annotations

import argparse
import random
import sys

from . import __version__
from .crypto import (
    Pseudonym,
    canonicalize_shared_secret,
    derive_public_key,
    make_proof,
    match_proofs,
    recover_key,
)
from .sim import (
    SimParams,
    fit_log,
    fit_report_lines,
    load_fcd,
    load_params_file,
    metrics_csv_lines,
    run_simulation,
    synth_scenario,
    write_fcd_csv,
)
from .sim.fit import DegenerateFit
from .wire import ProofEntry, decode_proof_entry, encode_proof_entry, prefix_of

EXIT_OK = 0
EXIT_NO = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _pseudonym(text: str) -> Pseudonym:
    try:
        return Pseudonym(bytes.fromhex(text))
    except ValueError as exc:
        raise UsageError(f"bad pseudonym {text!r}: {exc}") from None


def _entry(text: str) -> ProofEntry:
    try:
        return decode_proof_entry(bytes.fromhex(text))
    except ValueError as exc:
        raise UsageError(f"bad proof entry: {exc}") from None


def cmd_prove(args) -> int:
    ss = canonicalize_shared_secret(_pseudonym(args.target_id), args.plate)
    sig = make_proof(ss, _pseudonym(args.prover_id), args.work_factor)
    entry = ProofEntry(object_id=0, prefix=prefix_of(_pseudonym(args.target_id)), sig=sig)
    print(encode_proof_entry(entry).hex())
    return EXIT_OK


def cmd_match(args) -> int:
    entry_a = _entry(args.entry_a)
    entry_b = _entry(args.entry_b)
    sender_a = _pseudonym(args.sender_a)
    sender_b = _pseudonym(args.sender_b)
    try:
        key_a = recover_key(sender_a, entry_a.sig)
        key_b = recover_key(sender_b, entry_b.sig)
        matched = match_proofs((sender_a, entry_a.sig), (sender_b, entry_b.sig))
    except ValueError as exc:
        raise UsageError(f"recovery failed: {exc}") from None
    print(f"key-a {key_a.hex()}")
    print(f"key-b {key_b.hex()}")
    print("MATCH" if matched else "NO-MATCH")
    return EXIT_OK if matched else EXIT_NO


def cmd_vectors(args) -> int:
    rng = random.Random(args.seed)
    lines = []
    for _ in range(args.count):
        target = Pseudonym(rng.randbytes(15) + b"\x01")
        plate = "".join(rng.choices("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789", k=7))
        prover = Pseudonym(rng.randbytes(15) + b"\x02")
        ss = canonicalize_shared_secret(target, plate)
        sig = make_proof(ss, prover, args.work_factor)
        pk = derive_public_key(ss, args.work_factor)
        lines.append(
            ",".join(
                (
                    ss.hex(),
                    prover.hex(),
                    str(args.work_factor),
                    str(sig.v),
                    f"{sig.r:064x}",
                    f"{sig.s:064x}",
                    pk.hex(),
                )
            )
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    scenario = synth_scenario(args.kind, args.vehicles, args.spacing, args.ticks, args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_fcd_csv(scenario, fh)
    else:
        write_fcd_csv(scenario, sys.stdout)
    return EXIT_OK


def _build_params(args) -> SimParams:
    params = SimParams()
    if args.params:
        params = load_params_file(args.params, params)
    from dataclasses import replace

    overrides = {}
    for arg_name, field_name in (
        ("perception", "perception_m"),
        ("fov", "fov_deg"),
        ("comm_range", "comm_range_m"),
        ("comm_delay", "comm_delay_ms"),
        ("cadence", "cadence_ms"),
        ("work_factor", "work_factor"),
        ("seed", "seed"),
    ):
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field_name] = value
    return replace(params, **overrides)


def cmd_simulate(args) -> int:
    params = _build_params(args)
    if args.fcd:
        scenario = load_fcd(args.fcd, seed=params.seed)
    else:
        scenario = synth_scenario(
            args.synth_kind, args.vehicles, args.spacing, args.ticks, params.seed
        )
    result = run_simulation(scenario, params)
    csv_text = "\n".join(metrics_csv_lines(result.metrics)) + "\n"
    event_text = "".join(line + "\n" for line in result.events)
    if args.metrics_out:
        with open(args.metrics_out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.events_out:
        with open(args.events_out, "w", encoding="utf-8") as fh:
            fh.write(event_text)
    if args.fit:
        points = [
            (float(m.total_vehicles), m.confirmed_proof_rate)
            for m in result.metrics
            if m.total_vehicles > 0
        ]
        try:
            a, b, rmse = fit_log(points)
            report = fit_report_lines(a, b, rmse)
        except DegenerateFit as exc:
            report = [f"fit: degenerate ({exc})"]
        for line in report:
            print(line)
    return EXIT_OK


def cmd_fit(args) -> int:
    points = []
    with open(args.metrics, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        try:
            x_col = header.index(args.x_column)
            y_col = header.index(args.y_column)
        except ValueError:
            raise UsageError(
                f"metrics CSV lacks columns {args.x_column!r}/{args.y_column!r}: {header}"
            ) from None
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            x = float(fields[x_col])
            if x > 0:
                points.append((x, float(fields[y_col])))
    try:
        a, b, rmse = fit_log(points)
    except (DegenerateFit, ValueError) as exc:
        raise UsageError(f"cannot fit: {exc}") from None
    for line in fit_report_lines(a, b, rmse):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafficproof",
        description="proofs of shared traffic observations, and a simulator for them",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="make one proof entry (140 hex chars)")
    p.add_argument("--target-id", required=True, help="target pseudonym, 32 hex chars")
    p.add_argument("--plate", required=True, help="target number plate text")
    p.add_argument("--prover-id", required=True, help="prover pseudonym, 32 hex chars")
    p.add_argument("--work-factor", type=int, default=1)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("match", help="pair two proof entries")
    p.add_argument("--entry-a", required=True, help="proof entry, 140 hex chars")
    p.add_argument("--sender-a", required=True, help="pseudonym of entry A's sender")
    p.add_argument("--entry-b", required=True)
    p.add_argument("--sender-b", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("vectors", help="emit a proof test-vector file")
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--work-factor", type=int, default=1)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_vectors)

    p = sub.add_parser("synth", help="write a synthetic scenario as FCD CSV")
    p.add_argument("--kind", choices=("line", "grid", "ring"), required=True)
    p.add_argument("--vehicles", type=int, required=True)
    p.add_argument("--spacing", type=float, required=True, help="meters between vehicles")
    p.add_argument("--ticks", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run the simulator")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--fcd", help="FCD trace, XML or CSV")
    source.add_argument("--synth-kind", choices=("line", "grid", "ring"))
    p.add_argument("--vehicles", type=int, help="synthetic scenario size")
    p.add_argument("--spacing", type=float, help="synthetic scenario spacing (m)")
    p.add_argument("--ticks", type=int, help="synthetic scenario length")
    p.add_argument("--params", help="key = value parameter file")
    p.add_argument("--perception", type=float, help="camera range (m)")
    p.add_argument("--fov", type=float, help="camera field of view (deg)")
    p.add_argument("--comm-range", type=float, help="communication range (m)")
    p.add_argument("--comm-delay", type=int, help="communication delay (ms)")
    p.add_argument("--cadence", type=int, help="proof cadence (ms)")
    p.add_argument("--work-factor", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--metrics-out", help="metrics CSV path (default stdout)")
    p.add_argument("--events-out", help="event log path")
    p.add_argument("--fit", action="store_true", help="append a log-fit report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit y = a*ln(x) + b over a metrics CSV")
    p.add_argument("--metrics", required=True, help="CSV produced by simulate")
    p.add_argument("--x-column", default="total")
    p.add_argument("--y-column", default="cp_rate")
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.synth_kind:
        missing = [
            name for name in ("vehicles", "spacing", "ticks") if getattr(args, name) is None
        ]
        if missing:
            parser.error(f"--synth-kind requires --{', --'.join(missing)}")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
