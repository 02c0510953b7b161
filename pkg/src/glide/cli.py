"""Command-line interface.

Subcommands: ``run`` (one trial, one JSON line), ``compare`` (matched trials
plus a summary line), ``replay`` (feed a replay CSV through a technique,
emitting per-frame telemetry records), ``synth`` (script to replay CSV),
``serve`` (live session service) and ``report`` (trials plus rendered
figures).  Exit codes: 0 success, 1 config/parse errors, 2 trial timeout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, Configs, load_configs
from .frames import (
    FrameError,
    PressureScript,
    ScriptSegment,
    read_replay,
    synth_stream,
    write_replay,
)
from .harness import compare, run_trial, run_trial_traced
from .paths import InvalidGeometry, make_scenario
from .session import ControlError, ProtocolError, Session

TASKS = ("open", "zigzag", "arc")
TECHNIQUES = ("gip", "wip")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIMEOUT = 2


def _load_configs(path: str | None) -> Configs:
    if path is None:
        return Configs.default()
    return load_configs(path)


def _out_stream(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _trial_line(task: str, technique: str, seed: int, result) -> str:
    payload = {"task": task, "technique": technique, "seed": seed}
    payload.update(result.as_dict())
    return json.dumps(payload, separators=(",", ":"))


def cmd_run(args) -> int:
    configs = _load_configs(args.config)
    scenario = make_scenario(args.task, args.seed, track_w=configs.drive.track_w)
    result = run_trial(scenario, args.technique, configs, args.rate, args.seed)
    stream, close = _out_stream(args.out)
    try:
        stream.write(_trial_line(args.task, args.technique, args.seed, result) + "\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK if result.completed else EXIT_TIMEOUT


def cmd_compare(args) -> int:
    configs = _load_configs(args.config)
    stream, close = _out_stream(args.out)
    try:
        def on_trial(name, tech, seed, res):
            stream.write(_trial_line(args.task, tech, seed, res) + "\n")

        table = compare(args.task, tuple(args.techniques), args.reps, args.seed,
                        configs, args.rate, on_trial=on_trial)
        stream.write(json.dumps(table, separators=(",", ":")) + "\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK


def cmd_replay(args) -> int:
    configs = _load_configs(args.config)
    with open(args.infile, encoding="utf-8") as fh:
        frames = read_replay(fh)
    session = Session(args.technique, configs)
    if args.scenario:
        session.control(f"scenario {args.scenario} {args.seed}")
    window = args.calibrate_window
    if window is None:
        window = configs.chain.calib_window_s
    if window > 0:
        session.control(f"calibrate {window:g}")
    stream, close = _out_stream(args.out)
    try:
        for frame in frames:
            rec = session.process(frame)
            stream.write(rec.to_json() + "\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK


def cmd_synth(args) -> int:
    segments = []
    with open(args.script, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) not in (5, 6):
                raise ConfigError(
                    f"script line {line_no}: expected duration,lf,lr,rf,rr[,ramp]"
                )
            ramp = len(parts) == 6 and parts[5].lower() in ("1", "true", "ramp")
            segments.append(
                ScriptSegment(float(parts[0]), *(int(p) for p in parts[1:5]), ramp=ramp)
            )
    frames = synth_stream(PressureScript(tuple(segments)), args.rate)
    stream, close = _out_stream(args.out)
    try:
        write_replay(frames, stream)
    finally:
        if close:
            stream.close()
    return EXIT_OK


def cmd_serve(args) -> int:
    from .config import apply_setting
    from .service import SessionConfig, serve

    configs = _load_configs(args.config)
    for item in args.set or []:
        key, _, value = item.partition("=")
        configs = apply_setting(configs, key.strip(), value.strip())
    cfg = SessionConfig(
        host=args.host,
        ingest_port=args.ingest_port,
        telemetry_port=args.telemetry_port,
        ws_port=args.ws_port,
        technique=args.technique,
        telemetry_rate_hz=args.telemetry_rate,
        configs=configs,
    )
    try:
        serve(cfg)
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import plot_comparison, plot_trajectory

    configs = _load_configs(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines_path = out_dir / f"trials_{args.task}.jsonl"
    with open(lines_path, "w", encoding="utf-8") as stream:
        def on_trial(name, tech, seed, res):
            stream.write(_trial_line(args.task, tech, seed, res) + "\n")

        table = compare(args.task, tuple(args.techniques), args.reps, args.seed,
                        configs, args.rate, on_trial=on_trial)
        stream.write(json.dumps(table, separators=(",", ":")) + "\n")
    scenario = make_scenario(args.task, args.seed, track_w=configs.drive.track_w)
    trails = {}
    for tech in args.techniques:
        _, trail, _ = run_trial_traced(scenario, tech, configs, args.rate, args.seed)
        trails[tech] = trail
    traj_path = out_dir / f"trajectory_{args.task}.png"
    plot_trajectory(scenario, trails, traj_path, title=f"{args.task} task")
    cmp_path = out_dir / f"compare_{args.task}.png"
    plot_comparison(table, cmp_path)
    print(f"wrote {lines_path}, {traj_path}, {cmp_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glide", description="Foot-steered differential-drive locomotion stack"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, technique=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--rate", type=float, default=100.0, help="frame rate [Hz]")
        p.add_argument("--out", help="output file (default stdout)")
        if technique:
            p.add_argument("--technique", choices=TECHNIQUES, default="gip")

    p_run = sub.add_parser("run", help="run one scripted trial")
    p_run.add_argument("--task", choices=TASKS, required=True)
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="matched trials across techniques")
    p_cmp.add_argument("--task", choices=TASKS, required=True)
    p_cmp.add_argument("--reps", type=int, default=10)
    p_cmp.add_argument("--techniques", nargs="+", choices=TECHNIQUES,
                       default=list(TECHNIQUES))
    add_common(p_cmp, technique=False)
    p_cmp.set_defaults(func=cmd_compare)

    p_rep = sub.add_parser("replay", help="feed a replay CSV through a technique")
    p_rep.add_argument("--in", dest="infile", required=True, metavar="FILE.csv")
    p_rep.add_argument("--calibrate-window", type=float, default=None,
                       help="baseline window [s]; 0 disables auto-calibration")
    p_rep.add_argument("--scenario", choices=TASKS, help="reference-path overlay")
    add_common(p_rep)
    p_rep.set_defaults(func=cmd_replay)

    p_syn = sub.add_parser("synth", help="render a pressure script to a replay CSV")
    p_syn.add_argument("--script", required=True,
                       help="CSV: duration_s,lf,lr,rf,rr[,ramp]")
    p_syn.add_argument("--rate", type=float, default=100.0)
    p_syn.add_argument("--out", help="output file (default stdout)")
    p_syn.set_defaults(func=cmd_synth)

    p_srv = sub.add_parser("serve", help="run the live session service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--ingest-port", type=int, default=47700)
    p_srv.add_argument("--telemetry-port", type=int, default=47701)
    p_srv.add_argument("--ws-port", type=int, default=47702)
    p_srv.add_argument("--technique", choices=TECHNIQUES, default="gip")
    p_srv.add_argument("--telemetry-rate", type=float, default=60.0)
    p_srv.add_argument("--config", help="flat key=value config file")
    p_srv.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="config override (repeatable)")
    p_srv.set_defaults(func=cmd_serve)

    p_rpt = sub.add_parser("report", help="trials plus rendered figures")
    p_rpt.add_argument("--task", choices=TASKS, required=True)
    p_rpt.add_argument("--reps", type=int, default=5)
    p_rpt.add_argument("--techniques", nargs="+", choices=TECHNIQUES,
                       default=list(TECHNIQUES))
    p_rpt.add_argument("--out-dir", default="reports")
    p_rpt.add_argument("--config", help="flat key=value config file")
    p_rpt.add_argument("--seed", type=int, default=0)
    p_rpt.add_argument("--rate", type=float, default=100.0)
    p_rpt.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FrameError, InvalidGeometry, ControlError,
            ProtocolError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
