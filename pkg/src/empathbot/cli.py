"""Command line entry points.

respond   run one turn on an image file and print the response JSON
eval      score a labeled dataset directory and write the report
simulate  expand a response JSON into LED frames and a wheel trajectory
serve     start the HTTP service

Exit codes: 0 success, 1 a response failed validation (the printed output is
the fallback), 2 configuration, dataset, or backend trouble.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .affect import AffectLabel, default_tables, emoji_to_va
from .evaluation import DatasetError, evaluate, ingest
from .images import ImageError, ImageInput, ImageSource
from .leds import DEFAULT_STRIP_LEN, dump_frames, mode_for_arousal, render
from .motion import DEFAULT_WHEELBASE_M, action_by_name, synthesize
from .pipeline import EmpathicResponse, parse_response, run_turn, to_json
from .runtime import RuntimeConfig, load_config
from .vlm import (
    DEFAULT_KEY_ENV,
    BackendConfig,
    BackendError,
    BackendKind,
    ConfigError,
    make_session,
)

__all__ = ["main"]


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("backend")
    group.add_argument(
        "--backend", choices=["mock", "remote"], default="mock", help="model backend"
    )
    group.add_argument("--endpoint", default="", help="chat completions URL (remote)")
    group.add_argument("--model", default="", help="model name (remote)")
    group.add_argument(
        "--key-env",
        default=DEFAULT_KEY_ENV,
        help=f"environment variable holding the API key (default {DEFAULT_KEY_ENV})",
    )
    group.add_argument("--timeout", type=float, default=30.0, help="request timeout seconds")
    group.add_argument("--max-retries", type=int, default=2, help="retries on transient failures")


def _backend_config(args: argparse.Namespace) -> BackendConfig:
    return BackendConfig(
        kind=BackendKind(args.backend),
        endpoint_url=args.endpoint,
        model_name=args.model,
        api_key_env=args.key_env,
        timeout_s=args.timeout,
        max_retries=args.max_retries,
    )


def _parse_sidecar(value: str | None) -> AffectLabel | None:
    return AffectLabel.parse(value) if value else None


def _cmd_respond(args: argparse.Namespace) -> int:
    image = ImageInput.from_file(args.image, ImageSource.FILE)
    session = make_session(_backend_config(args), sidecar=_parse_sidecar(args.sidecar))
    try:
        turn = run_turn(session, image)
    finally:
        close = getattr(session, "close", None)
        if close is not None:
            close()
    print(to_json(turn.response))
    if turn.fell_back:
        codes = ", ".join(turn.report.codes()) if turn.report else ""
        print(f"validation failed ({codes}); printed the fallback response", file=sys.stderr)
        return 1
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    items = ingest(args.dataset)
    report = evaluate(
        items,
        _backend_config(args),
        grayscale=args.grayscale,
        use_sidecar=not args.no_sidecar,
        workers=args.workers,
    )
    for key, value in report.aggregates.items():
        print(f"{key} {value:.6f}")
    if report.failures:
        print(f"failures {len(report.failures)}")
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
        print(f"report written to {args.out}")
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
        print(f"per-image CSV written to {args.csv}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    raw = Path(args.response).read_text(encoding="utf-8")
    parsed = parse_response(raw)
    if not isinstance(parsed, EmpathicResponse):
        for v in parsed.violations:
            print(f"{v.code}: {v.message}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    arousal = emoji_to_va(parsed.emoji, default_tables()).arousal
    mode = mode_for_arousal(arousal)
    frames = render(parsed.palette, mode, args.strip_len, args.fps, args.duration)
    (out / "frames.txt").write_text(dump_frames(frames), encoding="utf-8")

    trajectory = synthesize(action_by_name(parsed.motion), wheelbase_m=args.wheelbase)
    lines = ["t\tx\ty\ttheta"]
    lines += [f"{t!r}\t{p.x!r}\t{p.y!r}\t{p.theta!r}" for t, p in trajectory.samples]
    (out / "trajectory.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    print(
        f"{parsed.motion}: {len(trajectory.samples)} trajectory samples, "
        f"{len(frames)} LED frames ({mode.kind.value}) -> {out}"
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    if args.config:
        config = load_config(args.config)
        if args.backend != "mock" or args.endpoint or args.model:
            config = RuntimeConfig(
                backend=_backend_config(args),
                strip_len=config.strip_len,
                wheelbase_m=config.wheelbase_m,
                blend_alpha=config.blend_alpha,
                motion_hold_s=config.motion_hold_s,
                fps=config.fps,
                history_path=config.history_path,
                store_images=config.store_images,
            )
    else:
        config = RuntimeConfig(backend=_backend_config(args), history_path=args.history)
    serve(config, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="empathbot",
        description="empathetic robot behavior from camera images",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("respond", help="run one turn on an image and print the response")
    p.add_argument("image", help="PNG or JPEG file")
    p.add_argument("--sidecar", default=None, help="affect label steering the mock backend")
    _add_backend_flags(p)
    p.set_defaults(func=_cmd_respond)

    p = sub.add_parser("eval", help="score a labeled dataset directory")
    p.add_argument("dataset", help="directory of images plus labels")
    p.add_argument("--grayscale", action="store_true", help="convert inputs to luma first")
    p.add_argument(
        "--no-sidecar",
        action="store_true",
        help="do not pass ground-truth labels to the mock backend",
    )
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--csv", default=None, help="write per-image CSV rows here")
    p.add_argument("--workers", type=int, default=4, help="concurrent turns (max 4)")
    _add_backend_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", help="expand a response JSON into frames and a trajectory")
    p.add_argument("response", help="response JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--fps", type=int, default=20, help="LED frame rate")
    p.add_argument("--duration", type=float, default=2.0, help="LED animation seconds")
    p.add_argument("--strip-len", type=int, default=DEFAULT_STRIP_LEN, help="LED count")
    p.add_argument("--wheelbase", type=float, default=DEFAULT_WHEELBASE_M, help="wheelbase meters")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--history", default=None, help="NDJSON history file")
    _add_backend_flags(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, BackendError, DatasetError, ImageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
