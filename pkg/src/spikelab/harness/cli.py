"""Command-line entry point.

Commands run in-process by default. With ``--server URL`` the same request is
sent to a running spikelab service and the returned files are written locally.
Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.error
import urllib.request
from typing import Any, Sequence

from ..errors import ConfigError, NumericalError
from . import commands
from .config import ScenarioConfig, load_config
from .presets import load_preset, preset_names
from .runner import resolve_threads

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _ArgumentError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, scenario: bool = True) -> None:
    if scenario:
        p.add_argument("config", help="scenario JSON file, or preset:NAME for a built-in preset")
        p.add_argument("--seed", type=int, help="override the configured master seed")
        p.add_argument("--reps", type=int, help="override the configured replication count")
        p.add_argument("--threads", type=int, help="worker threads (default: $SPIKELAB_THREADS or 1)")
    p.add_argument("--out-dir", default=".", help="directory for output files (default: current)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spikelab", description="Inference for principal components of spiked covariance matrices.")
    parser.add_argument("--server", help="base URL of a spikelab service; run the command remotely")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate-null", help="type I error run; writes typeI.csv")
    _common(p)
    p.add_argument("--dump-first", action="store_true", help="also write replication 0 as data CSV + hypothesis JSON")

    p = sub.add_parser("power", help="power curve over rotation angles; writes power.csv")
    _common(p)
    p.add_argument("--phi", type=float, nargs="+", help="rotation angles in [0, pi/2]")

    p = sub.add_parser("ecdf", help="null ECDF against the limiting law; writes ecdf.csv")
    _common(p)

    p = sub.add_parser("test", help="run a test on a data matrix; writes report.json")
    p.add_argument("--data", required=True, help="CSV of the M x N data matrix Y with Q = Y Y^T")
    p.add_argument("--hypothesis", required=True, help="hypothesis JSON")
    _common(p, scenario=False)

    p = sub.add_parser("critvals", help="quantiles of g^T U g / q; writes critvals.csv")
    p.add_argument("--U", required=True, dest="U", help="CSV of the covariance U (optional header row)")
    p.add_argument("--q", required=True, type=float)
    p.add_argument("--draws", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    _common(p, scenario=False)

    p = sub.add_parser("presets", help="list built-in presets or print one as JSON")
    p.add_argument("name", nargs="?")

    p = sub.add_parser("serve", help="run the HTTP service (needs uvicorn)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path!r}: {exc.strerror}") from exc


def _scenario(args: argparse.Namespace) -> ScenarioConfig:
    if args.config.startswith("preset:"):
        cfg = load_preset(args.config[len("preset:"):])
    else:
        cfg = load_config(args.config)
    return commands.with_overrides(cfg, args.seed, args.reps)


def _local(args: argparse.Namespace) -> commands.CommandResult:
    if args.command == "simulate-null":
        return commands.simulate_null(_scenario(args), args.threads, args.dump_first)
    if args.command == "power":
        return commands.power(_scenario(args), args.phi, args.threads)
    if args.command == "ecdf":
        return commands.ecdf(_scenario(args), args.threads)
    if args.command == "test":
        return commands.test_data(_read(args.data), _read(args.hypothesis), args.data, args.hypothesis)
    if args.command == "critvals":
        return commands.critvals(_read(args.U), args.q, args.draws, args.seed, source=args.U)
    raise ConfigError(f"unknown command {args.command!r}")


def _remote_request(args: argparse.Namespace) -> tuple[str, dict[str, Any]]:
    if args.command in ("simulate-null", "power", "ecdf"):
        cfg = _scenario(args)
        body: dict[str, Any] = {"config": cfg.model_dump(mode="json", exclude_none=True), "threads": args.threads}
        if args.command == "simulate-null":
            body["dump_first"] = args.dump_first
        if args.command == "power":
            body["phi"] = args.phi
        return f"/{args.command}", body
    if args.command == "test":
        return "/test", {"data_csv": _read(args.data), "hypothesis": json.loads(_read(args.hypothesis))}
    if args.command == "critvals":
        return "/critvals", {"U_csv": _read(args.U), "q": args.q, "draws": args.draws, "seed": args.seed}
    raise ConfigError(f"command {args.command!r} cannot run remotely")


def _remote(args: argparse.Namespace) -> commands.CommandResult:
    path, body = _remote_request(args)
    req = urllib.request.Request(
        args.server.rstrip("/") + path, data=json.dumps(body).encode(), headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            payload = json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        detail = json.loads(exc.read() or b"{}").get("detail", exc.reason)
        if exc.code == 422 and isinstance(detail, str) and detail.startswith("numerical:"):
            raise NumericalError(detail) from None
        raise ConfigError(f"server rejected the request: {detail}") from None
    except urllib.error.URLError as exc:
        raise ConfigError(f"cannot reach server {args.server!r}: {exc.reason}") from None
    return commands.CommandResult(payload["artifacts"], payload["summary"])


def _presets(args: argparse.Namespace) -> int:
    if args.name is None:
        print("\n".join(preset_names()))
    else:
        sys.stdout.write(load_preset(args.name).to_json())
    return EXIT_OK


def _serve(args: argparse.Namespace) -> int:
    try:
        import uvicorn
    except ImportError:
        raise ConfigError("the serve command needs uvicorn: pip install 'artifact[serve]'") from None
    from ..service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "presets":
            return _presets(args)
        if args.command == "serve":
            return _serve(args)
        if getattr(args, "threads", None) is not None:
            resolve_threads(args.threads)
        result = _remote(args) if args.server else _local(args)
        commands.write_artifacts(result, args.out_dir)
        print(json.dumps(result.summary, indent=2, sort_keys=True))
        return EXIT_OK
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
