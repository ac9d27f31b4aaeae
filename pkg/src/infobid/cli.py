"""Thin command-line client for the experiment service.

Each experiment subcommand posts to /experiments/<name>. By default the
service runs in-process over an ASGI transport; --server points the same
client at a remote instance instead. Exit codes: 0 success, 2 when the run
reported invariant violations, 1 on any error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .experiments import EXPERIMENTS
from .service import create_app

EXPERIMENT_HELP = {
    "exp1": "one selection-retrain cycle: surrogate vs oracle vs random",
    "exp2": "pacing sweep: dual step size and budget adherence",
    "exp3": "label-free gradient estimator accuracy",
    "exp4": "end-to-end bidding campaigns with retraining",
    "toy": "noisy hill-climb noise-floor demonstration",
    "bounds": "uncertainty-bound Monte Carlo and pacing identities",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infobid", description="information-aware bidding experiment runner"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=EXPERIMENT_HELP[name])
        p.add_argument("--config", help="path to a JSON config file")
        p.add_argument("--out", required=True, help="artifact output directory")
        p.add_argument(
            "--server",
            help="base URL of a running service (default: run in-process)",
        )
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


async def _post_experiment(name: str, config: dict, out_dir: str, server) -> httpx.Response:
    if server:
        client = httpx.AsyncClient(base_url=server, timeout=None)
    else:
        client = httpx.AsyncClient(
            transport=httpx.ASGITransport(app=create_app()),
            base_url="http://infobid.local",
            timeout=None,
        )
    async with client:
        return await client.post(
            f"/experiments/{name}", json={"config": config, "out_dir": out_dir}
        )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    config: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        if not isinstance(config, dict):
            print("error: config must be a JSON object", file=sys.stderr)
            return 1

    try:
        resp = asyncio.run(_post_experiment(args.command, config, args.out, args.server))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        print(f"error: service returned {resp.status_code}: {detail}", file=sys.stderr)
        return 1
    body = resp.json()
    print(json.dumps(body["summary"], sort_keys=True, indent=2))
    if body["violations"]:
        for v in body["violations"]:
            print(f"violation: {v}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
