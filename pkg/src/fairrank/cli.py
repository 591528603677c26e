"""Command-line client for the ranking service.

Subcommands: generate, rank, evaluate, experiment, serve.  The first four
talk HTTP to a fairrank service: either a remote one (``--server URL``) or,
by default, the bundled app mounted in-process, so no separate server is
needed.  Exit codes: 0 success, 2 configuration/usage error, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from .errors import FairRankError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge to the bundled ASGI app, so the CLI stays a thin
    HTTP client even without a running server."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def call():
            response = await self._asgi.handle_async_request(request)
            body = await response.aread()
            return response, body

        response, body = asyncio.run(call())
        return httpx.Response(
            status_code=response.status_code, headers=response.headers, content=body
        )


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from .service.app import app

    return httpx.Client(
        transport=_InProcessTransport(app), base_url="http://fairrank.local", timeout=None
    )


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            body = resp.json()
        except ValueError:
            body = {"error": "HTTPError", "message": resp.text}
        if isinstance(body.get("detail"), list):  # pydantic validation error
            raise SystemExit(_fail(f"invalid request: {body['detail']}", EXIT_CONFIG))
        msg = f"{body.get('error', 'error')}: {body.get('message', resp.text)}"
        raise SystemExit(_fail(msg, EXIT_RUNTIME))
    return resp.json()


def _fail(message: str, code: int) -> int:
    print(f"fairrank: {message}", file=sys.stderr)
    return code


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(_fail(f"cannot read {path}: {exc}", EXIT_CONFIG))


def _write(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _params_arg(raw: list[str] | None, json_params: str | None) -> dict:
    params: dict = {}
    if json_params:
        params.update(json.loads(json_params))
    for item in raw or []:
        key, _, value = item.partition("=")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def cmd_generate(args) -> int:
    with _client(args.server) as client:
        payload = {
            "generator": args.gen,
            "params": _params_arg(args.param, args.params),
            "m": args.m,
            "n": args.n,
            "seed": args.seed,
        }
        data = _post(client, "/generate", payload)
    _write(json.dumps(data) + "\n", args.out)
    return EXIT_OK


def _fairness_payload(args) -> dict:
    fp = {
        "u_mode": args.u_mode,
        "phi": args.phi,
        "gamma_mode": args.gamma_mode,
        "c": args.c,
        "delta": args.delta,
        "d": args.d,
        "t": args.t,
    }
    if args.psi is not None:
        fp["psi"] = args.psi
    if args.gamma is not None:
        fp["gamma"] = json.loads(args.gamma)
    return fp


def cmd_rank(args) -> int:
    instance = _read_json(args.instance)
    with _client(args.server) as client:
        data = _post(
            client,
            "/rank",
            {
                "instance": instance,
                "algorithm": args.algo,
                "fairness": _fairness_payload(args),
                "seed": args.seed,
                "lp_method": args.lp_method,
            },
        )
    out = {"m": data["m"], "n": data["n"], "slots": data["slots"], "utility": data["utility"]}
    _write(json.dumps(out) + "\n", args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    instance = _read_json(args.instance)
    ranking = _read_json(args.ranking)
    payload = {
        "instance": instance,
        "slots": ranking["slots"],
        "truth_seed": args.truth_seed,
    }
    if args.truth:
        truth_doc = _read_json(args.truth)
        payload["truth"] = truth_doc.get("truth", truth_doc) if isinstance(truth_doc, dict) else truth_doc
    with _client(args.server) as client:
        data = _post(client, "/evaluate", payload)
    _write(json.dumps(data) + "\n", args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _read_json(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    with _client(args.server) as client:
        data = _post(client, "/experiment", {"config": cfg})
    _write(data["csv"], args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--server", default=None, help="URL of a running service; default in-process")
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    g = sub.add_parser("generate", help="write an instance JSON from a named generator")
    common(g)
    g.add_argument("--gen", required=True)
    g.add_argument("--m", type=int, default=500)
    g.add_argument("--n", type=int, default=25)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append", help="key=value generator parameter")
    g.add_argument("--params", default=None, help="JSON object of generator parameters")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("rank", help="rank an instance file with one algorithm")
    common(r)
    r.add_argument("--instance", required=True)
    r.add_argument("--algo", required=True, choices=["nresilient", "uncons", "csv", "gak", "sj", "mc"])
    r.add_argument("--u-mode", dest="u_mode", default="phi", choices=["phi", "equal", "proportional"])
    r.add_argument("--phi", type=float, default=1.0)
    r.add_argument("--gamma-mode", dest="gamma_mode", default="heuristic")
    r.add_argument("--gamma", default=None, help="JSON list for explicit gamma")
    r.add_argument("--c", type=float, default=1.5)
    r.add_argument("--delta", type=float, default=0.1)
    r.add_argument("--d", type=float, default=4.0)
    r.add_argument("--psi", type=float, default=None)
    r.add_argument("--t", type=int, default=100)
    r.add_argument("--lp-method", dest="lp_method", default="auto", choices=["auto", "simplex", "highs"])
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_rank)

    e = sub.add_parser("evaluate", help="metric report for a ranking file")
    common(e)
    e.add_argument("--instance", required=True)
    e.add_argument("--ranking", required=True)
    e.add_argument("--truth", default=None, help="JSON file with a 0/1 membership matrix")
    e.add_argument("--truth-seed", dest="truth_seed", type=int, default=0)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run a sweep from a config file and write CSV")
    common(x)
    x.add_argument("--config", required=True)
    x.add_argument("--seed", type=int, default=None, help="override the config's base seed")
    x.add_argument("--threads", type=int, default=None)
    x.set_defaults(func=cmd_experiment)

    s = sub.add_parser("serve", help="start the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except FairRankError as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    except httpx.HTTPError as exc:
        return _fail(f"transport error: {exc}", EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
