"""Command-line client for the laboratory service.

Verbs: run, constants, convergence, barenblatt-table, serve. All compute
goes through the HTTP API; by default the app is driven in-process over
an ASGI transport, `--server URL` targets a running instance instead.
File outputs (results.csv, manifest.json, SVG plots) are written by the
client, so runs against a remote server still land locally.

Exit codes for `run`: 0 all checks passed, 1 a check failed, 2 config
error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .config import ConfigError, config_from_dict, load_config
from .experiments import CheckRow, results_csv

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def call_service(method: str, path: str, payload: dict | None = None,
                 server: str | None = None) -> httpx.Response:
    async def _go():
        if server is None:
            from .service import create_app
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://harnack-lab",
                                         timeout=None) as client:
                return await client.request(method, path, json=payload)
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            return await client.request(method, path, json=payload)

    return asyncio.run(_go())


def _apply_overrides(tree: dict, overrides: list[str]) -> dict:
    from .config import parse_config_text
    text = "\n".join(overrides)
    extra = parse_config_text(text)

    def merge(dst, src):
        for k, v in src.items():
            if isinstance(v, dict) and isinstance(dst.get(k), dict):
                merge(dst[k], v)
            else:
                dst[k] = v
    merge(tree, extra)
    return tree


def _rows_from_response(rows: list[dict]) -> list[CheckRow]:
    out = []
    for r in rows:
        out.append(CheckRow(name=r["name"], p=r["p"], M=r["M"],
                            rho_over_rhobar=r.get("rho_over_rhobar"),
                            passed=r["passed"],
                            margin=r.get("margin") if r.get("margin") is not None else float("nan"),
                            sigma_emp=r.get("sigma_emp"),
                            exponent_fit=r.get("exponent_fit"),
                            details=r.get("details", {})))
    return out


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.set:
            tree = config.model_dump()
            tree = _apply_overrides(tree, args.set)
            config = config_from_dict(tree)
        if args.output_dir:
            config = config.model_copy(update={"output_dir": args.output_dir})
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    resp = call_service("POST", "/run", {"config": config.model_dump()},
                        server=args.server)
    if resp.status_code in (400, 422):
        print(f"config error: {resp.text}", file=sys.stderr)
        return EXIT_CONFIG
    if resp.status_code != 200:
        print(f"service error ({resp.status_code}): {resp.text}", file=sys.stderr)
        return EXIT_SOLVER
    body = resp.json()

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _rows_from_response(body["rows"])
    (out / "results.csv").write_text(results_csv(rows), encoding="utf-8")
    (out / "manifest.json").write_text(
        json.dumps(body["manifest"], indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    for name, svg in body["plots"].items():
        (out / f"{name}.svg").write_text(svg, encoding="utf-8")

    n_pass = sum(1 for r in rows if r.passed)
    print(f"{n_pass}/{len(rows)} checks passed; results in {out}/")
    for r in rows:
        if not r.passed:
            where = f" rho/rho_bar={r.rho_over_rhobar}" if r.rho_over_rhobar else ""
            print(f"  FAIL {r.name} p={r.p} M={r.M}{where} "
                  f"({r.details.get('error', 'margin %g' % r.margin)})")
    if body["status"] == "solver_failure":
        return EXIT_SOLVER
    return EXIT_OK if body["all_passed"] else EXIT_CHECK_FAILED


def cmd_constants(args) -> int:
    payload = {"p": args.p, "nu": args.nu, "gamma1": args.gamma1,
               "delta": args.delta, "c": args.c, "M": args.M, "T": args.T}
    resp = call_service("POST", "/constants", payload, server=args.server)
    if resp.status_code in (400, 422):
        print(f"invalid parameters: {resp.text}", file=sys.stderr)
        return EXIT_CONFIG
    record = resp.json()["record"]
    for key, value in record.items():
        print(f"{key}={value!r}" if isinstance(value, str) else f"{key}={value:.17g}"
              if isinstance(value, float) else f"{key}={value}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    payload = {"p": args.p, "C": args.C, "levels": args.levels, "n0": args.n0,
               "dt0": args.dt0, "t_start": args.t_start, "t_end": args.t_end,
               "eps_sweep": args.eps_sweep}
    resp = call_service("POST", "/convergence", payload, server=args.server)
    if resp.status_code in (400, 422):
        print(f"invalid parameters: {resp.text}", file=sys.stderr)
        return EXIT_CONFIG
    if resp.status_code != 200:
        print(f"solver failure: {resp.text}", file=sys.stderr)
        return EXIT_SOLVER
    body = resp.json()
    print(f"space ladder (dt={body['space_levels'][0]['dt']:g}):")
    for lv in body["space_levels"]:
        print(f"  n={lv['n_cells']:6d}  error={lv['error']:.6e}")
    print(f"  orders: {['%.3f' % o for o in body['space_orders']]}")
    print(f"time ladder (n={body['time_levels'][0]['n_cells']}):")
    for lv in body["time_levels"]:
        print(f"  dt={lv['dt']:.6g}  error={lv['error']:.6e}")
    print(f"  orders: {['%.3f' % o for o in body['time_orders']]}")
    if "eps_table" in body:
        print(f"eps sweep: {body['eps_table']}  rel change 1e-6 -> 1e-8: "
              f"{body['eps_rel_change_6_to_8']:.3e}")
    print(f"terminal orders: space={body['space_order_terminal']:.3f} "
          f"time={body['time_order_terminal']:.3f}  passed={body['passed']}")
    return EXIT_OK if body["passed"] else EXIT_CHECK_FAILED


def cmd_table(args) -> int:
    times = [float(t) for t in args.times.split(",")] if args.times else [1.0]
    payload = {"p": args.p, "C": args.C, "t0": args.t0, "x_min": args.x_min,
               "x_max": args.x_max, "n_points": args.n_points, "times": times}
    resp = call_service("POST", "/barenblatt-table", payload, server=args.server)
    if resp.status_code in (400, 422):
        print(f"invalid parameters: {resp.text}", file=sys.stderr)
        return EXIT_CONFIG
    body = resp.json()
    lines = [",".join(body["columns"])]
    for row in body["rows"]:
        lines.append(",".join(format(row[c], ".17g") for c in body["columns"]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(body['rows'])} samples to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harnack-lab",
                                 description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run an experiment config end to end")
    pr.add_argument("config", help="path to key=value or JSON config")
    pr.add_argument("--output-dir", default=None)
    pr.add_argument("--server", default=None, help="URL of a running service")
    pr.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key (repeatable)")
    pr.set_defaults(func=cmd_run)

    pc = sub.add_parser("constants", help="print the constant chain")
    pc.add_argument("--p", type=float, required=True)
    pc.add_argument("--nu", type=float, default=0.25)
    pc.add_argument("--gamma1", type=float, default=2.0)
    pc.add_argument("--delta", type=float, default=None)
    pc.add_argument("--c", type=float, default=4.0)
    pc.add_argument("--M", type=float, default=None)
    pc.add_argument("--T", type=float, default=None)
    pc.add_argument("--server", default=None)
    pc.set_defaults(func=cmd_constants)

    pv = sub.add_parser("convergence", help="run the refinement ladders")
    pv.add_argument("--p", type=float, default=1.5)
    pv.add_argument("--C", type=float, default=1.0)
    pv.add_argument("--levels", type=int, default=4)
    pv.add_argument("--n0", type=int, default=128)
    pv.add_argument("--dt0", type=float, default=4e-3)
    pv.add_argument("--t-start", type=float, default=1.0)
    pv.add_argument("--t-end", type=float, default=1.2)
    pv.add_argument("--eps-sweep", action="store_true")
    pv.add_argument("--server", default=None)
    pv.set_defaults(func=cmd_convergence)

    pt = sub.add_parser("barenblatt-table", help="dump exact solution samples")
    pt.add_argument("--p", type=float, default=1.5)
    pt.add_argument("--C", type=float, default=1.0)
    pt.add_argument("--t0", type=float, default=0.0)
    pt.add_argument("--x-min", type=float, default=-10.0)
    pt.add_argument("--x-max", type=float, default=10.0)
    pt.add_argument("--n-points", type=int, default=101)
    pt.add_argument("--times", default="1.0", help="comma-separated times")
    pt.add_argument("--out", default=None, help="CSV output path (default stdout)")
    pt.add_argument("--server", default=None)
    pt.set_defaults(func=cmd_table)

    ps = sub.add_parser("serve", help="start the HTTP service")
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=8000)
    ps.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
