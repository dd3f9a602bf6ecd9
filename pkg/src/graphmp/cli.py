"""Command-line surface: a thin client over the HTTP service.

By default every command is served in-process through an ASGI transport, so
no server needs to run; `--server URL` targets a remote instance and
`graphmp serve` starts one. Exit codes: 0 ok, 1 input/format error,
2 convergence failure, 3 bounded mode forced while the loop bound is not
fulfilled.

Primary output goes to stdout (JSON, or CSV for spectrum curves); the run
manifest goes to stderr, or to sibling files when --out is given.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

EXIT_BY_KIND = {"input": 1, "convergence": 2, "loop_bound": 3}


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from httpx import ASGITransport

    from .service.app import app

    return httpx.Client(
        transport=ASGITransport(app=app), base_url="http://graphmp.internal", timeout=600.0
    )


def _post(ctx, path: str, payload: dict) -> dict:
    with _client(ctx.obj.get("server")) as client:
        try:
            resp = client.post(path, json=payload)
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach server: {exc}", err=True)
            sys.exit(1)
    if resp.status_code == 200:
        return resp.json()
    detail = None
    try:
        detail = resp.json().get("detail")
    except Exception:
        pass
    if isinstance(detail, dict) and "kind" in detail:
        click.echo(f"error ({detail['kind']}): {detail['message']}", err=True)
        sys.exit(EXIT_BY_KIND.get(detail["kind"], 1))
    click.echo(f"error: HTTP {resp.status_code}: {detail or resp.text}", err=True)
    sys.exit(1)


def _graph_payload(path: str, fmt: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(1)
    return {"format": fmt, "text": text, "path": str(path)}


def _emit_json(body: dict, out: str | None, manifest: dict | None) -> None:
    text = json.dumps(body, indent=2)
    if out:
        Path(out).write_text(text + "\n")
        if manifest is not None:
            Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    else:
        click.echo(text)
        if manifest is not None:
            click.echo(json.dumps({"manifest": manifest}), err=True)


@click.group()
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
@click.option("--threads", default=None, type=int,
              help="Worker concurrency cap; recorded in the manifest. "
                   "Results are independent of this value.")
@click.pass_context
def main(ctx, server, threads):
    """Percolation statistics and spectral densities on sparse graphs."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server
    ctx.obj["threads"] = threads


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--r", "r", required=True, type=int)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def neigh(ctx, graph_path, r, out):
    """Classing JSON: classes, pivots, hyperedges, verdict, size report."""
    body = _post(ctx, "/neigh", {"graph": _graph_payload(graph_path, "edge_list"), "r": r})
    manifest = body.pop("manifest", None)
    _emit_json(body, out, manifest)


@main.command()
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--p", required=True, type=float)
@click.option("--r", "r", default=1, type=int, show_default=True)
@click.option("--mode", default="auto", type=click.Choice(["auto", "bounded", "unbounded"]))
@click.option("--smax", default=None, type=int, help="Series truncation; enables pi output.")
@click.option("--z", default=1.0, type=float, show_default=True)
@click.option("--tol", default=1e-10, type=float)
@click.option("--max-iter", default=10000, type=int)
@click.option("--damping", default=0.0, type=float)
@click.option("--enum-threshold", default=16, type=int)
@click.option("--mc-samples", default=100_000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--init", default="unit", type=click.Choice(["unit", "random"]))
@click.option("--literal-pbar", is_flag=True, default=False)
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "csv"]))
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def percolation(ctx, graph_path, p, r, mode, smax, z, tol, max_iter, damping,
                enum_threshold, mc_samples, seed, init, literal_pbar, fmt, out):
    """Percolation report: per-node H_i(1), <s_i>, pi_i(s), global S."""
    payload = {
        "graph": _graph_payload(graph_path, "edge_list"),
        "p": p, "r": r, "mode": mode, "s_max": smax, "z": z, "tol": tol,
        "max_iter": max_iter, "damping": damping, "enum_threshold": enum_threshold,
        "mc_samples": mc_samples, "seed": seed, "init": init,
        "literal_pbar": literal_pbar,
    }
    body = _post(ctx, "/percolation", payload)
    manifest = body.pop("manifest", None)
    if fmt == "csv":
        report = body["report"]
        if report.get("pi") is None and report["nodes"][0].get("pi") is None:
            click.echo("error: CSV format requires --smax", err=True)
            sys.exit(1)
        lines = ["node,s,pi"]
        for node in report["nodes"]:
            for s, val in enumerate(node["pi"], start=1):
                lines.append(f"{node['id']},{s},{val:.17g}")
        text = "\n".join(lines) + "\n"
        if out:
            Path(out).write_text(text)
            Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        else:
            click.echo(text, nl=False)
            click.echo(json.dumps({"manifest": manifest}), err=True)
        return
    _emit_json(body, out, manifest)


@main.command()
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option("--eta", default=0.05, type=float, show_default=True)
@click.option("--xmin", default=-3.0, type=float)
@click.option("--xmax", default=3.0, type=float)
@click.option("--points", default=601, type=int, show_default=True)
@click.option("--r", "r", default=1, type=int)
@click.option("--mode", default="auto", type=click.Choice(["auto", "bounded", "unbounded"]))
@click.option("--tol", default=1e-10, type=float)
@click.option("--max-iter", default=10000, type=int)
@click.option("--damping", default=0.0, type=float)
@click.option("--warm-start/--no-warm-start", default=True)
@click.option("--literal-d", is_flag=True, default=False)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def spectrum(ctx, matrix_path, eta, xmin, xmax, points, r, mode, tol, max_iter,
             damping, warm_start, literal_d, out):
    """Spectral density sweep: CSV x,rho plus JSON metadata."""
    payload = {
        "matrix": _graph_payload(matrix_path, "matrix"),
        "eta": eta, "x_min": xmin, "x_max": xmax, "points": points, "r": r,
        "mode": mode, "tol": tol, "max_iter": max_iter, "damping": damping,
        "warm_start": warm_start, "literal_d": literal_d,
    }
    body = _post(ctx, "/spectrum", payload)
    if out:
        Path(out).write_text(body["csv"])
        Path(str(out) + ".meta.json").write_text(json.dumps(body["metadata"], indent=2) + "\n")
        Path(str(out) + ".manifest.json").write_text(json.dumps(body["manifest"], indent=2) + "\n")
    else:
        click.echo(body["csv"], nl=False)
        click.echo(json.dumps({"metadata": body["metadata"], "manifest": body["manifest"]}), err=True)


@main.group()
def oracle():
    """Ground-truth reports from the brute-force oracles."""


@oracle.command("percolation")
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--p", required=True, type=float)
@click.option("--method", default="auto", type=click.Choice(["auto", "exact", "mc"]))
@click.option("--trials", default=100_000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def oracle_percolation(ctx, graph_path, p, method, trials, seed, out):
    payload = {
        "graph": _graph_payload(graph_path, "edge_list"),
        "p": p, "method": method, "trials": trials, "seed": seed,
    }
    body = _post(ctx, "/oracle/percolation", payload)
    manifest = body.pop("manifest", None)
    _emit_json(body, out, manifest)


@oracle.command("spectrum")
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option("--eta", default=0.05, type=float)
@click.option("--xmin", default=-3.0, type=float)
@click.option("--xmax", default=3.0, type=float)
@click.option("--points", default=601, type=int)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def oracle_spectrum(ctx, matrix_path, eta, xmin, xmax, points, out):
    payload = {
        "matrix": _graph_payload(matrix_path, "matrix"),
        "eta": eta, "x_min": xmin, "x_max": xmax, "points": points,
    }
    body = _post(ctx, "/oracle/spectrum", payload)
    manifest = body.pop("manifest", None)
    _emit_json(body, out, manifest)


@main.group()
def compare():
    """Method-vs-oracle diffs with pass/fail against stated tolerances."""


@compare.command("percolation")
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--p", required=True, type=float)
@click.option("--r", "r", default=1, type=int)
@click.option("--mode", default="auto", type=click.Choice(["auto", "bounded", "unbounded"]))
@click.option("--smax", default=None, type=int)
@click.option("--tolerance", default=1e-9, type=float, show_default=True)
@click.option("--trials", default=1_000_000, type=int, help="MC oracle trials (large graphs).")
@click.option("--seed", default=0, type=int)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def compare_percolation_cmd(ctx, graph_path, p, r, mode, smax, tolerance, trials, seed, out):
    payload = {
        "graph": _graph_payload(graph_path, "edge_list"),
        "p": p, "r": r, "mode": mode, "s_max": smax, "seed": seed,
        "tolerance": tolerance, "trials": trials,
    }
    body = _post(ctx, "/compare/percolation", payload)
    manifest = body.pop("manifest", None)
    _emit_json(body, out, manifest)
    verdict = body["comparison"]
    click.echo(
        f"{'PASS' if verdict['passed'] else 'FLAG' if verdict['flagged'] else 'FAIL'}: "
        f"max |dev| = {verdict['max_abs_deviation']:.3g}",
        err=True,
    )


@compare.command("spectrum")
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option("--eta", default=0.05, type=float)
@click.option("--xmin", default=-3.0, type=float)
@click.option("--xmax", default=3.0, type=float)
@click.option("--points", default=601, type=int)
@click.option("--r", "r", default=1, type=int)
@click.option("--mode", default="auto", type=click.Choice(["auto", "bounded", "unbounded"]))
@click.option("--literal-d", is_flag=True, default=False)
@click.option("--tolerance", default=1e-8, type=float, show_default=True)
@click.option("--out", default=None, type=click.Path())
@click.pass_context
def compare_spectrum_cmd(ctx, matrix_path, eta, xmin, xmax, points, r, mode, literal_d, tolerance, out):
    payload = {
        "matrix": _graph_payload(matrix_path, "matrix"),
        "eta": eta, "x_min": xmin, "x_max": xmax, "points": points, "r": r,
        "mode": mode, "literal_d": literal_d, "tolerance": tolerance,
    }
    body = _post(ctx, "/compare/spectrum", payload)
    manifest = body.pop("manifest", None)
    _emit_json(body, out, manifest)
    verdict = body["comparison"]
    click.echo(
        f"{'PASS' if verdict['passed'] else 'FAIL'}: "
        f"max |dev| = {verdict['max_abs_deviation']:.3g}",
        err=True,
    )


@compare.command("reports")
@click.argument("report_a", type=click.Path(exists=True))
@click.argument("report_b", type=click.Path(exists=True))
@click.option("--tolerance", default=1e-9, type=float)
@click.pass_context
def compare_reports_cmd(ctx, report_a, report_b, tolerance):
    """Diff two saved report JSON files; refuses mismatched input hashes."""

    def load_with_manifest(path):
        doc = json.loads(Path(path).read_text())
        if "manifest" not in doc:
            mpath = Path(str(path) + ".manifest.json")
            if mpath.exists():
                doc = {"report": doc.get("report", doc), "manifest": json.loads(mpath.read_text())}
        return doc

    payload = {
        "report_a": load_with_manifest(report_a),
        "report_b": load_with_manifest(report_b),
        "tolerance": tolerance,
    }
    body = _post(ctx, "/compare/reports", payload)
    _emit_json(body, None, body.pop("manifest", None))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
