"""Command-line front end: instance generation, analysis, recovery, censuses,
invariant verification, and the random-coset probability table.

Reports are JSON with a stable schema; everything outside the "envelope" key
is byte-identical across runs with the same config and seed. Exit codes:
1 invalid arguments, 2 I/O failure, 3 stage failure.
"""

from __future__ import annotations

import csv as _csv
import datetime
import json
import os
import sys
import time
from fractions import Fraction

import click
import numpy as np

from . import __version__, _kernels
from .counting import (cube_completion_probability, cube_count, cube_count_naive,
                       config10_count, config10_count_naive, quadruple_count,
                       quadruple_count_naive, pair_count_table)
from .forms import approx_variety_verdict
from .fourier import fourier, indicator, inverse_fourier
from .generators import (GeneratorSpec, perturb, random_coset_probability,
                         random_coset_probability_mc)
from .group import GSubset, SetFormatError, VectorSpaceCtx, read_set
from .recovery import RecoveryConfig, StageError, recover

SCHEMA = "quadvar-report-v1"


def _resolve_threads(threads):
    if threads is None:
        env = os.environ.get("QUADVAR_THREADS")
        threads = int(env) if env else 0
    _kernels.set_num_threads(threads)
    return threads


def _canonical(obj):
    """JSON-safe deep copy: Fractions to strings, numpy scalars to Python."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    return obj


def write_report(report: dict, path, timings: dict | None = None):
    body = _canonical(report)
    body["schema"] = SCHEMA
    body["library_version"] = __version__
    body["envelope"] = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "timings": _canonical(timings or {}),
    }
    text = json.dumps(body, sort_keys=True, separators=(",", ": "), indent=1)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return body


def emit_csv(path, rows):
    if not rows:
        return
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = _csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in keys})


@click.group()
def commands():
    """Exact higher-order Fourier analysis over F_p^n."""


@commands.command()
@click.option("--kind", type=click.Choice(["layer", "sidon", "pullback", "random"]),
              required=True)
@click.option("--p", "p_", type=int, default=3, show_default=True)
@click.option("--n", "n_", type=int, required=True)
@click.option("--d", type=int, default=1, show_default=True,
              help="codomain dimension (layer/pullback)")
@click.option("--lambda-dim", type=int, default=0, show_default=True,
              help="dimension of the layer subspace Lambda")
@click.option("--u-dim", type=int, default=None, help="dim U for the Sidon sum")
@click.option("--h", "h_", type=int, default=None, help="dim H for pullbacks")
@click.option("--a-density", type=float, default=None,
              help="density of the ambient set A for pullbacks")
@click.option("--density", type=float, default=0.5, show_default=True,
              help="density for random sets")
@click.option("--noise", type=float, default=0.0, show_default=True,
              help="membership flip probability applied after generation")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--threads", type=int, default=None)
def gen(kind, p_, n_, d, lambda_dim, u_dim, h_, a_density, density, noise, seed,
        out, report_path, threads):
    """Generate a synthetic instance and write it as an FPNSET1 file."""
    threads = _resolve_threads(threads)
    ctx = VectorSpaceCtx(p_, n_)
    params = {}
    if kind == "layer":
        spec_kind = "layer_variety"
        params = {"d": d, "lambda_dim": lambda_dim}
    elif kind == "sidon":
        spec_kind = "sidon_sum"
        params = {"u_dim": u_dim if u_dim is not None else max(ctx.n - 2, 0)}
    elif kind == "pullback":
        spec_kind = "polynomial_pullback"
        params = {"h": h_ if h_ is not None else max(ctx.n // 2, 1), "d": d}
        if a_density is not None:
            params["a_density"] = a_density
    else:
        spec_kind = "random"
        params = {"density": density}
    spec = GeneratorSpec(spec_kind, params, seed)
    t0 = time.perf_counter()
    subset, _extras = spec.build(ctx)
    if noise > 0:
        subset = perturb(subset, noise, seed + 1)
    subset.write(out)
    timings = {"generate": time.perf_counter() - t0}
    report = {
        "command": "gen",
        "config": {"p": p_, "n": n_, "kind": kind, "noise": noise, "seed": seed,
                   "threads": threads, "out": str(out), "spec": spec.as_dict()},
        "metrics": {
            "size": ctx.size,
            "count": len(subset),
            "delta": subset.density,
        },
    }
    body = write_report(report, report_path, timings)
    click.echo(json.dumps(body["metrics"], sort_keys=True))
    return 0


@commands.command()
@click.argument("setfile", type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--threads", type=int, default=None)
def analyze(setfile, report_path, csv_path, threads):
    """Measure the approximate-quadratic-variety parameters of a set file."""
    threads = _resolve_threads(threads)
    V = read_set(setfile)
    t0 = time.perf_counter()
    verdict = approx_variety_verdict(V)
    quads = quadruple_count(V)
    timings = {"analyze": time.perf_counter() - t0}
    metrics = verdict.as_dict()
    metrics["quadruple_count"] = quads
    metrics["size"] = V.ctx.size
    metrics["count"] = len(V)
    report = {
        "command": "analyze",
        "config": {"setfile": str(setfile), "p": V.ctx.p, "n": V.ctx.n,
                   "threads": threads},
        "metrics": metrics,
    }
    body = write_report(report, report_path, timings)
    if csv_path:
        emit_csv(csv_path, [metrics])
    click.echo(json.dumps(body["metrics"], sort_keys=True))
    return 0


@commands.command()
@click.argument("setfile", type=click.Path())
@click.option("--d", type=int, default=1, show_default=True,
              help="target codomain dimension of the fitted form")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file of RecoveryConfig fields; flags win on conflict")
@click.option("--eta", type=float, default=None)
@click.option("--tau", type=float, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--out-variety", type=click.Path(), default=None)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--threads", type=int, default=None)
def recover_cmd(setfile, d, seed, config_path, eta, tau, xi, out_variety,
                report_path, threads):
    """Run the three-stage recovery pipeline on a set file."""
    threads = _resolve_threads(threads)
    V = read_set(setfile)
    fields = {}
    if config_path:
        with open(config_path) as fh:
            fields.update(json.load(fh))
    fields["d_out"] = d
    fields["seed"] = seed
    if eta is not None:
        fields["eta"] = eta
    if tau is not None:
        fields["tau"] = tau
    if xi is not None:
        fields["xi"] = xi
    fields["threads"] = threads
    cfg = RecoveryConfig(**fields)
    result = recover(V, cfg)
    recovery = {
        "status": result.status,
        "stage": result.stage,
        "reason": result.reason,
        "overlap": result.overlap,
        "size_ratio": result.size_ratio,
        "d_tilde": result.d_tilde,
    }
    if result.variety_set is not None and out_variety:
        result.variety_set.write(out_variety)
    report = {
        "command": "recover",
        "config": {"setfile": str(setfile), "p": V.ctx.p, "n": V.ctx.n,
                   **cfg.as_dict()},
        "metrics": {"delta": V.density, "count": len(V)},
        "recovery": recovery,
        "diagnostics": result.diagnostics,
    }
    body = write_report(report, report_path, result.timings)
    click.echo(json.dumps(body["recovery"], sort_keys=True))
    if result.status == "refused":
        raise StageError(result.stage or "recover", result.reason or "refused")
    return 0


@commands.command()
@click.argument("setfile", type=click.Path())
@click.option("--oracle", is_flag=True, default=False,
              help="also run the naive nested-loop oracles and compare")
@click.option("--config10/--no-config10", "with_config10", default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--threads", type=int, default=None)
def census(setfile, oracle, with_config10, report_path, csv_path, threads):
    """Exact additive-pattern counts (fast paths, optional oracle check)."""
    threads = _resolve_threads(threads)
    V = read_set(setfile)
    t0 = time.perf_counter()
    metrics = {
        "size": V.ctx.size,
        "count": len(V),
        "quadruple_count": quadruple_count(V),
        "cube_count": cube_count(V),
    }
    if with_config10:
        metrics["config10_count"] = config10_count(V)
    if oracle:
        metrics["quadruple_count_naive"] = quadruple_count_naive(V)
        metrics["cube_count_naive"] = cube_count_naive(V)
        if with_config10:
            metrics["config10_count_naive"] = config10_count_naive(V)
        agree = (metrics["quadruple_count"] == metrics["quadruple_count_naive"]
                 and metrics["cube_count"] == metrics["cube_count_naive"]
                 and metrics.get("config10_count")
                 == metrics.get("config10_count_naive"))
        metrics["oracle_agreement"] = bool(agree)
        if not agree:
            raise StageError("census", "fast path disagrees with the naive oracle")
    timings = {"census": time.perf_counter() - t0}
    report = {
        "command": "census",
        "config": {"setfile": str(setfile), "p": V.ctx.p, "n": V.ctx.n,
                   "oracle": oracle, "config10": with_config10, "threads": threads},
        "metrics": metrics,
    }
    body = write_report(report, report_path, timings)
    if csv_path:
        emit_csv(csv_path, [body["metrics"]])
    click.echo(json.dumps(body["metrics"], sort_keys=True))
    return 0


@commands.command()
@click.argument("setfile", type=click.Path())
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--threads", type=int, default=None)
def verify(setfile, report_path, threads):
    """Run the invariant suite on a set file; one PASS/FAIL line per check."""
    threads = _resolve_threads(threads)
    V = read_set(setfile)
    ctx = V.ctx
    rng = np.random.default_rng(0)
    checks = {}

    def record(name, ok):
        checks[name] = bool(ok)
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}")

    record("io-round-trip", GSubset.from_bytes(V.to_bytes()) == V)

    f = indicator(V)
    fh = fourier(f)
    record("parseval",
           abs(np.sum(np.abs(fh.values) ** 2) - np.mean(f.values ** 2)) < 1e-9)
    record("inversion",
           np.abs(inverse_fourier(fh).values - f.values).max() < 1e-9)

    pairs = rng.integers(0, ctx.size, size=(min(64, ctx.size), 2))
    dual_ok = True
    tables = {}
    for a, b in pairs:
        a, b = int(a), int(b)
        if a not in tables:
            tables[a] = pair_count_table(V, a)
        if b not in tables:
            tables[b] = pair_count_table(V, b)
        if tables[a][b] != tables[b][a]:
            dual_ok = False
            break
    record("convolution-duality", dual_ok)

    quads = quadruple_count(V)
    spec_sum = int(round(ctx.size ** 3 * float(np.sum(np.abs(fh.values) ** 4))))
    record("quadruple-spectral-identity", quads == spec_sum)

    if ctx.size <= 3 ** 5:
        record("quadruple-oracle", quads == quadruple_count_naive(V))
        record("cube-oracle", cube_count(V) == cube_count_naive(V))
    if ctx.size <= 3 ** 4:
        record("config10-oracle", config10_count(V) == config10_count_naive(V))
    if len(V) and Fraction(len(V), ctx.size) >= Fraction(1, 3) and ctx.size <= 81:
        c10 = config10_count(V)
        record("ten-point-lower-bound",
               c10 * ctx.size ** 26 >= len(V) ** 32)
    if len(V):
        sevens_ok = True
        try:
            comp = cube_completion_probability(V)
            sevens_ok = 0 <= comp <= 1
        except ValueError:
            pass
        record("completion-probability-range", sevens_ok)

    ok_all = all(checks.values())
    report = {
        "command": "verify",
        "config": {"setfile": str(setfile), "p": ctx.p, "n": ctx.n,
                   "threads": threads},
        "metrics": {"checks": checks, "all_pass": ok_all},
    }
    write_report(report, report_path, {})
    if not ok_all:
        raise StageError("verify", "invariant suite failed")
    return 0


@commands.command()
@click.option("--p", "p_", type=int, default=3, show_default=True)
@click.option("--n", "n_", type=int, required=True)
@click.option("--d-max", type=int, default=2, show_default=True)
@click.option("--m-max", type=int, default=3, show_default=True)
@click.option("--mc-samples", type=int, default=0, show_default=True,
              help="if positive, attach a Monte-Carlo estimate per row")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
def prob(p_, n_, d_max, m_max, mc_samples, seed, report_path, csv_path):
    """Exact random-coset probability table (optionally with MC estimates)."""
    rows = []
    for d in range(1, d_max + 1):
        for m in range(1, m_max + 1):
            if m + d > n_:
                continue
            exact = random_coset_probability(p_, n_, d, m)
            row = {"p": p_, "n": n_, "d": d, "m": m,
                   "exact": f"{exact.numerator}/{exact.denominator}",
                   "exact_float": float(exact)}
            if mc_samples > 0:
                mc = random_coset_probability_mc(p_, n_, d, m,
                                                 samples=mc_samples, seed=seed)
                row["mc_estimate"] = mc["estimate"]
                row["mc_stderr"] = mc["stderr"]
            rows.append(row)
    report = {
        "command": "prob",
        "config": {"p": p_, "n": n_, "d_max": d_max, "m_max": m_max,
                   "mc_samples": mc_samples, "seed": seed},
        "metrics": {"rows": rows},
    }
    body = write_report(report, report_path, {})
    if csv_path:
        emit_csv(csv_path, rows)
    click.echo(json.dumps(body["metrics"], sort_keys=True))
    return 0


commands.add_command(recover_cmd, name="recover")


def cli(argv) -> int:
    """Run the CLI on an argument list; returns the process exit code."""
    try:
        commands.main(args=list(argv), standalone_mode=False)
        return 0
    except click.ClickException as err:
        err.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except StageError as err:
        click.echo(f"error: {err}", err=True)
        return 3
    except SetFormatError as err:
        click.echo(f"error: {err}", err=True)
        return 2
    except OSError as err:
        click.echo(f"error: {err}", err=True)
        return 2
    except ValueError as err:
        click.echo(f"error: {err}", err=True)
        return 1


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
