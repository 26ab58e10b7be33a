"""Command-line front end: ``tailsketch track | simulate | bench``.

Exit codes: 0 success, 2 configuration error, 3 input parse error, 4 I/O error.
Every option can also be set through a ``TAILSKETCH_<OPTION>`` environment
variable (e.g. ``TAILSKETCH_EPSILON=0.05``).
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field

import click
import numpy as np

from .copula import CopulaSummary
from .experiment import (
    DESK_LENGTH,
    FULL_LENGTH,
    Distribution,
    StreamSpec,
    compare_modes as run_compare_modes,
    generate_stream,
    run_experiment,
    theoretical_tail_bounds,
)
from .quantile import ErrorMode
from .tail import bound_values, estimate_lambda_lower, estimate_lambda_upper

TRACK_SCHEMA_VERSION = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_IO = 4


class InputParseError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class CliConfig:
    epsilon: float = 0.1
    mode: str = "biased"
    tail_lower_i: int = 25
    tail_upper_offset: int = 25
    eval_points: list = field(default_factory=lambda: [(0.7, 0.7), (0.02, 0.02)])
    report_every: int = 5000
    input: str = "-"
    delimiter: str = ","
    has_header: bool = False
    output: str = "-"
    format: str = "json"
    seed: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and 0.0 < self.epsilon <= 0.5):
            raise click.BadParameter(f"epsilon must lie in (0, 0.5], got {self.epsilon}", param_hint="--epsilon")
        if self.report_every < 1:
            raise click.BadParameter("must be >= 1", param_hint="--report-every")
        if self.tail_lower_i < 1 or self.tail_upper_offset < 1:
            raise click.BadParameter("tail indices must be >= 1", param_hint="--i/--upper-offset")
        for u1, u2 in self.eval_points:
            if not (0.0 < u1 <= 1.0 and 0.0 < u2 <= 1.0):
                raise click.BadParameter(f"evaluation point ({u1},{u2}) outside (0,1]^2", param_hint="--eval")
        if len(self.delimiter) != 1:
            raise click.BadParameter("delimiter must be a single character", param_hint="--delimiter")

    @property
    def error_mode(self) -> ErrorMode:
        return ErrorMode(self.mode, self.epsilon)


def parse_eval(values) -> list[tuple[float, float]]:
    points = []
    for v in values:
        try:
            a, b = v.split(",")
            points.append((float(a), float(b)))
        except ValueError:
            raise click.BadParameter(f"expected 'u1,u2', got {v!r}", param_hint="--eval")
    return points


def read_pairs(stream, delimiter: str = ",", has_header: bool = False):
    """Yield ``(x1, x2)`` from delimiter-separated text; blank lines are skipped."""
    reader = csv.reader(stream, delimiter=delimiter)
    first = True
    for row in reader:
        line = reader.line_num
        if first and has_header:
            first = False
            continue
        first = False
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise InputParseError(line, f"expected 2 columns, got {len(row)}")
        try:
            x1, x2 = float(row[0]), float(row[1])
        except ValueError:
            raise InputParseError(line, f"non-numeric value in {row!r}")
        if not (math.isfinite(x1) and math.isfinite(x2)):
            raise InputParseError(line, f"non-finite value in {row!r}")
        yield x1, x2


def track_report(cs: CopulaSummary, cfg: CliConfig) -> dict:
    """One report object for the current summary state (library calls only)."""
    n = cs.n
    i = cfg.tail_lower_i
    lower = None
    if i <= math.ceil(n / 2):
        est = estimate_lambda_lower(cs, i)
        lower = {"i": i, "value": est.lambda_, "bound": est.bound}
    upper = None
    iu = n - cfg.tail_upper_offset
    if math.ceil(n / 2) < iu < n:
        est = estimate_lambda_upper(cs, iu)
        upper = {"offset": cfg.tail_upper_offset, "value": est.lambda_, "bound": est.bound}
    copula = []
    for u1, u2 in cfg.eval_points:
        res = cs.query(u1, u2)
        copula.append({"u1": u1, "u2": u2, "value": res.value, "bound": res.bound})
    b = bound_values(cs.mode, min(i, n), n)
    size = cs.size()
    return {
        "schema_version": TRACK_SCHEMA_VERSION,
        "n": n,
        "lambda_lower": lower,
        "lambda_upper": upper,
        "copula": copula,
        "bounds": {"copula_at_i": b.copula_bound, "tail_lower": b.tail_bound_lower, "tail_upper": b.tail_bound_upper},
        "tuples": size.total_tuple_count,
        "entries": size.entry_count,
        "size_ratio": cs.size_ratio(),
    }


def flatten_report(rep: dict) -> dict:
    row = {
        "schema_version": rep["schema_version"],
        "n": rep["n"],
        "lambda_lower_i": rep["lambda_lower"]["i"] if rep["lambda_lower"] else "",
        "lambda_lower": rep["lambda_lower"]["value"] if rep["lambda_lower"] else "",
        "lambda_lower_bound": rep["lambda_lower"]["bound"] if rep["lambda_lower"] else "",
        "lambda_upper_offset": rep["lambda_upper"]["offset"] if rep["lambda_upper"] else "",
        "lambda_upper": rep["lambda_upper"]["value"] if rep["lambda_upper"] else "",
        "lambda_upper_bound": rep["lambda_upper"]["bound"] if rep["lambda_upper"] else "",
    }
    for c in rep["copula"]:
        key = f"copula_{c['u1']}_{c['u2']}"
        row[key] = c["value"]
        row[key + "_bound"] = c["bound"]
    for k, v in rep["bounds"].items():
        row[f"bound_{k}"] = v
    row["tuples"] = rep["tuples"]
    row["entries"] = rep["entries"]
    row["size_ratio"] = rep["size_ratio"]
    return row


class ReportWriter:
    def __init__(self, out, fmt: str):
        self.out = out
        self.fmt = fmt
        self._csv = None

    def write(self, rep: dict):
        if self.fmt == "json":
            self.out.write(json.dumps(rep) + "\n")
            return
        row = {k: (repr(v) if isinstance(v, float) else v) for k, v in flatten_report(rep).items()}
        if self._csv is None:
            self._csv = csv.DictWriter(self.out, fieldnames=list(row))
            self._csv.writeheader()
        self._csv.writerow(row)


def _open_output(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


# --------------------------------------------------------------------- options
def _common(f):
    opts = [
        click.option("--epsilon", type=float, default=0.1, show_default=True, envvar="TAILSKETCH_EPSILON",
                     help="Accuracy parameter in (0, 0.5]."),
        click.option("--mode", type=click.Choice(["biased", "uniform"]), default="biased", show_default=True,
                     envvar="TAILSKETCH_MODE", help="Rank-error invariant."),
        click.option("--i", "tail_i", type=int, default=25, show_default=True, envvar="TAILSKETCH_I",
                     help="Lower tail index i."),
        click.option("--upper-offset", type=int, default=25, show_default=True, envvar="TAILSKETCH_UPPER_OFFSET",
                     help="Upper tail offset j (i = n - j)."),
        click.option("--eval", "eval_points", multiple=True, envvar="TAILSKETCH_EVAL",
                     help="Copula evaluation point 'u1,u2' (repeatable). Default: 0.7,0.7 and 0.02,0.02."),
        click.option("--report-every", type=int, default=5000, show_default=True, envvar="TAILSKETCH_REPORT_EVERY",
                     help="Elements between reports / checkpoints."),
        click.option("--output", default="-", show_default=True, envvar="TAILSKETCH_OUTPUT", help="Output path or '-'."),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True,
                     envvar="TAILSKETCH_FORMAT"),
        click.option("--seed", type=int, default=0, show_default=True, envvar="TAILSKETCH_SEED"),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _config(**kw) -> CliConfig:
    points = parse_eval(kw.pop("eval_points")) or [(0.7, 0.7), (0.02, 0.02)]
    try:
        return CliConfig(eval_points=points, **kw)
    except click.BadParameter:
        raise
    except ValueError as e:
        raise click.BadParameter(str(e))


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Streaming tail-dependence estimation with copula summaries."""


@main.command()
@_common
@click.option("--input", "input_path", default="-", show_default=True, envvar="TAILSKETCH_INPUT",
              help="Two-column delimited file, or '-' for stdin.")
@click.option("--delimiter", default=",", show_default=True, envvar="TAILSKETCH_DELIMITER")
@click.option("--header", is_flag=True, envvar="TAILSKETCH_HEADER", help="Skip the first line.")
@click.option("--checkpoint", "checkpoint_path", default=None, envvar="TAILSKETCH_CHECKPOINT",
              help="Write a summary snapshot (JSON) here at the end.")
def track(epsilon, mode, tail_i, upper_offset, eval_points, report_every, output, fmt, seed,
          input_path, delimiter, header, checkpoint_path):
    """Maintain a summary over a paired stream and emit periodic estimates."""
    cfg = _config(epsilon=epsilon, mode=mode, tail_lower_i=tail_i, tail_upper_offset=upper_offset,
                  eval_points=eval_points, report_every=report_every, input=input_path, delimiter=delimiter,
                  has_header=header, output=output, format=fmt, seed=seed, checkpoint_path=checkpoint_path)
    try:
        src = sys.stdin if input_path == "-" else open(input_path, newline="")
    except OSError as e:
        _fail(EXIT_IO, f"cannot read input: {e}")
    try:
        out, close_out = _open_output(output)
    except OSError as e:
        _fail(EXIT_IO, f"cannot write output: {e}")

    cs = CopulaSummary(cfg.error_mode)
    writer = ReportWriter(out, fmt)
    try:
        for x1, x2 in read_pairs(src, delimiter, header):
            cs.add(x1, x2)
            if cs.n % report_every == 0:
                writer.write(track_report(cs, cfg))
        if cs.n == 0:
            _fail(EXIT_PARSE, "empty stream")
        if cs.n % report_every:
            writer.write(track_report(cs, cfg))
        out.flush()
    except InputParseError as e:
        _fail(EXIT_PARSE, str(e))
    except OSError as e:
        _fail(EXIT_IO, str(e))
    finally:
        if close_out:
            out.close()
        if src is not sys.stdin:
            src.close()

    if checkpoint_path:
        try:
            with open(checkpoint_path, "w") as fh:
                fh.write(cs.to_json())
        except OSError as e:
            _fail(EXIT_IO, f"cannot write checkpoint: {e}")


@main.command()
@_common
@click.option("--distribution", type=click.Choice([d.value for d in Distribution]), default="gaussian",
              show_default=True, envvar="TAILSKETCH_DISTRIBUTION")
@click.option("--rho", type=float, default=0.8, show_default=True, envvar="TAILSKETCH_RHO")
@click.option("--length", type=int, default=DESK_LENGTH, show_default=True, envvar="TAILSKETCH_LENGTH")
@click.option("--full-scale", is_flag=True, help=f"Use the {FULL_LENGTH}-element stream length.")
@click.option("--compare-modes", is_flag=True, help="Run biased and uniform summaries on the same stream.")
def simulate(epsilon, mode, tail_i, upper_offset, eval_points, report_every, output, fmt, seed,
             distribution, rho, length, full_scale, compare_modes):
    """Run a checkpointed accuracy experiment on a synthetic stream."""
    cfg = _config(epsilon=epsilon, mode=mode, tail_lower_i=tail_i, tail_upper_offset=upper_offset,
                  eval_points=eval_points, report_every=report_every, output=output, format=fmt, seed=seed)
    if full_scale:
        length = FULL_LENGTH
    if length < 1:
        _fail(EXIT_CONFIG, "empty stream")
    try:
        spec = StreamSpec(Distribution(distribution), rho=rho, length=length, seed=seed)
    except ValueError as e:
        _fail(EXIT_CONFIG, str(e))

    if compare_modes:
        marks = list(range(report_every, length + 1, report_every)) or [length]
        biased, uniform = run_compare_modes(spec, epsilon, tail_i, marks, eval_points=cfg.eval_points)
        reports = {"biased": biased, "uniform": uniform}
        payload = {
            "schema_version": biased.schema_version,
            "tail_index": tail_i,
            "checkpoints": marks,
            "bound_biased": theoretical_tail_bounds(ErrorMode.biased(epsilon), tail_i, marks),
            "bound_uniform": theoretical_tail_bounds(ErrorMode.uniform(epsilon), tail_i, marks),
            "reports": {k: r.to_dict() for k, r in reports.items()},
        }
        if fmt == "json":
            text = json.dumps(payload)
        else:
            buf = io.StringIO()
            for k, r in reports.items():
                body = r.to_csv().splitlines()
                if k == "biased":
                    buf.write("mode," + body[0] + "\n")
                for line in body[1:]:
                    buf.write(f"{k},{line}\n")
            text = buf.getvalue()
    else:
        report = run_experiment(spec, cfg.error_mode, eval_points=cfg.eval_points, tail_indices=(tail_i,),
                                upper_offsets=(upper_offset,), checkpoint_every=report_every)
        text = report.to_json() if fmt == "json" else report.to_csv()
    try:
        out, close_out = _open_output(output)
        out.write(text if text.endswith("\n") else text + "\n")
        if close_out:
            out.close()
    except OSError as e:
        _fail(EXIT_IO, str(e))


@main.command()
@click.option("--epsilon", type=float, default=0.1, show_default=True, envvar="TAILSKETCH_EPSILON")
@click.option("--mode", type=click.Choice(["biased", "uniform"]), default="biased", show_default=True,
              envvar="TAILSKETCH_MODE")
@click.option("--length", type=int, default=100_000, show_default=True, envvar="TAILSKETCH_LENGTH")
@click.option("--distribution", type=click.Choice([d.value for d in Distribution]), default="gaussian",
              show_default=True, envvar="TAILSKETCH_DISTRIBUTION")
@click.option("--rho", type=float, default=0.8, show_default=True, envvar="TAILSKETCH_RHO")
@click.option("--seed", type=int, default=0, show_default=True, envvar="TAILSKETCH_SEED")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True,
              envvar="TAILSKETCH_FORMAT")
def bench(epsilon, mode, length, distribution, rho, seed, fmt):
    """Measure per-insert latency and final summary size."""
    try:
        m = ErrorMode(mode, epsilon)
        spec = StreamSpec(Distribution(distribution), rho=rho, length=length, seed=seed)
    except ValueError as e:
        _fail(EXIT_CONFIG, str(e))
    data = generate_stream(spec)
    cs = CopulaSummary(m)
    ns = np.empty(data.n, dtype=np.int64)
    clock = time.perf_counter_ns
    for k, (x1, x2) in enumerate(data):
        t0 = clock()
        cs.add(x1, x2)
        ns[k] = clock() - t0
    size = cs.size()
    result = {
        "n": cs.n,
        "epsilon": epsilon,
        "mode": mode,
        "median_insert_s": float(np.median(ns) / 1e9),
        "p99_insert_s": float(np.percentile(ns, 99) / 1e9),
        "mean_insert_s": float(ns.mean() / 1e9),
        "max_insert_s": float(ns.max() / 1e9),
        "entries": size.entry_count,
        "tuples": size.total_tuple_count,
        "bytes": size.byte_estimate,
        "size_ratio": cs.size_ratio(),
    }
    if fmt == "json":
        click.echo(json.dumps(result))
        return
    for k, v in result.items():
        click.echo(f"{k:>16}: {v:.3e}" if isinstance(v, float) and k.endswith("_s") else f"{k:>16}: {v}")


if __name__ == "__main__":
    main()
