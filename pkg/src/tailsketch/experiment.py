"""Synthetic streams and checkpointed accuracy / size / runtime experiments."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import special, stats

from .copula import BYTES_PER_PAIR, BYTES_PER_TUPLE, CopulaSummary
from .quantile import ErrorMode
from .tail import (
    RawPairs,
    bound_values,
    estimate_lambda_lower,
    estimate_lambda_upper,
    oracle_copula,
    oracle_lambda_lower,
    oracle_lambda_upper,
)

REPORT_SCHEMA_VERSION = 1
DEFAULT_EVAL_POINTS = ((0.7, 0.7), (0.02, 0.02))
DESK_LENGTH = 30_000
FULL_LENGTH = 300_000


class Distribution(str, Enum):
    GAUSSIAN_PAIR = "gaussian"
    BETA_PAIR = "beta"
    COMONOTONE = "comonotone"
    ANTIMONOTONE = "antimonotone"
    INDEPENDENT_UNIFORM = "independent"


@dataclass(frozen=True)
class StreamSpec:
    """Recipe for a reproducible synthetic bivariate stream.

    ``rho`` is the normal-copula correlation for the Gaussian and Beta(10, 1)
    pairs and is ignored by the degenerate generators.  Randomness comes from
    numpy's PCG64 generator seeded with ``seed``.
    """

    distribution: Distribution
    rho: float = 0.8
    length: int = DESK_LENGTH
    seed: int = 0
    beta_a: float = 10.0
    beta_b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if self.length < 1:
            raise ValueError("empty stream: length must be at least 1")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")


def generate_stream(spec: StreamSpec) -> RawPairs:
    rng = np.random.default_rng(spec.seed)
    n = spec.length
    dist = spec.distribution
    if dist in (Distribution.GAUSSIAN_PAIR, Distribution.BETA_PAIR):
        z = rng.standard_normal((n, 2))
        x1 = z[:, 0]
        x2 = spec.rho * z[:, 0] + math.sqrt(1.0 - spec.rho**2) * z[:, 1]
        if dist is Distribution.BETA_PAIR:
            marginal = stats.beta(spec.beta_a, spec.beta_b)
            x1 = marginal.ppf(special.ndtr(x1))
            x2 = marginal.ppf(special.ndtr(x2))
        return RawPairs(x1, x2)
    if dist is Distribution.COMONOTONE:
        x = rng.standard_normal(n)
        return RawPairs(x, x.copy())
    if dist is Distribution.ANTIMONOTONE:
        x = rng.standard_normal(n)
        return RawPairs(x, -x)
    u = rng.random((n, 2))
    return RawPairs(u[:, 0], u[:, 1])


def stream_checksum(data: RawPairs) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(data.x1).tobytes())
    h.update(np.ascontiguousarray(data.x2).tobytes())
    return h.hexdigest()


def _timing_stats(ns: np.ndarray) -> dict:
    if ns.size == 0:
        return {"count": 0, "mean_s": 0.0, "median_s": 0.0, "p99_s": 0.0, "max_s": 0.0}
    s = ns / 1e9
    return {
        "count": int(s.size),
        "mean_s": float(s.mean()),
        "median_s": float(np.median(s)),
        "p99_s": float(np.percentile(s, 99)),
        "max_s": float(s.max()),
    }


@dataclass
class ExperimentReport:
    config: dict
    stream_checksum: str
    checkpoints: list = field(default_factory=list)
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def rows(self) -> list[dict]:
        """Flat view: one row per checkpoint x metric."""
        out = []
        for cp in self.checkpoints:
            n = cp["n"]
            for c in cp["copula"]:
                out.append({"n": n, "metric": "copula", "u1": c["u1"], "u2": c["u2"], "index": "",
                            "estimate": c["estimate"], "oracle": c["oracle"], "error": c["error"], "bound": c["bound"]})
            for lam in cp["lambda"]:
                out.append({"n": n, "metric": f"lambda_{lam['side']}", "u1": "", "u2": "", "index": lam["tail_index"],
                            "estimate": lam["estimate"], "oracle": lam["oracle"], "error": lam["error"], "bound": lam["bound"]})
            for key in ("tuple_count", "entry_count", "size_ratio"):
                out.append({"n": n, "metric": key, "u1": "", "u2": "", "index": "",
                            "estimate": cp[key], "oracle": "", "error": "", "bound": ""})
            for key, val in cp["insert_time"].items():
                out.append({"n": n, "metric": f"insert_{key}", "u1": "", "u2": "", "index": "",
                            "estimate": val, "oracle": "", "error": "", "bound": ""})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["n", "metric", "u1", "u2", "index", "estimate", "oracle", "error", "bound"])
        w.writeheader()
        w.writerows(self.rows())
        return buf.getvalue()

    def violations(self) -> list[dict]:
        """Every recorded error exceeding its recorded bound."""
        bad = []
        for cp in self.checkpoints:
            for rec in cp["copula"] + cp["lambda"]:
                if rec["error"] > rec["bound"]:
                    bad.append({"n": cp["n"], **rec})
        return bad

    def series(self, metric: str, key: str = "error") -> dict:
        """``{label: [value per checkpoint]}`` for ``copula`` or ``lambda`` records."""
        out: dict[str, list] = {}
        for cp in self.checkpoints:
            for rec in cp[metric]:
                label = f"({rec['u1']},{rec['u2']})" if metric == "copula" else f"{rec['side']}:{rec['tail_index']}"
                out.setdefault(label, []).append(rec[key])
        return out


def _checkpoint_record(cs: CopulaSummary, data: RawPairs, eval_points, tail_indices, upper_offsets, times) -> dict:
    n = cs.n
    prefix = data.prefix(n)
    copula = []
    for u1, u2 in eval_points:
        res = cs.query(u1, u2)
        exact = oracle_copula(prefix, u1, u2)
        copula.append({"u1": u1, "u2": u2, "estimate": res.value, "oracle": exact,
                       "error": abs(res.value - exact), "bound": res.bound})
    lambdas = []
    for i in tail_indices:
        if 1 <= i <= math.ceil(n / 2):
            est = estimate_lambda_lower(cs, i)
            exact = oracle_lambda_lower(prefix, i)
            lambdas.append({"side": "lower", "tail_index": i, "estimate": est.lambda_, "oracle": exact,
                            "error": abs(est.lambda_ - exact), "bound": est.bound})
    for j in upper_offsets:
        i = n - j
        if math.ceil(n / 2) < i < n:
            est = estimate_lambda_upper(cs, i)
            exact = oracle_lambda_upper(prefix, i)
            lambdas.append({"side": "upper", "tail_index": j, "estimate": est.lambda_, "oracle": exact,
                            "error": abs(est.lambda_ - exact), "bound": est.bound})
    size = cs.size()
    return {
        "n": n,
        "copula": copula,
        "lambda": lambdas,
        "tuple_count": size.total_tuple_count,
        "entry_count": size.entry_count,
        "size_ratio": cs.size_ratio(),
        "insert_time": _timing_stats(np.asarray(times, dtype=np.int64)),
    }


def run_experiment(
    spec: StreamSpec,
    mode: ErrorMode,
    eval_points: Sequence[tuple[float, float]] = DEFAULT_EVAL_POINTS,
    tail_indices: Sequence[int] = (25,),
    checkpoint_every: int = 5000,
    upper_offsets: Sequence[int] | None = None,
    checkpoints: Sequence[int] | None = None,
    data: RawPairs | None = None,
) -> ExperimentReport:
    """Stream ``spec`` through a copula summary and score it at checkpoints.

    Checkpoints default to every ``checkpoint_every`` elements (plus the final
    length); an explicit ``checkpoints`` list overrides that.  Each checkpoint
    compares against exact oracles on the prefix seen so far.
    """
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")
    if data is None:
        data = generate_stream(spec)
    n_total = data.n
    upper_offsets = tuple(tail_indices if upper_offsets is None else upper_offsets)
    if checkpoints is None:
        marks = set(range(checkpoint_every, n_total + 1, checkpoint_every))
        marks.add(n_total)
    else:
        marks = {int(c) for c in checkpoints if 1 <= c <= n_total}
    marks = sorted(marks)

    report = ExperimentReport(
        config={
            "stream": {**asdict(spec), "distribution": spec.distribution.value},
            "mode": mode.to_dict(),
            "eval_points": [list(p) for p in eval_points],
            "tail_indices": list(tail_indices),
            "upper_offsets": list(upper_offsets),
            "checkpoints": marks,
            "bytes_per_tuple": BYTES_PER_TUPLE,
            "bytes_per_pair": BYTES_PER_PAIR,
        },
        stream_checksum=stream_checksum(data),
    )
    cs = CopulaSummary(mode)
    times: list[int] = []
    next_mark = 0
    clock = time.perf_counter_ns
    for x1, x2 in data:
        t0 = clock()
        cs.add(x1, x2)
        times.append(clock() - t0)
        if next_mark < len(marks) and cs.n == marks[next_mark]:
            report.checkpoints.append(
                _checkpoint_record(cs, data, eval_points, tail_indices, upper_offsets, times)
            )
            times = []
            next_mark += 1
        if next_mark == len(marks):
            break
    return report


def compare_modes(
    spec: StreamSpec,
    epsilon: float,
    tail_index: int,
    checkpoints: Sequence[int],
    eval_points: Sequence[tuple[float, float]] = DEFAULT_EVAL_POINTS,
) -> tuple[ExperimentReport, ExperimentReport]:
    """Biased and uniform summaries on the identical stream, same checkpoints."""
    data = generate_stream(spec)
    kwargs = dict(eval_points=eval_points, tail_indices=(tail_index,), checkpoints=checkpoints, data=data)
    biased = run_experiment(spec, ErrorMode.biased(epsilon), **kwargs)
    uniform = run_experiment(spec, ErrorMode.uniform(epsilon), **kwargs)
    return biased, uniform


def theoretical_tail_bounds(mode: ErrorMode, tail_index: int, ns: Sequence[int]) -> list[float]:
    """Lower-tail bound at fixed ``tail_index`` for each stream length in ``ns``."""
    return [bound_values(mode, tail_index, n).tail_bound_lower for n in ns]


__all__ = [
    "DEFAULT_EVAL_POINTS",
    "Distribution",
    "ExperimentReport",
    "StreamSpec",
    "compare_modes",
    "generate_stream",
    "run_experiment",
    "stream_checksum",
    "theoretical_tail_bounds",
]
