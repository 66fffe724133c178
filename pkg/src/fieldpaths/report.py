"""Replication orchestration, aggregation and CSV/plot-data emission.

An experiment runs one scenario for a range of seeds (and one or more
protocols), buckets the per-interval metrics, and aggregates across
seeds with means and 95% confidence intervals (Student t).  The CSV
schema is one row per bucket x protocol x metric; per-run scalars use
bucket_start_interval = -1.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .baselines import BaselineKind
from .engine import Simulation

BUCKET_METRICS = ("cumulative_energy", "cumulative_lost", "max_latency")
SCALAR_METRICS = ("first_violation_interval", "first_loss_interval",
                  "reconfigurations_total", "total_energy", "total_lost")


@dataclass
class AggregateReport:
    bucket_starts: list
    series: dict = field(default_factory=dict)   # (protocol, metric) -> {mean, ci_low, ci_high}
    scalars: dict = field(default_factory=dict)  # (protocol, metric) -> (mean, ci_low, ci_high)
    per_seed: dict = field(default_factory=dict)  # protocol -> {metric: [per-seed values]}

    def protocols(self):
        return sorted({p for (p, _m) in self.series} | {p for (p, _m) in self.scalars})


def _ci(values):
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    n = arr.size
    if n < 2:
        return mean, mean, mean
    sem = arr.std(ddof=1) / math.sqrt(n)
    if sem == 0:
        return mean, mean, mean
    half = float(stats.t.ppf(0.975, n - 1) * sem)
    return mean, mean - half, mean + half


def bucket_edges(horizon, fraction):
    size = max(1, round(horizon * fraction))
    starts = list(range(0, horizon, size))
    return starts, size


def bucketize(log, starts, size):
    """Per-bucket views of one run: cumulative energy and loss at bucket
    end, max connected-path latency within the bucket."""
    cum_e = log.cumulative_energy()
    cum_l = log.cumulative_lost()
    energy = []
    lost = []
    latency = []
    for s in starts:
        e = min(s + size, log.horizon) - 1
        energy.append(float(cum_e[e]))
        lost.append(float(cum_l[e]))
        latency.append(float(log.max_latency[s:e + 1].max()))
    return energy, lost, latency


def run_experiment(cfg, replications=None, base_seed=None, kinds=None,
                   check_invariants=False, keep_logs=False) -> AggregateReport:
    """Run seeds base_seed..base_seed+n-1 for each protocol and aggregate.

    Deterministic: the fold over runs is ordered by protocol then seed.
    """
    n = replications if replications is not None else cfg.replications
    if n < 1:
        raise ValueError("replications must be at least 1")
    base = base_seed if base_seed is not None else cfg.base_seed
    kind_list = [BaselineKind.from_name(k) for k in (kinds or cfg.kinds)]
    starts, size = bucket_edges(cfg.horizon, cfg.bucket_fraction)
    report = AggregateReport(bucket_starts=starts)
    for kind in kind_list:
        rows = {m: [] for m in BUCKET_METRICS}
        scal = {m: [] for m in SCALAR_METRICS}
        logs = []
        for i in range(n):
            sim = Simulation(cfg, base + i, kind, check_invariants=check_invariants)
            log = sim.run()
            if check_invariants:
                log.verify_conservation(cfg.integer_units)
            e, l, ml = bucketize(log, starts, size)
            rows["cumulative_energy"].append(e)
            rows["cumulative_lost"].append(l)
            rows["max_latency"].append(ml)
            fv = log.first_violation_interval()
            fl = log.first_loss_interval()
            scal["first_violation_interval"].append(
                float(cfg.horizon if fv is None else fv))
            scal["first_loss_interval"].append(
                float(cfg.horizon if fl is None else fl))
            scal["reconfigurations_total"].append(float(log.total_reconfigurations()))
            scal["total_energy"].append(float(log.spent_total().sum()))
            scal["total_lost"].append(float(log.lost.sum()))
            if keep_logs:
                logs.append(log)
        proto = kind.value
        for metric, per_run in rows.items():
            data = np.asarray(per_run)
            means, lows, highs = [], [], []
            for b in range(data.shape[1]):
                m, lo, hi = _ci(data[:, b])
                means.append(m)
                lows.append(lo)
                highs.append(hi)
            report.series[(proto, metric)] = {
                "mean": means, "ci_low": lows, "ci_high": highs}
        for metric, values in scal.items():
            report.scalars[(proto, metric)] = _ci(values)
        report.per_seed[proto] = scal
        report.per_seed[proto]["bucket_cumulative_energy"] = rows["cumulative_energy"]
        report.per_seed[proto]["bucket_cumulative_lost"] = rows["cumulative_lost"]
        report.per_seed[proto]["bucket_max_latency"] = rows["max_latency"]
        if keep_logs:
            report.per_seed[proto]["logs"] = logs
    return report


# ----------------------------------------------------------------------
# emission

def emit_csv(report: AggregateReport, path):
    """Rows: (bucket_start_interval, protocol, metric, mean, ci_low, ci_high);
    scalar rows use bucket_start_interval = -1."""
    lines = ["bucket_start_interval,protocol,metric,mean,ci_low,ci_high"]
    for (proto, metric) in sorted(report.series):
        ser = report.series[(proto, metric)]
        for b, start in enumerate(report.bucket_starts):
            lines.append(f"{start},{proto},{metric},{ser['mean'][b]!r},"
                         f"{ser['ci_low'][b]!r},{ser['ci_high'][b]!r}")
    for (proto, metric) in sorted(report.scalars):
        m, lo, hi = report.scalars[(proto, metric)]
        lines.append(f"-1,{proto},{metric},{m!r},{lo!r},{hi!r}")
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def parse_csv(text) -> AggregateReport:
    """Inverse of emit_csv (exact round trip of every number)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0]
    if header != "bucket_start_interval,protocol,metric,mean,ci_low,ci_high":
        raise ValueError("unexpected CSV header")
    starts = []
    series = {}
    scalars = {}
    for ln in lines[1:]:
        bucket, proto, metric, mean, lo, hi = ln.split(",")
        bucket = int(bucket)
        mean, lo, hi = float(mean), float(lo), float(hi)
        if bucket == -1:
            scalars[(proto, metric)] = (mean, lo, hi)
        else:
            ser = series.setdefault((proto, metric),
                                    {"mean": [], "ci_low": [], "ci_high": []})
            ser["mean"].append(mean)
            ser["ci_low"].append(lo)
            ser["ci_high"].append(hi)
            if bucket not in starts:
                starts.append(bucket)
    return AggregateReport(bucket_starts=sorted(starts), series=series,
                           scalars=scalars)


def emit_plotdata(report: AggregateReport, path):
    """Figure-shaped JSON: energy / loss / latency series per protocol."""
    figure_of = {"cumulative_energy": "energy", "cumulative_lost": "loss",
                 "max_latency": "latency"}
    out = {"energy": {}, "loss": {}, "latency": {}, "scalars": {}}
    for (proto, metric), ser in sorted(report.series.items()):
        fig = figure_of.get(metric, metric)
        out.setdefault(fig, {})[proto] = {
            "x": report.bucket_starts, "mean": ser["mean"],
            "ci_low": ser["ci_low"], "ci_high": ser["ci_high"]}
    for (proto, metric), (m, lo, hi) in sorted(report.scalars.items()):
        out["scalars"].setdefault(proto, {})[metric] = [m, lo, hi]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
    return out


def emit_raw(log, path):
    """Verbose per-interval dump of one run."""
    lines = ["interval,fwd_spend,local_cfg_spend,ctrl_cfg_spend,generated,"
             "delivered,lost,max_latency,violation,remaining_total"]
    for t in range(log.horizon):
        lines.append(
            f"{t},{log.fwd_spend[t]!r},{log.local_cfg_spend[t]!r},"
            f"{log.ctrl_cfg_spend[t]!r},{log.generated[t]},{log.delivered[t]},"
            f"{log.lost[t]},{log.max_latency[t]!r},{log.violation[t]},"
            f"{log.remaining_total[t]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# reconfiguration sweep

def sweep_reconfigurations(cfg, percentages, replications=None, base_seed=None,
                           kinds=("distr", "pdd_cr"), multiplier=3.0) -> AggregateReport:
    """Total energy of the local protocol vs central re-planning across
    trigger densities: percentage p schedules round(p% * horizon)
    transient interference triggers."""
    for p in percentages:
        if not 0 < p < 100:
            raise ValueError("percentages must be in (0, 100)")
    n = replications if replications is not None else cfg.replications
    base = base_seed if base_seed is not None else cfg.base_seed
    report = AggregateReport(bucket_starts=[])
    for pct in percentages:
        sub = dataclasses.replace(
            cfg, gen_interference=(pct / 100.0, multiplier, 1), gen_failures=None,
            gen_revive=None)
        for kind_name in kinds:
            kind = BaselineKind.from_name(kind_name)
            totals = []
            for i in range(n):
                log = Simulation(sub, base + i, kind).run()
                totals.append(float(log.spent_total().sum()))
            proto = f"{kind.value}@p{pct:g}"
            report.scalars[(proto, "total_energy")] = _ci(totals)
            report.per_seed[proto] = {"total_energy": totals}
    return report
