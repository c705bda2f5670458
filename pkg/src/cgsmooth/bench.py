"""Experiment harness: noisy-signal denoising runs, the paired reference suite,
schedule sweeps and plot-script emission.

Every run directory holds ``clean.csv``, ``noisy.csv``, ``denoised.csv``,
``error.csv`` (denoised minus clean), ``log.csv`` and the report in two forms,
``report.txt`` (flat ``key=value``) and ``report.json``. All CSV output is a
pure function of the configuration; wall times only appear in the report files
and in ``timings.txt``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cg_accel import FREEZE_AT_RESTART, REFRESH_EVERY_STEP, CgSchedule, pcg_restarted, pcg_truncated
from .errors import BreakdownError, SpecificationError
from .graph_operators import BfParams, GfParams
from .iterated_filters import GuidancePolicy, IterationLog, iterate_filter
from .signal_core import (
    DEFAULT_CLEAN_SPEC,
    NoiseSpec,
    Signal,
    add_noise,
    compute_metrics,
    generate_clean,
    read_signal_csv,
    write_signal_csv,
)

__all__ = [
    "ExperimentConfig",
    "DenoiseReport",
    "SuiteSummary",
    "run_experiment",
    "run_suite",
    "sweep_schedules",
    "emit_plot_script",
    "load_report",
    "SUITE_EXPERIMENTS",
]

FILTERS = ("bf", "gf")
METHODS = ("iterate", "cg", "cg-restart")
REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    """One denoising run.

    ``guidance`` is ``"self"``, ``"clean"`` or ``"file:PATH"`` (a signal CSV).
    ``iterations`` is used by ``method="iterate"``, ``k_max`` by both CG
    methods and ``l_max`` by ``"cg-restart"`` only. ``input_path`` replaces
    the built-in clean signal by a CSV; ``length`` resizes the built-in one.
    """

    filter: str = "bf"
    method: str = "iterate"
    bf: BfParams = field(default_factory=BfParams)
    gf: GfParams = field(default_factory=GfParams)
    iterations: int = 10
    k_max: int = 5
    l_max: int = 1
    guidance: str = "self"
    freeze: str = FREEZE_AT_RESTART
    noise_var: float = 0.01
    seed: int = 0
    length: int = DEFAULT_CLEAN_SPEC.length
    input_path: Optional[str] = None
    out_dir: Optional[str] = None
    name: str = "run"

    def __post_init__(self):
        if self.filter not in FILTERS:
            raise SpecificationError(f"filter must be one of {FILTERS}, got {self.filter!r}")
        if self.method not in METHODS:
            raise SpecificationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.freeze not in (FREEZE_AT_RESTART, REFRESH_EVERY_STEP):
            raise SpecificationError(f"freeze must be 'restart' or 'step', got {self.freeze!r}")
        if self.iterations < 0:
            raise SpecificationError("iterations must be >= 0")
        if self.k_max < 1 or self.l_max < 1:
            raise SpecificationError("k_max and l_max must be >= 1")
        if not (self.guidance in ("self", "clean") or self.guidance.startswith("file:")):
            raise SpecificationError(f"guidance must be self, clean or file:PATH, got {self.guidance!r}")
        if self.guidance.startswith("file:") and not Path(self.guidance[5:]).is_file():
            raise SpecificationError(f"guidance file not found: {self.guidance[5:]}")
        if self.input_path is not None and not Path(self.input_path).is_file():
            raise SpecificationError(f"input file not found: {self.input_path}")
        NoiseSpec(self.noise_var, self.seed)

    @property
    def params(self):
        return self.bf if self.filter == "bf" else self.gf

    @property
    def expected_applications(self) -> int:
        if self.method == "iterate":
            return self.iterations
        if self.method == "cg":
            return self.k_max
        return self.k_max * self.l_max

    def describe(self) -> str:
        if self.method == "iterate":
            return f"iterate {self.iterations}"
        if self.method == "cg":
            return f"cg {self.k_max}"
        return f"cg-restart {self.l_max}x{self.k_max}"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["bf"] = asdict(self.bf)
        d["gf"] = asdict(self.gf)
        return d


@dataclass
class DenoiseReport:
    config: ExperimentConfig
    input_metrics: dict
    output_metrics: dict
    applications: int
    wall_time_s: float
    # RMS of denoised minus noisy: how far the filter moved the data
    change_rms: float
    breakdown: bool = False
    events: list = field(default_factory=list)
    log_path: Optional[str] = None
    files: dict = field(default_factory=dict)
    denoised: Optional[Signal] = field(default=None, repr=False)
    log: Optional[IterationLog] = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.config.name

    @property
    def psnr_db(self) -> float:
        return self.output_metrics["psnr_db"]

    def as_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA_VERSION,
            "name": self.name,
            "config": self.config.as_dict(),
            "input": self.input_metrics,
            "output": self.output_metrics,
            "applications": self.applications,
            "wall_time_s": self.wall_time_s,
            "change_rms": self.change_rms,
            "breakdown": self.breakdown,
            "events": list(self.events),
            "log_path": self.log_path,
            "files": dict(self.files),
        }

    def to_text(self) -> str:
        flat = {
            "name": self.name,
            "filter": self.config.filter,
            "method": self.config.method,
            "schedule": self.config.describe(),
            "guidance": self.config.guidance,
            "freeze": self.config.freeze,
            "seed": self.config.seed,
            "noise_var": self.config.noise_var,
            "length": self.config.length,
        }
        flat.update({f"param_{k}": v for k, v in asdict(self.config.params).items()})
        flat.update({f"input_{k}": v for k, v in self.input_metrics.items()})
        flat.update({f"output_{k}": v for k, v in self.output_metrics.items()})
        flat.update(
            applications=self.applications,
            wall_time_s=self.wall_time_s,
            change_rms=self.change_rms,
            breakdown=str(self.breakdown).lower(),
            events=len(self.events),
        )
        lines = [f"{k}={_fmt(v)}" for k, v in flat.items()]
        lines += [f"event_{i}={e}" for i, e in enumerate(self.events)]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(obj):
    # JSON has no inf/nan; store them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def load_clean(config: ExperimentConfig) -> Signal:
    if config.input_path is not None:
        return read_signal_csv(config.input_path)
    return generate_clean(DEFAULT_CLEAN_SPEC.resized(config.length))


def _guide(config: ExperimentConfig, clean: Signal) -> GuidancePolicy:
    if config.guidance == "self":
        return GuidancePolicy.self_guided()
    if config.guidance == "clean":
        return GuidancePolicy.fixed(clean)
    return GuidancePolicy.fixed(read_signal_csv(config.guidance[5:]))


def _denoise(config: ExperimentConfig, noisy: Signal, policy: GuidancePolicy, log: IterationLog):
    """Returns ``(denoised, breakdown)``; a breakdown keeps the last finite iterate."""
    params = config.params
    if config.method == "iterate":
        return iterate_filter(noisy, params, policy, config.iterations, log, track_residual=True), False
    if config.method == "cg":
        guide = policy.guide if policy.is_fixed else noisy
        try:
            return pcg_truncated(noisy, guide, params, config.k_max, log)[0], False
        except BreakdownError as exc:
            log.event(f"breakdown: {exc}")
            return exc.iterate, True
    schedule = CgSchedule(config.k_max, config.l_max, policy, config.freeze)
    out, _ = pcg_restarted(noisy, params, schedule, log)
    return out, any("aborted" in e for e in log.events)


def run_experiment(config: ExperimentConfig, *, clean: Optional[Signal] = None,
                   noisy: Optional[Signal] = None) -> DenoiseReport:
    """Generate or load the clean signal, add noise, denoise, score and write files.

    ``clean``/``noisy`` may be passed in to share them across runs. Nothing is
    written when ``config.out_dir`` is ``None``.
    """
    if clean is None:
        clean = load_clean(config)
    if noisy is None:
        noisy = add_noise(clean, NoiseSpec(config.noise_var, config.seed))
    policy = _guide(config, clean)
    log = IterationLog(reference=clean.samples)
    t0 = time.perf_counter()
    denoised, breakdown = _denoise(config, noisy, policy, log)
    wall = time.perf_counter() - t0
    diff = denoised.samples - noisy.samples
    report = DenoiseReport(
        config=config,
        input_metrics=compute_metrics(clean, noisy).as_dict(),
        output_metrics=compute_metrics(clean, denoised).as_dict(),
        applications=log.applications,
        wall_time_s=wall,
        change_rms=float(np.sqrt(np.mean(diff * diff))),
        breakdown=breakdown,
        events=list(log.events),
        denoised=denoised,
        log=log,
    )
    if config.out_dir is not None:
        _write_run(report, clean, noisy, Path(config.out_dir))
    return report


def _write_run(report: DenoiseReport, clean: Signal, noisy: Signal, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    den = report.denoised
    files = {
        "clean": write_signal_csv(clean, out / "clean.csv"),
        "noisy": write_signal_csv(noisy, out / "noisy.csv"),
        "denoised": write_signal_csv(den, out / "denoised.csv"),
        "error": write_signal_csv(den.with_samples(den.samples - clean.samples), out / "error.csv"),
        "log": report.log.write_csv(out / "log.csv"),
    }
    report.files = {k: p.name for k, p in files.items()}
    report.log_path = "log.csv"
    (out / "report.txt").write_text(report.to_text(), newline="\n")
    (out / "report.json").write_text(
        json.dumps(_json_safe(report.as_dict()), indent=2) + "\n", newline="\n"
    )


# --------------------------------------------------------------------------
# paired suite

# (pair, experiment name, filter, guidance, method, iterations, k_max, l_max)
SUITE_EXPERIMENTS = (
    ("bf_clean", "bf_clean_iterate500", "bf", "clean", "iterate", 500, 1, 1),
    ("bf_clean", "bf_clean_cg20", "bf", "clean", "cg", 0, 20, 1),
    ("gf_clean", "gf_clean_iterate90", "gf", "clean", "iterate", 90, 1, 1),
    ("gf_clean", "gf_clean_cg13", "gf", "clean", "cg", 0, 13, 1),
    ("bf_self", "bf_self_iterate600", "bf", "self", "iterate", 600, 1, 1),
    ("bf_self", "bf_self_cg3x11", "bf", "self", "cg-restart", 0, 11, 3),
    ("gf_self", "gf_self_iterate75", "gf", "self", "iterate", 75, 1, 1),
    ("gf_self", "gf_self_cg5x5", "gf", "self", "cg-restart", 0, 5, 5),
)


@dataclass
class PairResult:
    pair: str
    iterated: DenoiseReport
    accelerated: DenoiseReport

    @property
    def psnr_gap_db(self) -> float:
        return abs(self.iterated.psnr_db - self.accelerated.psnr_db)

    @property
    def ratio(self) -> float:
        return self.iterated.applications / self.accelerated.applications


@dataclass
class SuiteSummary:
    reports: list
    pairs: list
    failures: list = field(default_factory=list)

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "method", "applications", "psnr_db", "snr_db", "input_psnr_db"])
        for r in self.reports:
            w.writerow([r.name, r.config.describe(), r.applications, _fmt(r.output_metrics["psnr_db"]),
                        _fmt(r.output_metrics["snr_db"]), _fmt(r.input_metrics["psnr_db"])])
        return buf.getvalue()

    def pairs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pair", "iterated_applications", "cg_applications", "ratio", "psnr_gap_db"])
        for p in self.pairs:
            w.writerow([p.pair, p.iterated.applications, p.accelerated.applications,
                        _fmt(p.ratio), _fmt(p.psnr_gap_db)])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'experiment':<22}{'method':<16}{'apps':>6}{'PSNR':>9}{'SNR':>9}{'time/s':>9}"]
        for r in self.reports:
            lines.append(
                f"{r.name:<22}{r.config.describe():<16}{r.applications:>6}"
                f"{r.output_metrics['psnr_db']:>9.2f}{r.output_metrics['snr_db']:>9.2f}{r.wall_time_s:>9.3f}"
            )
        lines.append("")
        for p in self.pairs:
            lines.append(f"{p.pair:<10} ratio {p.ratio:6.1f}x   PSNR gap {p.psnr_gap_db:.3f} dB")
        for f in self.failures:
            lines.append(f"FAILED {f}")
        return "\n".join(lines) + "\n"


def run_suite(output_dir=None, *, seed: int = 0, noise_var: float = 0.01,
                    length: int = DEFAULT_CLEAN_SPEC.length, freeze: str = FREEZE_AT_RESTART) -> SuiteSummary:
    """The four iterated-vs-CG pairs on one shared noisy signal.

    Writes one run directory per experiment plus ``summary.csv``,
    ``pairs.csv``, ``timings.txt`` and ``plot_suite.py`` under ``output_dir``.
    """
    out = Path(output_dir) if output_dir is not None else None
    base = ExperimentConfig(noise_var=noise_var, seed=seed, length=length, freeze=freeze)
    clean = load_clean(base)
    noisy = add_noise(clean, NoiseSpec(noise_var, seed))
    reports, failures, by_name = [], [], {}
    for pair, name, filt, guidance, method, iters, k, l in SUITE_EXPERIMENTS:
        cfg = replace(base, name=name, filter=filt, guidance=guidance, method=method,
                      iterations=iters, k_max=k, l_max=l,
                      out_dir=str(out / name) if out is not None else None)
        try:
            rep = run_experiment(cfg, clean=clean, noisy=noisy)
        except Exception as exc:  # recorded, the remaining experiments still run
            failures.append(f"{name}: {type(exc).__name__}: {exc}")
            continue
        reports.append(rep)
        by_name[name] = rep
    pairs = []
    for i in range(0, len(SUITE_EXPERIMENTS), 2):
        a, b = SUITE_EXPERIMENTS[i][1], SUITE_EXPERIMENTS[i + 1][1]
        if a in by_name and b in by_name:
            pairs.append(PairResult(SUITE_EXPERIMENTS[i][0], by_name[a], by_name[b]))
    summary = SuiteSummary(reports, pairs, failures)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(summary.summary_csv(), newline="\n")
        (out / "pairs.csv").write_text(summary.pairs_csv(), newline="\n")
        (out / "timings.txt").write_text(
            "".join(f"{r.name}={r.wall_time_s:.6f}\n" for r in reports), newline="\n"
        )
        emit_plot_script(reports, out / "plot_suite.py",
                         overlays=[(p.pair, p.iterated.name, p.accelerated.name) for p in pairs])
    return summary


# --------------------------------------------------------------------------
# schedule sweep

SWEEP_HEADER = ["l_max", "k_max", "applications", "psnr_db", "snr_db"]


def sweep_schedules(base: ExperimentConfig, l_values: Sequence[int], k_values: Sequence[int],
                    out_path=None, *, clean: Optional[Signal] = None,
                    noisy: Optional[Signal] = None) -> list:
    """PSNR of ``cg-restart`` for every ``(l_max, k_max)`` pair, best first.

    All cells share one noisy signal (seed ``base.seed``) so that schedules
    are compared on equal terms. For each ``k_max`` a single run to
    ``max(l_values)`` cycles is made and scored after every cycle, which gives
    the same numbers as separate runs. A failing column is recorded with NaN
    metrics and the sweep continues.
    """
    l_values = sorted(set(int(v) for v in l_values))
    k_values = sorted(set(int(v) for v in k_values))
    if not l_values or not k_values:
        raise SpecificationError("sweep ranges must be non-empty")
    if l_values[0] < 1 or k_values[0] < 1:
        raise SpecificationError("sweep values must be >= 1")
    if clean is None:
        clean = load_clean(base)
    if noisy is None:
        noisy = add_noise(clean, NoiseSpec(base.noise_var, base.seed))
    policy = _guide(base, clean)
    wanted = set(l_values)
    rows = []
    for k in k_values:
        cells = {}

        def grab(cycle, x, applications):
            if cycle in wanted:
                m = compute_metrics(clean, x)
                cells[cycle] = (applications, m.psnr_db, m.snr_db)

        schedule = CgSchedule(k, l_values[-1], policy, base.freeze)
        try:
            pcg_restarted(noisy, base.params, schedule, IterationLog(), on_cycle=grab)
        except Exception:
            pass
        for l in l_values:
            apps, psnr, snr = cells.get(l, (l * k, math.nan, math.nan))
            rows.append((l, k, apps, psnr, snr))
    # NaN rows last, ties broken by fewer applications
    rows.sort(key=lambda r: (math.isnan(r[3]), -r[3] if not math.isnan(r[3]) else 0.0, r[2], r[0]))
    if out_path is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for l, k, apps, psnr, snr in rows:
            w.writerow([l, k, apps, _fmt(psnr), _fmt(snr)])
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(buf.getvalue(), newline="\n")
    return rows


# --------------------------------------------------------------------------
# plot scripts

_PLOT_HEADER = '''\
"""Plots for denoising runs. Generated file; needs numpy and matplotlib.

Run from anywhere: paths are relative to this file.
"""
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def load(rel):
    return np.loadtxt(HERE / rel, delimiter=",", skiprows=1, usecols=(1, 2), ndmin=2)

'''

_PLOT_MAIN = '''

if __name__ == "__main__":
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for name, fn in FIGURES:
        fig = fn(plt)
        fig.savefig(HERE / f"{name}.png", dpi=120)
        plt.close(fig)
'''


def _rel(path: Path, root: Path) -> str:
    rel = os.path.relpath(path.resolve(), root.resolve())
    if rel.startswith(".."):
        raise SpecificationError(f"{path} lies outside the script directory {root}")
    return Path(rel).as_posix()


def emit_plot_script(reports: Sequence[DenoiseReport], path, overlays=()) -> Path:
    """Write a matplotlib script plotting each run and each overlay.

    A run figure shows clean, noisy and denoised signals above the error
    curve. ``overlays`` holds ``(title, name_a, name_b)`` triples drawing two
    denoised outputs over the clean signal. Every referenced CSV must exist
    and lie inside the script's directory.
    """
    path = Path(path)
    root = path.parent
    root.mkdir(parents=True, exist_ok=True)
    dirs = {}
    for rep in reports:
        if rep.config.out_dir is None:
            raise SpecificationError(f"report {rep.name} has no output directory")
        d = Path(rep.config.out_dir)
        for f in ("clean.csv", "noisy.csv", "denoised.csv", "error.csv"):
            if not (d / f).is_file():
                raise FileNotFoundError(d / f)
        dirs[rep.name] = _rel(d, root)
    body = []
    figures = []
    for i, rep in enumerate(reports):
        d = dirs[rep.name]
        fn = f"run_{i}"
        body.append(
            f"def {fn}(plt):\n"
            f"    clean, noisy, den, err = (load(f'{d}/{{n}}.csv') for n in ('clean', 'noisy', 'denoised', 'error'))\n"
            f"    fig, (top, bot) = plt.subplots(2, 1, sharex=True, figsize=(10, 6))\n"
            f"    top.plot(noisy[:, 0], noisy[:, 1], color='0.75', lw=0.5, label='noisy')\n"
            f"    top.plot(clean[:, 0], clean[:, 1], 'k', lw=1, label='clean')\n"
            f"    top.plot(den[:, 0], den[:, 1], 'C0', lw=1, label='denoised')\n"
            f"    top.set_title({rep.name!r} + ' ({rep.config.describe()}, PSNR {rep.psnr_db:.2f} dB)')\n"
            f"    top.legend(loc='upper right')\n"
            f"    bot.plot(err[:, 0], err[:, 1], 'C3', lw=0.7)\n"
            f"    bot.set_ylabel('denoised - clean')\n"
            f"    return fig\n"
        )
        figures.append((rep.name, fn))
    for j, (title, a, b) in enumerate(overlays):
        if a not in dirs or b not in dirs:
            raise SpecificationError(f"overlay {title!r} references unknown runs")
        fn = f"overlay_{j}"
        body.append(
            f"def {fn}(plt):\n"
            f"    clean = load('{dirs[a]}/clean.csv')\n"
            f"    fig, (top, bot) = plt.subplots(2, 1, sharex=True, figsize=(10, 6))\n"
            f"    top.plot(clean[:, 0], clean[:, 1], 'k', lw=1, label='clean')\n"
            f"    for c, name, d in (('C0', {a!r}, {dirs[a]!r}), ('C1', {b!r}, {dirs[b]!r})):\n"
            f"        den = load(d + '/denoised.csv')\n"
            f"        err = load(d + '/error.csv')\n"
            f"        top.plot(den[:, 0], den[:, 1], c, lw=0.8, label=name)\n"
            f"        bot.plot(err[:, 0], err[:, 1], c, lw=0.6, label=name)\n"
            f"    top.set_title({title!r})\n"
            f"    top.legend(loc='upper right')\n"
            f"    bot.set_ylabel('denoised - clean')\n"
            f"    return fig\n"
        )
        figures.append((f"overlay_{title}", fn))
    text = _PLOT_HEADER
    if body:
        text += "\n" + "\n\n".join(body)
    text += "\n\nFIGURES = [" + ", ".join(f"({n!r}, {f})" for n, f in figures) + "]\n"
    text += _PLOT_MAIN
    path.write_text(text, newline="\n")
    return path


def load_report(path) -> DenoiseReport:
    """Rebuild a report from ``report.json``; its directory becomes ``out_dir``."""
    path = Path(path)
    data = json.loads(path.read_text())
    if data.get("schema") != REPORT_SCHEMA_VERSION:
        raise SpecificationError(f"{path}: unsupported report schema {data.get('schema')!r}")
    cfg = dict(data["config"])
    cfg["bf"] = BfParams(**cfg["bf"])
    cfg["gf"] = GfParams(**cfg["gf"])
    cfg["out_dir"] = str(path.parent)

    def num(d):
        return {k: float(v) for k, v in d.items()}

    return DenoiseReport(
        config=ExperimentConfig(**cfg),
        input_metrics=num(data["input"]),
        output_metrics=num(data["output"]),
        applications=data["applications"],
        wall_time_s=data["wall_time_s"],
        change_rms=data["change_rms"],
        breakdown=data["breakdown"],
        events=data["events"],
        log_path=data["log_path"],
        files=data["files"],
    )
