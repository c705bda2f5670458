"""Command line interface: ``cgsmooth {generate,denoise,suite,sweep,plot}``.

Exit status is 0 on success, 1 on a usage or input error and 2 when a
numerical breakdown occurred (outputs up to the breakdown are written).

Options can also come from ``--config FILE``, a flat ``key=value`` file whose
keys are the long option names (``sigma-d=0.4`` or ``sigma_d=0.4``); blank
lines and ``#`` comments are ignored. Command-line flags win over the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    ExperimentConfig,
    emit_plot_script,
    load_clean,
    load_report,
    run_experiment,
    run_suite,
    sweep_schedules,
)
from .graph_operators import BfParams, GfParams
from .signal_core import NoiseSpec, add_noise, write_signal_csv

log = logging.getLogger("cgsmooth")

EXIT_OK, EXIT_USAGE, EXIT_BREAKDOWN = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; 2 is reserved for breakdowns here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def int_range(text: str) -> list:
    """``"7"``, ``"3:11"`` (inclusive) or ``"3,5,8"``."""
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer range: {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"range must be non-empty and positive: {text!r}")
    return values


def _method(text):
    if text not in ("iterate", "cg", "cg-restart"):
        raise argparse.ArgumentTypeError(f"invalid method {text!r}")
    return text


# dest -> (flag, type, default, help)
COMMON = {
    "filter": ("--filter", str, "bf", "bf or gf"),
    "method": ("--method", _method, "iterate", "iterate, cg or cg-restart"),
    "sigma_d": ("--sigma-d", float, 0.5, "BF spatial scale"),
    "sigma_r": ("--sigma-r", float, 0.1, "BF range scale"),
    "half_width": ("--half-width", int, 2, "BF half-bandwidth b"),
    "epsilon": ("--epsilon", float, 1e-3, "GF regularizer"),
    "rho": ("--rho", int, 1, "GF window radius"),
    "iters": ("--iters", int, 10, "sweeps for --method iterate"),
    "kmax": ("--kmax", int, 5, "operator applications per CG cycle"),
    "lmax": ("--lmax", int, 1, "CG restarts for --method cg-restart"),
    "guidance": ("--guidance", str, "self", "self, clean or file:PATH"),
    "freeze": ("--freeze", str, "restart", "rebuild weights at each restart or each step"),
    "noise_var": ("--noise-var", float, 0.01, "noise variance"),
    "seed": ("--seed", int, 0, "noise seed"),
    "length": ("--length", int, 4730, "length of the built-in clean signal"),
    "input": ("--input", str, None, "clean signal CSV instead of the built-in one"),
    "name": ("--name", str, "run", "run name used in reports"),
}

SUBCOMMAND_KEYS = {
    "generate": ("noise_var", "seed", "length", "input"),
    "denoise": tuple(COMMON),
    "suite": ("noise_var", "seed", "length", "freeze"),
    "sweep": tuple(COMMON),
    "plot": (),
}

SWEEP_TYPES = {"kmax": int_range, "lmax": int_range}
DEFAULT_OUT = {"generate": "out/signals", "denoise": "out/run", "suite": "out/suite",
               "sweep": "out/sweep", "plot": "out/suite"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cgsmooth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "generate": "write the clean and noisy signals",
        "denoise": "run one denoising experiment",
        "suite": "run the four iterated-vs-CG pairs",
        "sweep": "grid over restart schedules (--lmax/--kmax take A:B or A,B,C)",
        "plot": "write a plot script for the runs found under --out",
    }
    for name, keys in SUBCOMMAND_KEYS.items():
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        for key in keys:
            flag, typ, default, text = COMMON[key]
            if name == "sweep" and key in SWEEP_TYPES:
                typ = SWEEP_TYPES[key]
                text += " (range)"
            p.add_argument(flag, dest=key, type=typ, default=None, help=f"{text} [default {default}]")
        p.add_argument("--out", type=Path, default=None, help=f"output directory [default {DEFAULT_OUT[name]}]")
        if keys:
            p.add_argument("--config", type=Path, default=None, help="flat key=value option file")
    return parser


def read_config_file(path: Path, allowed) -> dict:
    values = {}
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in allowed and key != "out":
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        values[key] = value
    return values


def resolve(args, command: str) -> dict:
    """Defaults, then the config file, then explicit flags."""
    keys = SUBCOMMAND_KEYS[command]
    opts = {k: COMMON[k][2] for k in keys}
    opts["out"] = Path(DEFAULT_OUT[command])
    if command == "sweep":
        opts["kmax"], opts["lmax"] = [5], [1]
    cfg_path = getattr(args, "config", None)
    if cfg_path is not None:
        for key, text in read_config_file(cfg_path, keys).items():
            if key == "out":
                opts["out"] = Path(text)
                continue
            typ = SWEEP_TYPES.get(key, COMMON[key][1]) if command == "sweep" else COMMON[key][1]
            try:
                opts[key] = typ(text)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{cfg_path}: bad value for {key}: {exc}")
    for key in list(keys) + ["out"]:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def experiment_config(opts: dict, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(
        filter=opts["filter"],
        method=opts["method"],
        bf=BfParams(opts["sigma_d"], opts["sigma_r"], opts["half_width"]),
        gf=GfParams(opts["epsilon"], opts["rho"]),
        iterations=opts["iters"],
        k_max=opts["kmax"] if isinstance(opts["kmax"], int) else opts["kmax"][0],
        l_max=opts["lmax"] if isinstance(opts["lmax"], int) else opts["lmax"][0],
        guidance=opts["guidance"],
        freeze=opts["freeze"],
        noise_var=opts["noise_var"],
        seed=opts["seed"],
        length=opts["length"],
        input_path=opts["input"],
        out_dir=str(opts["out"]),
        name=opts["name"],
    )
    return replace(cfg, **overrides) if overrides else cfg


def cmd_generate(opts) -> int:
    cfg = ExperimentConfig(noise_var=opts["noise_var"], seed=opts["seed"], length=opts["length"],
                           input_path=opts["input"])
    clean = load_clean(cfg)
    noisy = add_noise(clean, NoiseSpec(cfg.noise_var, cfg.seed))
    out = opts["out"]
    out.mkdir(parents=True, exist_ok=True)
    write_signal_csv(clean, out / "clean.csv")
    write_signal_csv(noisy, out / "noisy.csv")
    print(f"wrote {out / 'clean.csv'} and {out / 'noisy.csv'} ({len(clean)} samples)")
    return EXIT_OK


def cmd_denoise(opts) -> int:
    rep = run_experiment(experiment_config(opts))
    print(f"{rep.config.filter} {rep.config.describe()}: applications={rep.applications} "
          f"PSNR {rep.input_metrics['psnr_db']:.3f} -> {rep.output_metrics['psnr_db']:.3f} dB "
          f"SNR {rep.input_metrics['snr_db']:.3f} -> {rep.output_metrics['snr_db']:.3f} dB "
          f"({rep.wall_time_s:.3f} s)")
    for e in rep.events:
        log.warning(e)
    print(f"outputs in {opts['out']}")
    return EXIT_BREAKDOWN if rep.breakdown else EXIT_OK


def cmd_suite(opts) -> int:
    summary = run_suite(opts["out"], seed=opts["seed"], noise_var=opts["noise_var"],
                              length=opts["length"], freeze=opts["freeze"])
    sys.stdout.write(summary.table())
    print(f"outputs in {opts['out']}")
    if summary.failures:
        return EXIT_BREAKDOWN
    return EXIT_BREAKDOWN if any(r.breakdown for r in summary.reports) else EXIT_OK


def cmd_sweep(opts) -> int:
    base = experiment_config(opts, method="cg-restart", out_dir=None)
    out = opts["out"] / "sweep.csv"
    rows = sweep_schedules(base, opts["lmax"], opts["kmax"], out)
    print(f"{'l_max':>5} {'k_max':>5} {'apps':>5} {'PSNR':>8}")
    for l, k, apps, psnr, _ in rows[:10]:
        print(f"{l:>5} {k:>5} {apps:>5} {psnr:>8.3f}")
    print(f"{len(rows)} cells written to {out}")
    return EXIT_OK


def cmd_plot(opts) -> int:
    root = opts["out"]
    paths = sorted(root.rglob("report.json"))
    reports = [load_report(p) for p in paths]
    script = emit_plot_script(reports, root / "plot.py")
    print(f"wrote {script} covering {len(reports)} run(s)")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "denoise": cmd_denoise, "suite": cmd_suite,
            "sweep": cmd_sweep, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        opts = resolve(args, args.command)
        return COMMANDS[args.command](opts)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        # SpecificationError and DimensionError are ValueErrors
        print(f"cgsmooth {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
