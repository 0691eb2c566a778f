"""Command-line front end: ``schedvae <command> [options]``.

Exit codes: 0 ok, 1 usage or configuration error, 2 data error,
3 numeric divergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from . import ingest, oracle
from .encoding import EncodingError, check_step
from .evaluation import EvalReport, evaluate, write_report
from .pipeline import DivergenceError, generate, train
from .samplefile import SampleFileError, read_sample, write_sample
from .schedule import ScheduleError, ScheduleSample
from .tensor.checkpoint import CheckpointError
from .vae import CheckpointMismatch, ConfigError, ModelConfig, VaeModel

log = logging.getLogger("schedvae")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
PRESET_DIR = Path(__file__).parent / "presets"
SWEEP_STEPS = (5, 10, 15, 20, 30, 60, 120)

DATA_ERRORS = (
    SampleFileError, ingest.IngestError, EncodingError, ScheduleError, oracle.GrammarError,
    CheckpointError, CheckpointMismatch, FileNotFoundError, IsADirectoryError,
)


class UsageError(Exception):
    pass


# configuration


@dataclass
class TrainSettings:
    patience: int = 10
    min_delta: float = 1e-4
    max_epochs: int = 200
    val_fraction: float = 0.1


@dataclass
class RunConfig:
    model: ModelConfig
    train: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0
    runs: int = 5
    data: str = ""
    oracle_spec: str = ""
    oracle_n: int = 0
    plots: bool = True


def preset_path(name: str) -> Path:
    return PRESET_DIR / f"{name}.cfg"


def load_config(path: str | Path | None = None, preset: str | None = None,
                overrides: Sequence[str] = ()) -> RunConfig:
    """Read a config file (or a shipped preset) and apply ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if path is not None:
        p = Path(path)
        if not p.is_file():
            shipped = preset_path(str(path))
            if not shipped.is_file():
                raise UsageError(f"config {path} not found")
            p = shipped
        cp.read(p)
    elif preset is not None:
        cp.read_dict({"model": {"preset": preset}})
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise UsageError(f"override {item!r} must look like section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp[section][name] = value
    if "model" not in cp:
        raise UsageError("config needs a [model] section")
    try:
        model = ModelConfig.from_mapping(dict(cp["model"]))
        tr = cp["train"] if "train" in cp else {}
        settings = TrainSettings(
            int(tr.get("patience", 10)),
            float(tr.get("min_delta", 1e-4)),
            int(tr.get("max_epochs", 200)),
            float(tr.get("val_fraction", 0.1)),
        )
        ex = cp["experiment"] if "experiment" in cp else {}
        return RunConfig(
            model,
            settings,
            int(ex.get("seed", 0)),
            int(ex.get("runs", 5)),
            ex.get("data", ""),
            ex.get("oracle_spec", ""),
            int(ex.get("oracle_n", 0)),
            str(ex.get("plots", "yes")).lower() in ("1", "yes", "true", "on"),
        )
    except (ConfigError, ValueError) as e:
        raise UsageError(f"bad configuration: {e}") from None


def run_seeds(master: int, runs: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(master).generate_state(runs)]


def load_real(cfg: RunConfig) -> ScheduleSample:
    if cfg.data:
        return read_sample(cfg.data)
    if cfg.oracle_n > 0:
        spec = oracle.GrammarSpec.load(cfg.oracle_spec or oracle.DEFAULT_SPEC)
        return oracle.draw_sample(spec, cfg.oracle_n, cfg.seed)
    raise UsageError("experiment needs [experiment] data=<sample> or oracle_n=<count>")


# experiment and sweep


def _fit_generate_evaluate(model_cfg, settings, train_s, val_s, real, seed, out: Path | None, plots):
    model, report = train(
        model_cfg, train_s, val_s, seed,
        patience=settings.patience, min_delta=settings.min_delta,
        max_epochs=settings.max_epochs, log=log.debug,
    )
    gen = generate(model, len(real), seed)
    ev = evaluate(real, gen.sample, training=train_s, degenerate=gen.degenerate)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "model.ckpt")
        (out / "train.csv").write_text(report.to_csv())
        write_sample(gen.sample, out / "synthetic.txt")
        write_report(ev, real, gen.sample, out, plots=plots)
    return ev


def summarize(reports: Sequence[EvalReport]) -> str:
    """Mean and sample standard deviation per summary metric across runs."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "name", "unit", "mean", "std"] + [f"run_{i}" for i in range(len(reports))])
    for i, (level, name, _, unit) in enumerate(reports[0].summary_rows()):
        vals = np.array([r.summary_rows()[i][2] for r in reports], dtype=np.float64)
        std = f"{vals.std(ddof=1):.6f}" if len(vals) > 1 else ""
        w.writerow([level, name, unit, f"{vals.mean():.6f}", std] + [f"{v:.6f}" for v in vals])
    return buf.getvalue()


def run_experiment(cfg: RunConfig, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    real = load_real(cfg)
    train_s, val_s = ingest.split_train_val(real, 1 - cfg.train.val_fraction, cfg.seed)
    reports = []
    for i, seed in enumerate(run_seeds(cfg.seed, cfg.runs)):
        log.info("run %d/%d (seed %d)", i + 1, cfg.runs, seed)
        try:
            reports.append(_fit_generate_evaluate(
                cfg.model, cfg.train, train_s, val_s, real, seed, out / f"run_{i}", cfg.plots,
            ))
        except DivergenceError as e:
            raise DivergenceError(f"run {i} (seed {seed}): {e}") from None
    (out / "summary.csv").write_text(summarize(reports))
    (out / "config.cfg").write_text(cfg.model.to_text())
    return out / "summary.csv"


RANK_METRICS = {
    "participations": ("domain", "participations", False),
    "transitions": ("domain", "transitions", False),
    "timing": ("domain", "timing", False),
    "validity": ("validity", "combined", False),
    "creativity": ("creativity", "creativity", False),
}


def rank_table(values: dict[str, Sequence[float]]) -> dict[str, list[int]]:
    """Rank each metric's values ascending (lower is better); ties share the lowest rank."""
    return {k: rankdata(np.round(np.asarray(v, float), 12), method="min").astype(int).tolist()
            for k, v in values.items()}


def step_size_sweep(cfg: RunConfig, steps: Sequence[int], out_dir: str | Path) -> Path:
    if cfg.model.kind != "discrete":
        raise UsageError("the step-size sweep needs a discrete model preset")
    steps = [check_step(s) for s in steps]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    real = load_real(cfg)
    train_s, val_s = ingest.split_train_val(real, 1 - cfg.train.val_fraction, cfg.seed)
    metrics: dict[str, list[float]] = {k: [] for k in RANK_METRICS}
    for step in steps:
        log.info("step %d min", step)
        ev = _fit_generate_evaluate(
            cfg.model.with_(step=step), cfg.train, train_s, val_s, real, cfg.seed,
            out / f"step_{step}", cfg.plots,
        )
        lookup = {(lvl, name): v for lvl, name, v, _ in ev.summary_rows()}
        for k, key in RANK_METRICS.items():
            metrics[k].append(lookup[key[:2]])
    ranks = rank_table(metrics)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric"] + [f"{s}min" for s in steps])
    for k in RANK_METRICS:
        w.writerow([k] + ranks[k])
    (out / "ranks.csv").write_text(buf.getvalue())
    return out / "ranks.csv"


# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _cmd_ingest(a):
    labels = ingest.read_labelmap(a.labels) if a.labels else None
    sample, dropped = ingest.diaries_to_sample(ingest.read_diaries(a.diaries), labels, str(a.diaries))
    if a.clean:
        sample, rep = ingest.clean(sample)
        log.info("cleaned: dropped %d, merged %d", rep.dropped, rep.merged)
    write_sample(sample, a.out)
    log.info("wrote %d schedules (%d days dropped)", len(sample), dropped)


def _cmd_oracle(a):
    spec = oracle.GrammarSpec.load(a.spec)
    write_sample(oracle.draw_sample(spec, a.n, a.seed), a.out)


def _cmd_train(a):
    cfg = load_config(a.config, overrides=a.set)
    sample = read_sample(a.data)
    train_s, val_s = ingest.split_train_val(sample, 1 - cfg.train.val_fraction, a.seed)
    model, report = train(
        cfg.model, train_s, val_s, a.seed,
        patience=cfg.train.patience, min_delta=cfg.train.min_delta,
        max_epochs=cfg.train.max_epochs, log=log.info,
    )
    model.save(a.out)
    if a.report:
        Path(a.report).write_text(report.to_csv(timings=True))
    log.info("best epoch %d, val %.4f (%s)", report.best_epoch, report.best_val, report.stop_reason)


def _cmd_generate(a):
    gen = generate(Path(a.ckpt), a.n, a.seed)
    write_sample(gen.sample, a.out)
    log.info("generated %d schedules, %d degenerate", len(gen.sample), gen.degenerate)


def _cmd_evaluate(a):
    real = read_sample(a.real)
    syn = read_sample(a.syn)
    training = read_sample(a.train) if a.train else None
    rep = evaluate(real, syn, training, a.degenerate)
    write_report(rep, real, syn, a.out, plots=not a.no_plots)
    sys.stdout.write(rep.summary_csv())


def _cmd_experiment(a):
    cfg = load_config(a.config, overrides=a.set)
    if a.runs is not None:
        cfg.runs = a.runs
    if a.seed is not None:
        cfg.seed = a.seed
    path = run_experiment(cfg, a.out)
    sys.stdout.write(path.read_text())


def _cmd_sweep(a):
    cfg = load_config(a.config, overrides=a.set)
    steps = [int(s) for s in a.steps.split(",")] if a.steps else list(SWEEP_STEPS)
    path = step_size_sweep(cfg, steps, a.out)
    sys.stdout.write(path.read_text())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schedvae", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="diary CSV -> sample file")
    s.add_argument("--diaries", required=True)
    s.add_argument("--labels")
    s.add_argument("--clean", action="store_true", help="drop non-home-based, merge repeats")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_ingest)

    s = sub.add_parser("oracle", help="draw from a schedule grammar")
    s.add_argument("--spec", default=str(oracle.DEFAULT_SPEC))
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_oracle)

    for name, func, helptext in (
        ("train", _cmd_train, "fit a model"),
        ("experiment", _cmd_experiment, "train, generate and evaluate over several runs"),
        ("sweep", _cmd_sweep, "discrete step-size ranking"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="config file or preset name")
        s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
        s.add_argument("--out", required=True)
        s.set_defaults(func=func)
        if name == "train":
            s.add_argument("--data", required=True)
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--report")
        elif name == "experiment":
            s.add_argument("--runs", type=int)
            s.add_argument("--seed", type=int)
        else:
            s.add_argument("--steps", help="comma-separated minutes")

    s = sub.add_parser("generate", help="sample schedules from a checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("-n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_generate)

    s = sub.add_parser("evaluate", help="compare a synthetic sample with a real one")
    s.add_argument("--real", required=True)
    s.add_argument("--syn", required=True)
    s.add_argument("--train", help="training sample for validity/creativity (default: real)")
    s.add_argument("--degenerate", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(func=_cmd_evaluate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"schedvae: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(message)s",
    )
    try:
        args.func(args)
    except UsageError as e:
        print(f"schedvae: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as e:
        print(f"schedvae: numeric divergence: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except DATA_ERRORS as e:
        print(f"schedvae: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
