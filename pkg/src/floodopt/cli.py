"""Command-line front end: configured optimization runs and their artifacts.

Verbs:

* ``run``: execute one algorithm (``fom-enopt``, ``aml-enopt-s``,
  ``aml-enopt-v``) against a deck or an analytic benchmark, writing a
  deterministic trace (``trace.jsonl``), wall-clock data (``timing.json``),
  a summary recomputable from the trace (``summary.json``), the final
  controls (``controls.csv``), per-step production/cashflow series for deck
  objectives (``production.csv``), and for surrogate runs the trace audit
  (``certification.json``).  A run directory containing an ``INCOMPLETE``
  file holds partial artifacts from a failed run.
* ``compare``: side-by-side metrics of two finished runs on the same
  objective (value ratio, full-model-evaluation ratio, wall-time speedup).
* ``validate-deck``: load a deck, report its layout, and exercise a no-flow
  simulation.
* ``emit-plots``: convergence series from a finished run's trace as CSV.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .aml import AmlConfig, aml_enopt, certify
from .controls import ControlBounds, ControlVector, scale_to_unit, unscale_from_unit
from .enopt import CachedObjective, EnOptConfig, ScaledControlObjective, enopt
from .errors import ConfigError, FloodoptError
from .reservoir import (
    analytic_objectives,
    builtin_deck_path,
    load_deck,
    make_fom_objective,
    npv,
    simulate,
)
from .surrogate import TrainerConfig
from .trace import Trace

__all__ = ["RunConfig", "run", "compare", "validate_deck", "emit_plots", "main"]

logger = logging.getLogger(__name__)

ALGORITHMS = ("fom-enopt", "aml-enopt-s", "aml-enopt-v")

#: default per-control-type constants for deck initial guesses
DEFAULT_DECK_INITIAL = {"injector_rate": 700.0, "concentration": 0.5, "producer_rate": 150.0}

INCOMPLETE_MARKER = "INCOMPLETE"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _section(doc: dict, key: str) -> dict:
    value = doc.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {key!r} must be a mapping")
    return dict(value)


def _build_config_object(cls, section: dict, *, what: str):
    try:
        return cls(**section)
    except TypeError as exc:
        raise ConfigError(f"bad {what} section: {exc}") from exc
    except FloodoptError as exc:
        raise ConfigError(f"bad {what} section: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    """One experiment: an objective, an algorithm, its knobs, and a seed.

    ``to_dict``/``from_dict`` are exact inverses for documents produced by
    ``to_dict``, so configs survive a parse/serialize/parse round trip.
    """

    algorithm: str
    deck: str | None = None
    analytic: str | None = None
    name: str = ""
    seed: int = 0
    workers: int = 1
    out_dir: str = ""
    baseline: str | None = None
    initial: Any = None  # mapping (deck) or per-control-type list (analytic)
    enopt: EnOptConfig = field(default_factory=EnOptConfig)
    aml: AmlConfig = field(default_factory=AmlConfig)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if (self.deck is None) == (self.analytic is None):
            raise ConfigError("exactly one of objective.deck / objective.analytic is required")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        target = self.analytic or Path(str(self.deck)).stem.replace("builtin:", "")
        return f"{self.algorithm}-{target}"

    @property
    def variant(self) -> str:
        return "vector" if self.algorithm == "aml-enopt-v" else "scalar"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        known = {
            "name", "algorithm", "objective", "seed", "workers", "out",
            "baseline", "initial", "enopt", "aml",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        objective = _section(doc, "objective")
        deck = objective.get("deck")
        analytic = objective.get("analytic")
        extra = set(objective) - {"deck", "analytic"}
        if extra:
            raise ConfigError(f"unknown objective keys: {sorted(extra)}")
        if deck is not None:
            _resolve_deck_path(str(deck))  # referenced file must exist

        seed = int(doc.get("seed", 0))
        enopt_section = _section(doc, "enopt")
        if "rng_seed" in enopt_section:
            raise ConfigError("set the top-level seed instead of enopt.rng_seed")
        if isinstance(enopt_section.get("sigma"), list):
            enopt_section["sigma"] = tuple(enopt_section["sigma"])
        enopt_cfg = _build_config_object(
            EnOptConfig, {**enopt_section, "rng_seed": seed}, what="enopt"
        )

        aml_section = _section(doc, "aml")
        if "variant" in aml_section:
            raise ConfigError("the surrogate variant is chosen by the algorithm name")
        trainer_section = _section(aml_section, "trainer")
        aml_section.pop("trainer", None)
        if "rng_seed" in trainer_section:
            raise ConfigError("set the top-level seed instead of aml.trainer.rng_seed")
        if "hidden_layers" in aml_section:
            aml_section["hidden_layers"] = tuple(aml_section["hidden_layers"])
        trainer = _build_config_object(TrainerConfig, trainer_section, what="aml.trainer")
        algorithm = str(doc.get("algorithm", ""))
        variant = "vector" if algorithm == "aml-enopt-v" else "scalar"
        aml_cfg = _build_config_object(
            AmlConfig,
            {**aml_section, "variant": variant, "trainer": trainer, "enopt": enopt_cfg},
            what="aml",
        )

        initial = doc.get("initial")
        if isinstance(initial, (list, tuple)):
            initial = tuple(float(v) for v in initial)
        elif isinstance(initial, dict):
            initial = {str(k): float(v) for k, v in initial.items()}
        elif initial is not None:
            raise ConfigError("initial must be a mapping or a per-control-type list")

        return cls(
            algorithm=algorithm,
            deck=None if deck is None else str(deck),
            analytic=None if analytic is None else str(analytic),
            name=str(doc.get("name", "")),
            seed=seed,
            workers=int(doc.get("workers", 1)),
            out_dir=str(doc.get("out", "")),
            baseline=None if doc.get("baseline") is None else str(doc["baseline"]),
            initial=initial,
            enopt=enopt_cfg,
            aml=aml_cfg,
        )

    def to_dict(self) -> dict:
        objective = {"deck": self.deck} if self.deck is not None else {"analytic": self.analytic}
        enopt_doc = dataclasses.asdict(self.enopt)
        enopt_doc.pop("rng_seed")
        enopt_doc["sigma"] = (
            list(self.enopt.sigma) if isinstance(self.enopt.sigma, tuple) else self.enopt.sigma
        )
        trainer_doc = dataclasses.asdict(self.aml.trainer)
        trainer_doc.pop("rng_seed")
        aml_doc = {
            "outer_tolerance": self.aml.outer_tolerance,
            "inner_tolerance": self.aml.inner_tolerance,
            "max_outer": self.aml.max_outer,
            "max_inner": self.aml.max_inner,
            "hidden_layers": list(self.aml.hidden_layers),
            "activation": self.aml.activation,
            "relative_tolerances": self.aml.relative_tolerances,
            "accumulate_training": self.aml.accumulate_training,
            "trainer": trainer_doc,
        }
        doc = {
            "name": self.name,
            "algorithm": self.algorithm,
            "objective": objective,
            "seed": self.seed,
            "workers": self.workers,
            "out": self.out_dir,
            "initial": list(self.initial)
            if isinstance(self.initial, tuple)
            else self.initial,
            "enopt": enopt_doc,
            "aml": aml_doc,
        }
        if self.baseline is not None:
            doc["baseline"] = self.baseline
        return doc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)


def _resolve_deck_path(deck: str) -> Path:
    if deck.startswith("builtin:"):
        return builtin_deck_path(deck.split(":", 1)[1])
    path = Path(deck)
    if not path.exists():
        raise ConfigError(f"deck file {deck!r} does not exist")
    return path


# ---------------------------------------------------------------------------
# objective assembly
# ---------------------------------------------------------------------------


@dataclass
class _Problem:
    objective: Any
    bounds: ControlBounds
    initial: ControlVector
    objective_id: str
    model: Any = None
    econ: Any = None


def _build_problem(cfg: RunConfig) -> _Problem:
    if cfg.deck is not None:
        path = _resolve_deck_path(cfg.deck)
        model, econ = load_deck(path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()[:16]
        constants = dict(DEFAULT_DECK_INITIAL)
        if isinstance(cfg.initial, dict):
            unknown = set(cfg.initial) - set(constants)
            if unknown:
                raise ConfigError(f"unknown initial-guess keys: {sorted(unknown)}")
            constants.update(cfg.initial)
        elif cfg.initial is not None:
            raise ConfigError("deck objectives take a mapping initial guess")
        initial = model.constant_controls(
            constants["injector_rate"],
            constants["concentration"],
            constants["producer_rate"],
        )
        objective = make_fom_objective(model, econ)
        return _Problem(
            objective=objective,
            bounds=objective.bounds,
            initial=initial,
            objective_id=f"deck:{model.name}:{digest}",
            model=model,
            econ=econ,
        )

    problems = analytic_objectives()
    if cfg.analytic not in problems:
        raise ConfigError(
            f"unknown analytic objective {cfg.analytic!r}; "
            f"available: {sorted(problems)}"
        )
    problem = problems[cfg.analytic]
    if isinstance(cfg.initial, tuple):
        if len(cfg.initial) != problem.n_wells:
            raise ConfigError(
                f"initial guess needs {problem.n_wells} per-control-type values"
            )
        initial = problem.control(np.tile(np.asarray(cfg.initial), problem.n_steps))
    elif cfg.initial is None:
        initial = problem.initial_control()
    else:
        raise ConfigError("analytic objectives take a per-control-type list initial guess")
    if not problem.bounds.contains(initial):
        raise ConfigError("initial guess lies outside the objective's bounds")
    return _Problem(
        objective=problem.make_objective(),
        bounds=problem.bounds,
        initial=initial,
        objective_id=f"analytic:{problem.name}",
    )


# ---------------------------------------------------------------------------
# run + artifacts
# ---------------------------------------------------------------------------


def _write_controls_csv(path: Path, control: ControlVector, bounds: ControlBounds) -> None:
    names = bounds.names or tuple(f"c{i}" for i in range(bounds.n_wells))
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["control", "step", "value"])
        matrix = control.as_matrix()
        for step in range(control.n_steps):
            for well in range(control.n_wells):
                writer.writerow([names[well], step, repr(float(matrix[step, well]))])


def _write_production_csv(path: Path, model, econ, control: ControlVector) -> None:
    """Per-step production/injection totals and cashflow, documented order."""
    result = simulate(model, control)
    _, cashflow = npv(result, econ)
    columns = [
        ("time_days", result.times_days),
        ("oil_produced_sm3", result.oil_produced),
        ("water_produced_sm3", result.water_produced),
        ("water_injected_sm3", result.water_injected),
        ("polymer_injected_kg", result.polymer_injected),
        ("polymer_produced_kg", result.polymer_produced),
        ("cashflow_usd", cashflow),
    ]
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([name for name, _ in columns])
        for i in range(len(result.times_days)):
            writer.writerow([repr(float(series[i])) for _, series in columns])


def _summarize_records(records: list[dict], total_wall_s: float | None) -> dict:
    header = records[0]
    result = next(r for r in records if r.get("record") == "result")
    rows = [r for r in records if r.get("record") == "iteration"]
    algorithm = header.get("algorithm", "")
    summary = {
        "algorithm": algorithm,
        "objective": header.get("objective"),
        "objective_id": header.get("objective_id"),
        "status": result.get("status"),
        "final_objective": result.get("objective"),
        "best_objective": result.get("best_objective"),
        "fom_evaluations": result.get("fom_evaluations", result.get("evaluations")),
        "surrogate_evaluations": result.get("surrogate_evaluations", 0),
        "wall_time_s": total_wall_s,
    }
    if algorithm.startswith("aml"):
        summary["outer_iterations"] = result.get("outer_iterations")
        summary["accepted_steps"] = result.get("accepted_steps")
        summary["inner_iterations_total"] = sum(
            int(r.get("inner_iterations", 0)) for r in rows
        )
        surrogate_values = [r["surrogate_value"] for r in rows if "surrogate_value" in r]
        summary["surrogate_objective"] = surrogate_values[-1] if surrogate_values else None
    else:
        summary["iterations"] = result.get("iterations")
    return summary


def _load_run_dir(run_dir: str | Path) -> dict:
    run_dir = Path(run_dir)
    trace_path = run_dir / "trace.jsonl"
    if not trace_path.exists():
        raise ConfigError(f"missing trace file {trace_path}")
    if (run_dir / INCOMPLETE_MARKER).exists():
        raise ConfigError(f"run {run_dir} is marked incomplete")
    records = Trace.from_jsonl(trace_path).records()
    total = None
    timing_path = run_dir / "timing.json"
    if timing_path.exists():
        total = json.loads(timing_path.read_text(encoding="utf-8")).get("total_wall_time_s")
    return _summarize_records(records, total)


def run(cfg: RunConfig, out_dir: str | Path | None = None) -> Path:
    """Execute one configured run, writing artifacts into the run directory.

    Returns the run directory.  On failure an ``INCOMPLETE`` file holding the
    error is left next to whatever artifacts were already written, and the
    exception propagates.
    """
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or f"runs/{cfg.label}"))
    out.mkdir(parents=True, exist_ok=True)
    marker = out / INCOMPLETE_MARKER
    marker.write_text("run in progress\n", encoding="utf-8")
    try:
        (out / "config.used.yaml").write_text(
            yaml.safe_dump(cfg.to_dict(), sort_keys=False), encoding="utf-8"
        )
        problem = _build_problem(cfg)
        t0 = time.perf_counter()
        trace_fields = {"objective_id": problem.objective_id}

        if cfg.algorithm == "fom-enopt":
            scaled = CachedObjective(ScaledControlObjective(problem.objective, problem.bounds))
            x0 = ControlVector(
                scale_to_unit(problem.initial, problem.bounds),
                problem.initial.n_wells,
                problem.initial.n_steps,
            )
            unit_box = ControlBounds.unit(problem.initial.n_wells)
            result = enopt(
                scaled,
                x0,
                cfg.enopt,
                unit_box,
                workers=cfg.workers,
                trace_fields={"algorithm": "fom-enopt", **trace_fields},
                control_to_list=lambda xc: unscale_from_unit(
                    xc.values, problem.bounds
                ).values.tolist(),
            )
            trace = result.trace
            final_control = unscale_from_unit(result.control.values, problem.bounds)
        else:
            aml_cfg = cfg.aml
            result = aml_enopt(
                problem.objective,
                problem.initial,
                aml_cfg,
                problem.bounds,
                workers=cfg.workers,
                trace_fields=trace_fields,
            )
            trace = result.trace
            final_control = result.control

        total_wall = time.perf_counter() - t0
        trace.to_jsonl(out / "trace.jsonl")
        timing = {"total_wall_time_s": total_wall, **trace.timings()}
        (out / "timing.json").write_text(
            json.dumps(timing, indent=2) + "\n", encoding="utf-8"
        )

        summary = _summarize_records(trace.records(), total_wall)
        if cfg.baseline is not None:
            base = _load_run_dir(cfg.baseline)
            if base["objective_id"] != summary["objective_id"]:
                raise ConfigError(
                    f"baseline objective {base['objective_id']!r} does not match "
                    f"this run's {summary['objective_id']!r}"
                )
            summary["baseline"] = {
                "directory": str(cfg.baseline),
                "final_objective": base["final_objective"],
                "fom_evaluations": base["fom_evaluations"],
                "wall_time_s": base["wall_time_s"],
                "objective_ratio": _ratio(summary["final_objective"], base["final_objective"]),
                "fom_evaluation_ratio": _ratio(
                    base["fom_evaluations"], summary["fom_evaluations"]
                ),
                "wall_time_speedup": _ratio(base["wall_time_s"], summary["wall_time_s"]),
            }

        _write_controls_csv(out / "controls.csv", final_control, problem.bounds)
        if problem.model is not None:
            _write_production_csv(
                out / "production.csv", problem.model, problem.econ, final_control
            )
        if cfg.algorithm.startswith("aml"):
            report = certify(trace)
            (out / "certification.json").write_text(
                json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
            )
            summary["certified"] = report.passed

        (out / "summary.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
    except BaseException as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        raise
    marker.unlink()
    logger.info("run complete: %s (status %s)", out, summary.get("status"))
    return out


def _ratio(numerator, denominator):
    if numerator is None or denominator in (None, 0, 0.0):
        return None
    return float(numerator) / float(denominator)


# ---------------------------------------------------------------------------
# compare / validate / plots
# ---------------------------------------------------------------------------


def compare(dir_a: str | Path, dir_b: str | Path, out_path: str | Path | None = None) -> dict:
    """Side-by-side metrics of two finished runs on the same objective."""
    a, b = _load_run_dir(dir_a), _load_run_dir(dir_b)
    if a["objective_id"] != b["objective_id"]:
        raise ConfigError(
            f"runs optimize different objectives: {a['objective_id']!r} vs "
            f"{b['objective_id']!r}"
        )
    report = {
        "objective_id": a["objective_id"],
        "a": {"directory": str(dir_a), **a},
        "b": {"directory": str(dir_b), **b},
        "ratios": {
            "final_objective_b_over_a": _ratio(b["final_objective"], a["final_objective"]),
            "fom_evaluations_a_over_b": _ratio(a["fom_evaluations"], b["fom_evaluations"]),
            "wall_time_speedup_a_over_b": _ratio(a["wall_time_s"], b["wall_time_s"]),
        },
    }
    if out_path is not None:
        Path(out_path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return report


def _format_compare(report: dict) -> str:
    fields = [
        ("algorithm", "algorithm"),
        ("status", "status"),
        ("final_objective", "final objective"),
        ("best_objective", "best objective"),
        ("fom_evaluations", "full-model evaluations"),
        ("surrogate_evaluations", "surrogate evaluations"),
        ("wall_time_s", "wall time (s)"),
    ]
    lines = [f"objective: {report['objective_id']}"]
    width = max(len(label) for _, label in fields)
    for key, label in fields:
        lines.append(
            f"{label:<{width}}  A: {report['a'].get(key)!s:>16}  "
            f"B: {report['b'].get(key)!s:>16}"
        )
    for key, value in report["ratios"].items():
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def validate_deck(path: str | Path) -> dict:
    """Load a deck, report its layout, and exercise a no-flow simulation."""
    model, econ = load_deck(path)
    bounds = model.control_bounds()
    lo, _ = bounds.tiled(model.n_steps)
    result = simulate(model, ControlVector(lo, model.n_control_types, model.n_steps))
    info = {
        "name": model.name,
        "grid": [model.ny, model.nx],
        "cells": model.ny * model.nx,
        "wells": {w.name: w.kind for w in model.wells},
        "control_types": list(model.control_names()),
        "n_controls": model.n_controls,
        "n_steps": model.n_steps,
        "step_days": model.step_days,
        "total_pore_volume_m3": float(model.pore_volume().sum()),
        "initial_water_m3": float(
            (model.pore_volume() * model.initial_saturation_field()).sum()
        ),
        "oil_price": econ.oil_price,
        "lower_bound_run": {
            "water_balance_error": result.water_balance_error,
            "polymer_balance_error": result.polymer_balance_error,
            "n_substeps": result.n_substeps,
        },
    }
    return info


def emit_plots(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Write plot-ready CSV series extracted from a finished run's trace."""
    run_dir = Path(run_dir)
    trace_path = run_dir / "trace.jsonl"
    if not trace_path.exists():
        raise ConfigError(f"missing trace file {trace_path}")
    out = Path(out_dir) if out_dir is not None else run_dir
    out.mkdir(parents=True, exist_ok=True)
    records = Trace.from_jsonl(trace_path).records()
    header = records[0]
    rows = [r for r in records if r.get("record") == "iteration"]
    written = []

    convergence = out / "convergence.csv"
    if header.get("algorithm", "").startswith("aml"):
        columns = [
            "k", "objective", "tilde_objective", "candidate_objective",
            "fom_evaluations", "surrogate_evaluations",
        ]
    else:
        columns = ["k", "objective", "evaluations", "step_scale"]
    with convergence.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])
    written.append(convergence)
    return written


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodopt",
        description="Ensemble optimization of well controls with surrogate acceleration.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a configured optimization run")
    p_run.add_argument("--config", required=True, help="YAML run configuration")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument(
        "--workers", type=int, default=None, help="cap concurrent full-model evaluations"
    )
    p_run.add_argument("--out", default=None, help="run directory (overrides config)")

    p_cmp = sub.add_parser("compare", help="compare two finished runs")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")
    p_cmp.add_argument("--out", default=None, help="also write the report as JSON")

    p_val = sub.add_parser("validate-deck", help="check a deck file and report its layout")
    p_val.add_argument("deck")

    p_plot = sub.add_parser("emit-plots", help="write plot-ready CSV data from a run")
    p_plot.add_argument("run_dir")
    p_plot.add_argument("--out", default=None, help="output directory (defaults to the run)")

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _make_parser().parse_args(argv)
    try:
        if args.verb == "run":
            doc = yaml.safe_load(Path(args.config).read_text(encoding="utf-8"))
            if not isinstance(doc, dict):
                raise ConfigError(f"config {args.config} must be a mapping")
            if args.seed is not None:
                doc["seed"] = args.seed
            if args.workers is not None:
                doc["workers"] = args.workers
            if args.out is not None:
                doc["out"] = args.out
            cfg = RunConfig.from_dict(doc)
            out = run(cfg)
            print(out)
        elif args.verb == "compare":
            report = compare(args.run_a, args.run_b, args.out)
            print(_format_compare(report))
        elif args.verb == "validate-deck":
            info = validate_deck(args.deck)
            print(json.dumps(info, indent=2))
        elif args.verb == "emit-plots":
            for path in emit_plots(args.run_dir, args.out):
                print(path)
    except FloodoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
