"""Batch front end: configuration parsing, dataset dispatch, artifact emission.

One ``run`` produces, per response, a result file with the full search log, a
quality report, a sensitivity report, the serialized winning model and two
plot-ready TSV files.  Every artifact embeds the seeds and a hash of the
resolved configuration, and reruns with the same configuration are
byte-identical.  ``evaluate`` applies a previously saved model to new points.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmarks import BUILTIN_TABLES, make_table
from .dataset import load_csv
from .engine import MODEL_KINDS, SearchBounds, find_mop, trainer_for
from .errors import DimensionMismatch, MalformedCell, MopkitError, NoFeasibleModel
from .mls import MlsModel
from .polyreg import PolynomialModel
from .quality import cross_validation_predictions

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NO_MODEL = 4

_SURFACE_GRID = 41


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved settings of one batch run."""

    input: str
    responses: list = field(default_factory=lambda: ["y"])
    samples: int = 500                      # builtin benchmarks only
    scheme: dict = field(default_factory=lambda: {"kind": "cross_validation", "q": 5})
    quantiles: list = field(default_factory=lambda: list(SearchBounds().quantiles))
    coi_grid: list = field(default_factory=lambda: list(SearchBounds().coi_grid))
    kinds: list = field(default_factory=lambda: list(MODEL_KINDS))
    delta_cop: float = 0.03
    seeds: dict = field(default_factory=lambda: {"sampling": 0, "analysis": 0})
    index_samples: int = 10000
    output_dir: str = "mop_out"

    _FIELDS = ("input", "responses", "samples", "scheme", "quantiles", "coi_grid",
               "kinds", "delta_cop", "seeds", "index_samples", "output_dir")

    def validate(self):
        if not self.input:
            raise ConfigError("input: a CSV path or builtin name is required")
        if not self.responses:
            raise ConfigError("responses: at least one response name is required")
        kind = self.scheme.get("kind")
        if kind == "cross_validation":
            q = self.scheme.get("q")
            if not isinstance(q, int) or not 2 <= q <= 10:
                raise ConfigError("scheme.q: must be an integer in [2, 10]")
        elif kind == "split":
            fraction = self.scheme.get("train_fraction")
            if not isinstance(fraction, (int, float)) or not 0 < fraction < 1:
                raise ConfigError("scheme.train_fraction: must lie in (0, 1)")
        else:
            raise ConfigError("scheme.kind: must be 'cross_validation' or 'split'")
        if self.samples < 1:
            raise ConfigError("samples: must be at least 1")
        if self.delta_cop < 0:
            raise ConfigError("delta_cop: must be non-negative")
        if self.index_samples < 1000:
            raise ConfigError("index_samples: must be at least 1000")
        for key in ("sampling", "analysis"):
            if not isinstance(self.seeds.get(key), int):
                raise ConfigError(f"seeds.{key}: must be an integer")
        try:
            self.search_bounds()
        except ValueError as exc:
            raise ConfigError(f"search bounds: {exc}") from exc
        return self

    def search_bounds(self):
        return SearchBounds(tuple(self.quantiles), tuple(self.coi_grid),
                            tuple(self.kinds))

    def to_dict(self):
        return {name: getattr(self, name) for name in self._FIELDS}

    def hash(self):
        # output_dir determines where artifacts land, not what they contain
        payload = {k: v for k, v in self.to_dict().items() if k != "output_dir"}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_config(path, overrides):
    payload = {}
    if path is not None:
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        unknown = set(payload) - set(RunConfig._FIELDS)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
    payload.update({k: v for k, v in overrides.items() if v is not None})
    if "input" not in payload:
        raise ConfigError("input: a CSV path or builtin name is required")
    try:
        return RunConfig(**payload).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _resolve_table(config):
    if config.input in BUILTIN_TABLES:
        table = make_table(config.input, config.samples, config.seeds["sampling"])
        missing = [r for r in config.responses if r not in table.responses]
        if missing:
            raise ConfigError(f"builtin {config.input!r} has no response "
                              f"{missing[0]!r} (it provides 'y')")
        return table
    return load_csv(config.input, config.responses)


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path, payload):
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_tsv(path, header, rows):
    lines = ["\t".join(header)]
    lines += ["\t".join(repr(float(v)) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _surface_rows(result, table):
    """Grid of winner predictions over the two most influential retained
    variables, the remaining ones pinned at their sample means."""
    projected = table.project(list(result.retained_variables))
    ranked = sorted(result.retained_names,
                    key=lambda name: -result.sensitivity.per_variable[name]["total_index_scaled"])
    names = list(projected.input_names)
    axes = [names.index(n) for n in ranked[:2]]
    base = projected.inputs.mean(axis=0)

    grids = []
    for axis in axes:
        column = projected.inputs[:, axis]
        grids.append(np.linspace(column.min(), column.max(), _SURFACE_GRID))
    rows = []
    if len(axes) == 1:
        points = np.tile(base, (_SURFACE_GRID, 1))
        points[:, axes[0]] = grids[0]
        predictions = result.model.predict(points)
        rows = np.column_stack([grids[0], predictions])
        header = [ranked[0], "prediction"]
    else:
        aa, bb = np.meshgrid(grids[0], grids[1], indexing="ij")
        points = np.tile(base, (aa.size, 1))
        points[:, axes[0]] = aa.ravel()
        points[:, axes[1]] = bb.ravel()
        predictions = result.model.predict(points)
        rows = np.column_stack([aa.ravel(), bb.ravel(), predictions])
        header = [ranked[0], ranked[1], "prediction"]
    return header, rows


def _emit_artifacts(config, table, response, result, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    stamp = {"config_hash": config.hash(), "seeds": config.seeds}

    _write_json(out_dir / "mop_result.json",
                {**result.to_dict(), **stamp, "response": response})
    _write_json(out_dir / "quality_report.json",
                {**result.quality.to_dict(), **stamp, "response": response})
    _write_json(out_dir / "sensitivity.json",
                {**result.sensitivity.to_dict(), **stamp, "response": response})
    _write_json(out_dir / "model.json",
                {"response": response, "variable_names": list(result.retained_names),
                 "model": result.model.to_dict(), **stamp})

    projected = table.project(list(result.retained_variables))
    q = config.scheme["q"] if config.scheme["kind"] == "cross_validation" else 5
    pooled = cross_validation_predictions(
        projected, response, trainer_for(result.model_kind, config.seeds["analysis"]),
        q=q, seed=config.seeds["analysis"])
    truth = table.response(response)
    _write_tsv(out_dir / "predicted_vs_true.tsv", ["y_true", "y_predicted"],
               np.column_stack([truth, pooled]))

    header, rows = _surface_rows(result, table)
    _write_tsv(out_dir / "mop_surface.tsv", header, rows)


def run(config):
    """Execute one batch run; returns a process exit code."""
    table = _resolve_table(config)
    scheme = dict(config.scheme)
    scheme["seed"] = config.seeds["analysis"]
    for response in config.responses:
        result = find_mop(
            table, response,
            search=config.search_bounds(),
            q=scheme.get("q", 5),
            seed=config.seeds["analysis"],
            delta_cop=config.delta_cop,
            index_samples=config.index_samples,
            scheme=scheme,
        )
        out_dir = Path(config.output_dir) / response
        _emit_artifacts(config, table, response, result, out_dir)
        log.info("response %r: winner %s on %s, CoP %.4f -> %s", response,
                 result.model_kind, list(result.retained_names), result.cop, out_dir)
    return EXIT_OK


def _load_model(path):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    model_payload = payload["model"]
    if model_payload["kind"] == "polynomial":
        model = PolynomialModel.from_dict(model_payload)
    elif model_payload["kind"] == "mls":
        model = MlsModel.from_dict(model_payload)
    else:
        raise ConfigError(f"unknown model kind {model_payload['kind']!r}")
    return model, payload["variable_names"], payload.get("response", "y")


def evaluate(model_path, points_path, output_path=None):
    """Append model predictions to a points table; returns an exit code."""
    model, names, response = _load_model(model_path)
    with open(points_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if any(cell.strip() for cell in row)]

    prediction_column = f"{response}_predicted"
    if not rows:
        output_lines = []
    else:
        header = [h.strip() for h in rows[0]]
        missing = [n for n in names if n not in header]
        if missing:
            raise DimensionMismatch(len(names), len(header) - len(missing), names)
        positions = [header.index(n) for n in names]
        output_lines = [",".join(header + [prediction_column])]
        if len(rows) > 1:
            points = np.empty((len(rows) - 1, len(names)))
            for r, row in enumerate(rows[1:], start=1):
                for c, pos in enumerate(positions):
                    try:
                        points[r - 1, c] = float(row[pos])
                    except (ValueError, IndexError):
                        raise MalformedCell(r, names[c],
                                            row[pos] if pos < len(row) else "") from None
            predictions = model.predict(points)
            for row, value in zip(rows[1:], np.atleast_1d(predictions)):
                output_lines.append(",".join(list(row) + [repr(float(value))]))

    text = "\n".join(output_lines) + ("\n" if output_lines else "")
    if output_path is None:
        sys.stdout.write(text)
    else:
        _atomic_write(output_path, text)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mopkit",
        description="Select the best-prognosis metamodel for a sampled dataset "
                    "and report scaled total-effect sensitivities.")
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="search for the optimal metamodel")
    runp.add_argument("--config", help="JSON configuration file")
    runp.add_argument("--input", help=f"CSV path or builtin name "
                                      f"({', '.join(sorted(BUILTIN_TABLES))})")
    runp.add_argument("--responses", help="comma-separated response column names")
    runp.add_argument("--samples", type=int, help="sample count for builtin inputs")
    runp.add_argument("--q", type=int, help="cross-validation subset count")
    runp.add_argument("--split-fraction", type=float,
                      help="use a train/test split with this training fraction")
    runp.add_argument("--delta-cop", type=float, help="simplification allowance")
    runp.add_argument("--sampling-seed", type=int)
    runp.add_argument("--analysis-seed", type=int)
    runp.add_argument("--index-samples", type=int,
                      help="base sample count for sensitivity estimation")
    runp.add_argument("--output-dir")

    evalp = sub.add_parser("evaluate", help="apply a saved model to new points")
    evalp.add_argument("--model", required=True, help="model.json from a run")
    evalp.add_argument("--points", required=True, help="CSV of query points")
    evalp.add_argument("--output", help="output CSV path (default: stdout)")
    return parser


def _overrides_from_args(args):
    overrides = {
        "input": args.input,
        "samples": args.samples,
        "delta_cop": args.delta_cop,
        "index_samples": args.index_samples,
        "output_dir": args.output_dir,
    }
    if args.responses is not None:
        overrides["responses"] = [r.strip() for r in args.responses.split(",") if r.strip()]
    if args.q is not None and args.split_fraction is not None:
        raise ConfigError("--q and --split-fraction are mutually exclusive")
    if args.q is not None:
        overrides["scheme"] = {"kind": "cross_validation", "q": args.q}
    if args.split_fraction is not None:
        overrides["scheme"] = {"kind": "split", "train_fraction": args.split_fraction}
    seeds = {}
    if args.sampling_seed is not None:
        seeds["sampling"] = args.sampling_seed
    if args.analysis_seed is not None:
        seeds["analysis"] = args.analysis_seed
    if seeds:
        overrides["seeds"] = {"sampling": 0, "analysis": 0, **seeds}
    return overrides


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = load_config(args.config, _overrides_from_args(args))
            return run(config)
        return evaluate(args.model, args.points, args.output)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NoFeasibleModel as exc:
        log.error("no feasible model: %s", exc)
        return EXIT_NO_MODEL
    except (MopkitError, OSError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
