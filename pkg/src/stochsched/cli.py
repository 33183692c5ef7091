"""Command-line front end: JSON experiment configs in, CSV/JSONL tables out.

Config schema (JSON object with two keys)::

    {
      "problem": {
        "alphabet": {"a": 1, "b": 3},              # symbol -> integer time
        "machines": ["1", "2"],                    # speeds: "1.5", "3/2", or numbers
        "process": {                               # one of three kinds
          "kind": "iid", "probs": {"a": "1/2", "b": "1/2"}
          # {"kind": "markov", "symbols": [...], "transition": [[...]],
          #  "initial": [...] | "stationary"}
          # {"kind": "mixture", "components":
          #     [{"weight": "1/2", "process": {...}}, ...]}
        }
      },
      "experiment": {"kind": "<subcommand>", ...}  # parameters per kind below
    }

Experiment parameters:

    validate       (none)
    scan           alpha_grid, n_grid, [delta=1e-3], [workers=1]
    achievability  gamma, n_grid, [scheduler="eft"], [budget=2000000]
    converse       gap, n_grid
    second-order   epsilon, n_grid
    average-case   n, trials, [scheduler="eft"]
    cost           n, alpha, [scheduler="brute-force"], [budget=2000000]

All kinds accept "master_seed" (default 0; --seed overrides).  Rational
parameters accept "p/q", decimal strings, or numbers; speeds and
probabilities given as strings are parsed exactly.  Exit codes: 0 success,
2 configuration problem, 3 budget exceeded, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import JobAlphabet, MachineSet, SchedulingProblem, as_fraction
from .errors import ConfigError, DomainError, NumericError, ResourceError
from .schedulers import (
    BruteForce,
    EarliestFinishTime,
    LPT,
    ThresholdDiscardSet,
    cost_exact,
    discard_probability,
)
from .second_order import second_order_table
from .spectrum import (
    achievability_experiment,
    average_case_bracket,
    converse_experiment,
    ebar_theoretical,
    ebar_underline_theoretical,
    spectral_scan,
    strong_converse_holds,
)
from .stochastic import IIDModel, MarkovModel, MixtureModel, stationary_distribution

EXPERIMENT_KINDS = (
    "validate",
    "scan",
    "achievability",
    "converse",
    "second-order",
    "average-case",
    "cost",
)

_SCHEDULERS = {
    "eft": EarliestFinishTime,
    "lpt": LPT,
    "brute-force": BruteForce,
}

# name -> (parser tag, required, default); grids are tuples after parsing
_PARAM_SPECS: dict[str, dict[str, tuple[str, bool, object]]] = {
    "validate": {},
    "scan": {
        "alpha_grid": ("fraction_list", True, None),
        "n_grid": ("int_list", True, None),
        "delta": ("float", False, 1e-3),
        "workers": ("int", False, 1),
    },
    "achievability": {
        "gamma": ("fraction", True, None),
        "n_grid": ("int_list", True, None),
        "scheduler": ("scheduler", False, "eft"),
        "budget": ("int", False, 2_000_000),
    },
    "converse": {
        "gap": ("fraction", True, None),
        "n_grid": ("int_list", True, None),
    },
    "second-order": {
        "epsilon": ("float", True, None),
        "n_grid": ("int_list", True, None),
    },
    "average-case": {
        "n": ("int", True, None),
        "trials": ("int", True, None),
        "scheduler": ("scheduler", False, "eft"),
    },
    "cost": {
        "n": ("int", True, None),
        "alpha": ("fraction", True, None),
        "scheduler": ("scheduler", False, "brute-force"),
        "budget": ("int", False, 2_000_000),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: SchedulingProblem
    kind: str
    params: dict
    master_seed: int

    def to_dict(self) -> dict:
        """Canonical JSON-compatible form; parse_config inverts it exactly."""
        experiment = {"kind": self.kind, "master_seed": self.master_seed}
        for name, value in self.params.items():
            experiment[name] = _emit_value(value)
        return {
            "problem": {
                "alphabet": dict(self.problem.alphabet.proc_time),
                "machines": [str(v) for v in self.problem.machines.speeds],
                "process": _emit_process(self.problem.process),
            },
            "experiment": experiment,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _emit_value(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, tuple):
        return [_emit_value(v) for v in value]
    return value


def _emit_process(process) -> dict:
    if isinstance(process, IIDModel):
        return {"kind": "iid", "probs": {s: str(p) for s, p in process.probs.items()}}
    if isinstance(process, MarkovModel):
        return {
            "kind": "markov",
            "symbols": list(process.symbols),
            "transition": [[str(p) for p in row] for row in process.transition],
            "initial": [str(p) for p in process.initial],
        }
    if isinstance(process, MixtureModel):
        return {
            "kind": "mixture",
            "components": [
                {"weight": str(w), "process": _emit_process(sub)}
                for w, sub in process.components
            ],
        }
    raise DomainError(f"unsupported process type {type(process).__name__}")


class _Errors:
    def __init__(self):
        self.items: list[str] = []

    def add(self, path: str, message: str) -> None:
        self.items.append(f"{path}: {message}")

    def check(self) -> None:
        if self.items:
            raise ConfigError(self.items)


def _no_duplicate_keys(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ValueError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _expect_mapping(value, path: str, errors: _Errors) -> dict | None:
    if not isinstance(value, dict):
        errors.add(path, f"expected an object, got {type(value).__name__}")
        return None
    return value


def _parse_fraction(value, path: str, errors: _Errors) -> Fraction | None:
    try:
        return as_fraction(value)
    except DomainError as exc:
        errors.add(path, str(exc))
        return None


def _parse_int(value, path: str, errors: _Errors) -> int | None:
    if isinstance(value, bool) or not isinstance(value, int):
        errors.add(path, f"expected an integer, got {value!r}")
        return None
    return value


def _parse_process(spec, path: str, errors: _Errors):
    spec = _expect_mapping(spec, path, errors)
    if spec is None:
        return None
    kind = spec.get("kind")
    try:
        if kind == "iid":
            probs = _expect_mapping(spec.get("probs"), f"{path}.probs", errors)
            if probs is None:
                return None
            parsed = {}
            for sym, p in probs.items():
                f = _parse_fraction(p, f"{path}.probs.{sym}", errors)
                if f is not None:
                    parsed[sym] = f
            if len(parsed) != len(probs):
                return None
            _check_keys(spec, {"kind", "probs"}, path, errors)
            return IIDModel(probs=parsed)
        if kind == "markov":
            symbols = spec.get("symbols")
            if not isinstance(symbols, list) or not all(isinstance(s, str) for s in symbols):
                errors.add(f"{path}.symbols", "expected a list of strings")
                return None
            transition = spec.get("transition")
            if not isinstance(transition, list):
                errors.add(f"{path}.transition", "expected a matrix (list of lists)")
                return None
            rows = []
            for i, row in enumerate(transition):
                if not isinstance(row, list):
                    errors.add(f"{path}.transition[{i}]", "expected a list")
                    return None
                rows.append(
                    tuple(
                        _parse_fraction(p, f"{path}.transition[{i}][{j}]", errors) or Fraction(0)
                        for j, p in enumerate(row)
                    )
                )
            initial_spec = spec.get("initial")
            _check_keys(spec, {"kind", "symbols", "transition", "initial"}, path, errors)
            if initial_spec == "stationary":
                k = len(symbols)
                probe = MarkovModel(
                    symbols=tuple(symbols),
                    transition=tuple(rows),
                    initial=tuple(Fraction(1, k) for _ in range(k)),
                )
                return MarkovModel(
                    symbols=tuple(symbols),
                    transition=tuple(rows),
                    initial=stationary_distribution(probe),
                )
            if not isinstance(initial_spec, list):
                errors.add(f"{path}.initial", 'expected a list of rationals or "stationary"')
                return None
            initial = tuple(
                _parse_fraction(p, f"{path}.initial[{i}]", errors) or Fraction(0)
                for i, p in enumerate(initial_spec)
            )
            return MarkovModel(symbols=tuple(symbols), transition=tuple(rows), initial=initial)
        if kind == "mixture":
            comps_spec = spec.get("components")
            if not isinstance(comps_spec, list):
                errors.add(f"{path}.components", "expected a list of components")
                return None
            comps = []
            for i, comp in enumerate(comps_spec):
                comp = _expect_mapping(comp, f"{path}.components[{i}]", errors)
                if comp is None:
                    return None
                w = _parse_fraction(comp.get("weight"), f"{path}.components[{i}].weight", errors)
                sub = _parse_process(comp.get("process"), f"{path}.components[{i}].process", errors)
                _check_keys(comp, {"weight", "process"}, f"{path}.components[{i}]", errors)
                if w is None or sub is None:
                    return None
                comps.append((w, sub))
            _check_keys(spec, {"kind", "components"}, path, errors)
            return MixtureModel(components=tuple(comps))
        errors.add(f"{path}.kind", f'expected "iid", "markov", or "mixture", got {kind!r}')
        return None
    except (DomainError, NumericError) as exc:
        errors.add(path, str(exc))
        return None


def _check_keys(mapping: dict, allowed: set[str], path: str, errors: _Errors) -> None:
    for key in mapping:
        if key not in allowed:
            errors.add(f"{path}.{key}", "unknown key")


def _parse_problem(spec, errors: _Errors) -> SchedulingProblem | None:
    spec = _expect_mapping(spec, "problem", errors)
    if spec is None:
        return None
    _check_keys(spec, {"alphabet", "machines", "process"}, "problem", errors)
    alphabet = None
    alpha_spec = _expect_mapping(spec.get("alphabet"), "problem.alphabet", errors)
    if alpha_spec is not None:
        try:
            alphabet = JobAlphabet(proc_time=alpha_spec)
        except DomainError as exc:
            errors.add("problem.alphabet", str(exc))
    machines = None
    machine_spec = spec.get("machines")
    if not isinstance(machine_spec, list):
        errors.add("problem.machines", "expected a list of speeds")
    else:
        speeds = []
        for i, v in enumerate(machine_spec):
            f = _parse_fraction(v, f"problem.machines[{i}]", errors)
            if f is not None:
                speeds.append(f)
        if len(speeds) == len(machine_spec):
            try:
                machines = MachineSet(speeds=tuple(speeds))
            except DomainError as exc:
                errors.add("problem.machines", str(exc))
    process = _parse_process(spec.get("process"), "problem.process", errors)
    if alphabet is None or machines is None or process is None:
        return None
    try:
        return SchedulingProblem(alphabet=alphabet, machines=machines, process=process)
    except DomainError as exc:
        errors.add("problem", str(exc))
        return None


def _parse_param(tag: str, value, path: str, errors: _Errors):
    if tag == "fraction":
        return _parse_fraction(value, path, errors)
    if tag == "int":
        return _parse_int(value, path, errors)
    if tag == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.add(path, f"expected a number, got {value!r}")
            return None
        return float(value)
    if tag == "fraction_list":
        if not isinstance(value, list) or not value:
            errors.add(path, "expected a non-empty list of rationals")
            return None
        out = tuple(_parse_fraction(v, f"{path}[{i}]", errors) for i, v in enumerate(value))
        return None if any(v is None for v in out) else out
    if tag == "int_list":
        if not isinstance(value, list) or not value:
            errors.add(path, "expected a non-empty list of integers")
            return None
        out = tuple(_parse_int(v, f"{path}[{i}]", errors) for i, v in enumerate(value))
        return None if any(v is None for v in out) else out
    if tag == "scheduler":
        if value not in _SCHEDULERS:
            errors.add(path, f"expected one of {sorted(_SCHEDULERS)}, got {value!r}")
            return None
        return value
    raise AssertionError(f"unhandled parameter tag {tag}")


def parse_config(text: str, expected_kind: str | None = None) -> ExperimentConfig:
    """Parse and validate configuration text, reporting every problem found."""
    errors = _Errors()
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except ValueError as exc:
        raise ConfigError([f"config: not valid JSON ({exc})"]) from None
    raw = _expect_mapping(raw, "config", errors)
    errors.check()
    _check_keys(raw, {"problem", "experiment"}, "config", errors)
    problem = _parse_problem(raw.get("problem"), errors)

    exp = raw.get("experiment")
    kind = expected_kind
    params: dict = {}
    master_seed = 0
    exp = _expect_mapping(exp, "experiment", errors) if exp is not None else {}
    if exp is None:
        exp = {}
    if "kind" in exp:
        kind_val = exp["kind"]
        if kind_val not in EXPERIMENT_KINDS:
            errors.add("experiment.kind", f"expected one of {list(EXPERIMENT_KINDS)}, got {kind_val!r}")
        elif expected_kind is not None and kind_val != expected_kind:
            errors.add(
                "experiment.kind",
                f"config says {kind_val!r} but the {expected_kind!r} subcommand was invoked",
            )
        else:
            kind = kind_val
    if kind is None:
        errors.add("experiment.kind", "missing experiment kind")
        errors.check()
    spec = _PARAM_SPECS[kind]
    seed_val = exp.get("master_seed", 0)
    parsed_seed = _parse_int(seed_val, "experiment.master_seed", errors)
    if parsed_seed is not None:
        master_seed = parsed_seed
    _check_keys(exp, {"kind", "master_seed", *spec}, "experiment", errors)
    for name, (tag, required, default) in spec.items():
        if name in exp:
            value = _parse_param(tag, exp[name], f"experiment.{name}", errors)
            if value is not None:
                params[name] = value
        elif required:
            errors.add(f"experiment.{name}", "required parameter is missing")
        else:
            params[name] = default
    errors.check()
    assert problem is not None
    return ExperimentConfig(problem=problem, kind=kind, params=params, master_seed=master_seed)


# ---------------------------------------------------------------------------
# running experiments


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple]
    metadata: dict


def run(config: ExperimentConfig) -> ResultTable:
    """Execute the configured experiment; pure dispatch, no experiment logic here."""
    t0 = time.perf_counter()
    problem = config.problem
    p = config.params
    metadata = {
        "experiment": config.kind,
        "config_sha256": config.sha256(),
        "master_seed": config.master_seed,
        "tool_version": __version__,
    }
    if config.kind == "validate":
        machines = problem.machines
        columns = ("t_min", "t_max", "m", "v_sum", "v_min", "v_max", "ebar", "ebar_under", "strong_converse")
        rows = [(
            problem.alphabet.t_min,
            problem.alphabet.t_max,
            machines.m,
            machines.v_sum,
            machines.v_min,
            machines.v_max,
            ebar_theoretical(problem),
            ebar_underline_theoretical(problem),
            strong_converse_holds(problem),
        )]
    elif config.kind == "scan":
        report = spectral_scan(problem, p["alpha_grid"], p["n_grid"], delta=p["delta"], workers=p["workers"])
        columns = ("n", "alpha", "tail_prob", "alpha_converged")
        rows = [
            (n, alpha, report.tail[i][j], report.converged[j])
            for i, n in enumerate(report.n_grid)
            for j, alpha in enumerate(report.alpha_grid)
        ]
        metadata["ebar_estimate"] = "none" if report.ebar_estimate is None else str(report.ebar_estimate)
        metadata["delta"] = repr(p["delta"])
    elif config.kind == "achievability":
        result = achievability_experiment(
            problem, p["gamma"], _SCHEDULERS[p["scheduler"]](), p["n_grid"], budget=p["budget"]
        )
        columns = ("n", "discard_prob", "cost", "cost_per_job", "cost_lower", "exact")
        rows = [(r.n, r.discard_prob, r.cost, r.cost_per_job, r.cost_lower, r.exact) for r in result]
        metadata["alpha"] = str(ebar_theoretical(problem) + p["gamma"])
        metadata["scheduler"] = p["scheduler"]
    elif config.kind == "converse":
        result = converse_experiment(problem, p["gap"], p["n_grid"])
        columns = ("n", "min_discard_prob")
        rows = list(result)
        metadata["alpha"] = str(ebar_theoretical(problem) - p["gap"])
    elif config.kind == "second-order":
        result = second_order_table(p["n_grid"], p["epsilon"], problem)
        columns = ("n", "epsilon", "r_n_plus", "cost_lo", "cost_hi", "prediction", "residual")
        rows = [
            (r.n, r.epsilon, r.r_n_plus, r.cost_lo, r.cost_hi, r.prediction, r.residual)
            for r in result
        ]
    elif config.kind == "average-case":
        result = average_case_bracket(
            problem, p["n"], p["trials"], config.master_seed, _SCHEDULERS[p["scheduler"]]()
        )
        columns = ("n", "trials", "mc_mean_span_per_job", "bracket_lo", "bracket_hi", "std_error")
        rows = [(
            result.n,
            result.trials,
            result.mc_mean_span_per_job,
            result.bracket_lo,
            result.bracket_hi,
            result.std_error,
        )]
        metadata["scheduler"] = p["scheduler"]
    elif config.kind == "cost":
        discard = ThresholdDiscardSet(n=p["n"], alpha=p["alpha"])
        scheduler = _SCHEDULERS[p["scheduler"]]()
        cost = cost_exact(scheduler, discard, problem, budget=p["budget"])
        prob = discard_probability(discard, problem.process, problem)
        columns = ("n", "alpha", "discard_prob", "cost", "cost_per_job")
        rows = [(p["n"], p["alpha"], prob, cost, cost / p["n"])]
        metadata["scheduler"] = p["scheduler"]
    else:  # pragma: no cover - parse_config rejects unknown kinds
        raise DomainError(f"unknown experiment kind {config.kind!r}")
    metadata["wall_time_s"] = f"{time.perf_counter() - t0:.3f}"
    return ResultTable(columns=tuple(columns), rows=rows, metadata=metadata)


# ---------------------------------------------------------------------------
# output rendering


def _csv_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return f"{value:#.12g}"
    return str(value)


def _json_cell(value):
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    return value


def emit(table: ResultTable, fmt: str = "csv") -> str:
    """Render a result table as CSV (with '#' metadata preamble) or JSON lines."""
    for row in table.rows:
        if len(row) != len(table.columns):
            raise DomainError("result table rows must match the column count")
    if fmt == "csv":
        import csv
        import io

        buf = io.StringIO()
        for key in sorted(table.metadata):
            buf.write(f"# {key}={table.metadata[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()
    if fmt == "jsonl":
        lines = [json.dumps({"metadata": table.metadata}, sort_keys=True)]
        for row in table.rows:
            lines.append(
                json.dumps(
                    {col: _json_cell(v) for col, v in zip(table.columns, row)}, sort_keys=True
                )
            )
        return "\n".join(lines) + "\n"
    raise DomainError(f'output format must be "csv" or "jsonl", got {fmt!r}')


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochsched",
        description="Probabilistic makespan analysis for uniform machines.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--config", required=True, help="path to a JSON config file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "jsonl"), default="csv")
        sp.add_argument("--seed", type=int, help="override experiment.master_seed")
    return parser


def _fail(category: str, message: str, detail=None) -> None:
    record = {"error": category, "message": message}
    if detail:
        record["detail"] = detail
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        _fail("config", f"cannot read config file: {exc}")
        return 2
    try:
        config = parse_config(text, expected_kind=args.kind)
        if args.seed is not None:
            config = dataclasses.replace(config, master_seed=args.seed)
        table = run(config)
        rendered = emit(table, args.format)
        if args.out:
            Path(args.out).write_text(rendered)
        else:
            sys.stdout.write(rendered)
        return 0
    except ConfigError as exc:
        _fail("config", "configuration is invalid", detail=exc.problems)
        return 2
    except DomainError as exc:
        _fail("domain", str(exc))
        return 2
    except ResourceError as exc:
        _fail("resource", str(exc))
        return 3
    except NumericError as exc:
        _fail("numeric", str(exc))
        return 4


if __name__ == "__main__":
    sys.exit(main())
