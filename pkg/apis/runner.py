import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable

import click
import numpy as np
from loguru import logger
from pydantic import ValidationError

from core.contraction_conditions import ContractionSpec, altering_distance_check, certify
from core.exceptions import BadParameters, CStarError, ConfigError
from core.fixed_point_solvers import brute_force_fixed_points, run_solver, uniqueness_probe
from core.metric_spaces import verify_axioms
from core.scenario_catalog import AlteringEntry, CatalogEntry, catalog_build
from core.trace_emitter import emit_trace, fixed_point_list_records, write_records
from models.schemas import CommandName, RunConfig


BANNER = "=" * 60


# Reads a JSON config file; syntax errors carry line and column
def read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file '{path}': {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: the top level must be an object")
    return data


def parse_param(item: str) -> tuple[str, Any]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--param expects key=value, got '{item}'")
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


def _validation_message(e: ValidationError) -> str:
    return "; ".join(f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}" for err in e.errors())


# Merges the config file (if any) with command-line options; options given on the
# command line win. Unknown keys and out-of-range values raise ConfigError
def load_config(command: CommandName, options: dict) -> RunConfig:
    data = read_config_file(options["config"]) if options.get("config") else {}
    if data.get("command", command.value) != command.value:
        raise ConfigError(f"config file is for '{data['command']}', not '{command.value}'")
    data["command"] = command.value

    if options.get("scenario"):
        data["scenario"] = options["scenario"]
    if options.get("param"):
        data["parameters"] = {**data.get("parameters", {}), **dict(parse_param(p) for p in options["param"])}
    if options.get("seed"):
        data["seeds"] = list(options["seed"])
    stop = dict(data.get("stop", {}))
    if options.get("epsilon") is not None:
        stop["step_norm_epsilon"] = options["epsilon"]
    if options.get("max_iter") is not None:
        stop["max_iterations"] = options["max_iter"]
    if stop:
        data["stop"] = stop
    for key, field_name in (("solver", "solver"), ("samples", "samples"), ("starts", "starts"),
                            ("mode", "mode"), ("variant", "variant"), ("out", "output_path"),
                            ("format", "format"), ("start", "start"), ("formal", "formal")):
        if options.get(key) is not None:
            data[field_name] = options[key]

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_validation_message(e)) from e


def _start_for(entry: CatalogEntry, config: RunConfig, seed: int, position: int):
    if position == 0:
        chosen = config.start if config.start is not None else entry.start
        if isinstance(chosen, str) and not entry.space.domain.is_finite:
            try:
                chosen = float(chosen)
            except ValueError as e:
                raise BadParameters(f"start '{chosen}' is not a number") from e
        if chosen is not None:
            return chosen
    return entry.space.domain.sample(np.random.default_rng(seed))


def _with_overrides(entry: CatalogEntry, config: RunConfig) -> CatalogEntry:
    update = {}
    if config.mode is not None:
        update["comparison_mode"] = config.mode
    if config.variant is not None:
        update["variant"] = config.variant
    if not update:
        return entry
    return replace(entry, spec=ContractionSpec.model_validate({**dict(entry.spec), **update}))


def _points(domain, points) -> list:
    return [domain.to_json(p) for p in points]


def _verify(entry: CatalogEntry, config: RunConfig) -> tuple[list[dict], bool, list[str]]:
    records, lines, ok = [], [], True
    for seed in config.seeds:
        report = verify_axioms(entry.space, config.samples, seed)
        records += emit_trace(report, entry.space.domain)
        ok = ok and report.all_pass
        lines.append(f"seed {seed}: {report.samples_tested} samples, "
                     + ("all axioms hold" if report.all_pass else
                        "violated: " + ", ".join(f"{w.axiom} at {_points(entry.space.domain, w.points)}"
                                                 for w in report.violations)))
    return records, ok, lines


def _certify(entry: CatalogEntry, config: RunConfig) -> tuple[list[dict], bool, list[str]]:
    formal = entry.formal if config.formal is None else config.formal
    records, lines, ok = [], [], True
    for seed in config.seeds:
        verify_axioms(entry.space, min(config.samples, 1000), seed)
        certificate = certify(entry.spec, entry.T, entry.space, config.samples, seed, formal=formal)
        records += emit_trace(certificate, entry.space.domain)
        ok = ok and certificate.all_hold
        lines.append(f"seed {seed}: {certificate.pairs_tested} pairs, {len(certificate.violations)} violations, "
                     f"{len(certificate.ill_posed)} ill-posed, {certificate.vacuous_pairs} vacuous, "
                     f"{certificate.domain_exits} domain exits")
    return records, ok, lines


def _solve(entry: CatalogEntry, config: RunConfig) -> tuple[list[dict], bool, list[str]]:
    solver = config.solver or entry.solver
    records, lines, ok = [], [], True
    for position, seed in enumerate(config.seeds):
        x0 = _start_for(entry, config, seed, position)
        result = run_solver(solver, entry.space, entry.T, x0, entry.spec, config.stop,
                            S=entry.S, R=entry.R, R_solve=entry.R_solve)
        records += emit_trace(result)
        ok = ok and result.converged
        point = entry.space.domain.to_json(result.fixed_point) if result.converged else None
        lines.append(f"seed {seed}: {result.status.value} after {len(result.trace) - 1} steps, "
                     f"fixed point {point}, residual {result.residual:.3e}, rate {result.empirical_rate:.4f}")
    return records, ok, lines


def _fixed_points(entry: CatalogEntry, config: RunConfig) -> tuple[list[dict], bool, list[str]]:
    domain = entry.space.domain
    if domain.is_finite:
        points = brute_force_fixed_points(entry.space, entry.T)
        return fixed_point_list_records(points, domain), bool(points), [f"fixed points: {points}"]

    records, lines, ok = [], [], True
    for seed in config.seeds:
        report = uniqueness_probe(entry.space, entry.T, config.solver or entry.solver, entry.spec,
                                  config.starts, seed, S=entry.S, R=entry.R, R_solve=entry.R_solve,
                                  stop=config.stop)
        records += emit_trace(report)
        ok = ok and report.unique
        lines.append(f"seed {seed}: unique={report.unique}, {report.cluster_count} clusters, "
                     f"spread {report.max_spread:.3e}, {report.non_converged} non-converged")
    return records, ok, lines


def _altering(entry: AlteringEntry, config: RunConfig) -> tuple[list[dict], bool, list[str]]:
    records, lines, ok = [], [], True
    for seed in config.seeds:
        report = altering_distance_check(entry.function, config.samples, seed, entry.algebra)
        records += emit_trace(report)
        ok = ok and report.passes
        lines.append(f"seed {seed}: altering distance checks {'pass' if report.passes else 'fail'}")
    return records, ok, lines


HANDLERS: dict[CommandName, Callable] = {
    CommandName.VERIFY_AXIOMS: _verify,
    CommandName.CERTIFY: _certify,
    CommandName.SOLVE: _solve,
    CommandName.FIXED_POINTS: _fixed_points,
}


def _finish(config: RunConfig, records: list[dict], lines: list[str], ok: bool, title: str) -> int:
    if config.output_path is not None:
        write_records(records, config.output_path, config.format)
    click.echo(BANNER)
    click.echo(title)
    click.echo(BANNER)
    for line in lines:
        click.echo(line)
    return 0 if ok else 2


# Runs one command end to end. Exit codes: 0 success, 2 violations or non-convergence,
# 1 user or IO errors (logged and reported on stderr, never as a traceback)
def run(config: RunConfig) -> int:
    try:
        if config.command == CommandName.DEMO:
            return run_demo(config)
        entry = catalog_build(config.scenario, config.parameters)
        if isinstance(entry, AlteringEntry):
            records, ok, lines = _altering(entry, config)
            return _finish(config, records, lines, ok, f"{config.command.value}: altering distance '{entry.name}'")
        entry = _with_overrides(entry, config)
        records, ok, lines = HANDLERS[config.command](entry, config)
        title = f"{config.command.value}: {entry.name} [{entry.expected}] {entry.spec.describe()}"
        return _finish(config, records, lines, ok, title)
    except (CStarError, ValidationError, OSError) as e:
        logger.error(f"{config.command.value} on '{config.scenario}' failed: {e}")
        click.echo(f"error: {e}", err=True)
        return 1


# Runs both worked examples end to end and reports their defects; informational, exits 0
def run_demo(config: RunConfig) -> int:
    records: list[dict] = []
    lines: list[str] = []
    seed = config.seeds[0]

    kannan = catalog_build("paper_example_kannan")
    report = verify_axioms(kannan.space, min(config.samples, 200), seed)
    records += emit_trace(report, kannan.space.domain)
    for witness in report.violations:
        values = ", ".join(f"{k}={v.data.tolist()}" for k, v in witness.values.items())
        where = _points(kannan.space.domain, witness.points)
        lines.append(f"[{kannan.name}] axiom {witness.axiom} violated at {where}: {values}")
    certificate = certify(kannan.spec, kannan.T, kannan.space, min(config.samples, 200), seed, formal=True)
    records += emit_trace(certificate, kannan.space.domain)
    lines.append(f"[{kannan.name}] formal certificate of {kannan.spec.describe()}: all_hold={certificate.all_hold}, "
                 f"{certificate.domain_exits}/{certificate.pairs_tested} pairs leave the domain")
    result = run_solver(kannan.solver, kannan.space, kannan.T, kannan.start, kannan.spec, config.stop)
    records += emit_trace(result)
    lines.append(f"[{kannan.name}] Picard from {kannan.start}: {result.status.value} at iteration "
                 f"{result.exit_iteration} ({result.message})")

    r_example = catalog_build("paper_example_r_interpolative")
    certificate = certify(r_example.spec, r_example.T, r_example.space, min(config.samples, 200), seed, formal=True)
    records += emit_trace(certificate, r_example.space.domain)
    lines.append(f"[{r_example.name}] formal certificate: all_hold={certificate.all_hold}, "
                 f"{certificate.domain_exits}/{certificate.pairs_tested} pairs leave the domain")
    result = run_solver(r_example.solver, r_example.space, r_example.T, r_example.start, r_example.spec,
                        config.stop, R=r_example.R, R_solve=r_example.R_solve)
    records += emit_trace(result)
    lines.append(f"[{r_example.name}] R-iteration from {r_example.start}: {result.status.value} "
                 f"at iteration {result.exit_iteration}")

    honest = catalog_build("positive_r_interpolative")
    result = run_solver(honest.solver, honest.space, honest.T, honest.start, honest.spec, config.stop,
                        R=honest.R, R_solve=honest.R_solve)
    records += emit_trace(result)
    point = honest.space.domain.to_json(result.fixed_point) if result.converged else None
    lines.append(f"[{honest.name}] same maps on ]0,oo[: {result.status.value}, v={point}, "
                 f"d(Rv,Tv) norm {result.residual:.3e}")

    _finish(config, records, lines, True, "demo: worked examples and their defects")
    return 0
