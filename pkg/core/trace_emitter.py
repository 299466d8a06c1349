"""
Machine-readable records for solve results, certificates and axiom reports.

Every record carries the same columns so jsonl and csv hold identical content.
Floats are written with 17 significant digits; csv cells of the text columns
(record, verdict, detail) hold their strings verbatim, every other cell holds the jsonl
encoding of its value.
"""
import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from loguru import logger

from core.contraction_conditions import AlteringReport, Certificate, ConditionEvaluation
from core.cstar_algebra import AlgebraElement, spectrum
from core.exceptions import CStarError, NotHermitian
from core.fixed_point_solvers import SolveResult, UniquenessReport
from core.metric_spaces import AxiomReport, DomainDescriptor
from models.schemas import OutputFormat


COLUMNS = ("record", "index", "points", "step_norm", "bound_check", "verdict",
           "lhs", "rhs", "lhs_spectrum", "rhs_spectrum", "detail", "value")
# Written verbatim in csv, empty for None; every other column holds JSON text
TEXT_COLUMNS = frozenset({"record", "verdict", "detail"})


def _number(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def encode(value: Any) -> str:
    """JSON text of ``value`` with 17-significant-digit floats and keys in insertion order."""
    if value is None or isinstance(value, (bool, str)):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _number(float(value))
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {encode(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(encode(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__}")


def element_json(a: AlgebraElement | None):
    if a is None:
        return None
    data = a.data
    if np.iscomplexobj(data):
        if np.all(data.imag == 0):
            return data.real.tolist()
        return {"re": data.real.tolist(), "im": data.imag.tolist()}
    return data.tolist()


def spectrum_json(a: AlgebraElement | None):
    if a is None:
        return None
    try:
        return spectrum(a).tolist()
    except NotHermitian:
        return None


def _record(kind: str, **fields) -> dict:
    row = {column: None for column in COLUMNS}
    row["record"] = kind
    row.update(fields)
    return row


def _solve_records(result: SolveResult) -> list[dict]:
    trace = result.trace
    space = trace.space
    to_json = space.domain.to_json if space is not None else (lambda p: p)
    offset = len(trace.steps) - len(result.bound_checks)

    rows = []
    for n, norm_n in enumerate(trace.step_norms):
        check = result.bound_checks[n - offset] if n >= offset and result.bound_checks else None
        rows.append(_record(
            "iteration",
            index=n,
            points=[to_json(trace.points[n]), to_json(trace.points[n + 1])],
            step_norm=norm_n,
            bound_check=check.slack if check is not None else None,
            verdict=check.verdict.value if check is not None else None,
            lhs=element_json(trace.steps[n]),
        ))

    last = trace.points[-1]
    rows.append(_record(
        "fixed_point" if result.converged else "non_convergence",
        index=len(trace) - 1,
        points=[to_json(result.fixed_point if result.converged else last)],
        step_norm=result.residual,
        verdict=result.status.value,
        detail=result.message or None,
        value={
            "solver": result.solver.value,
            "empirical_rate": result.empirical_rate,
            "residuals": result.residuals,
            "exit_iteration": result.exit_iteration,
            "bound_checks_failed": sum(not c.holds for c in result.bound_checks),
            "monotonicity_failures": result.monotonicity_failures,
        },
    ))
    return rows


def _evaluation_record(kind: str, evaluation: ConditionEvaluation, domain: DomainDescriptor) -> dict:
    order = evaluation.order
    return _record(
        kind,
        index=evaluation.index,
        points=[domain.to_json(p) for p in evaluation.pair],
        bound_check=order.witness_eigenvalue if order.witness_eigenvalue is not None else order.hermitian_defect,
        verdict=order.verdict.value,
        lhs=element_json(evaluation.lhs),
        rhs=element_json(evaluation.rhs),
        lhs_spectrum=spectrum_json(evaluation.lhs),
        rhs_spectrum=spectrum_json(evaluation.rhs),
        detail="left domain" if evaluation.left_domain else None,
    )


def _certificate_records(certificate: Certificate, domain: DomainDescriptor) -> list[dict]:
    rows = [_evaluation_record("violation", e, domain) for e in certificate.violations]
    rows += [_evaluation_record("ill_posed", e, domain) for e in certificate.ill_posed]
    rows.sort(key=lambda r: r["index"])
    rows.append(_record(
        "summary",
        verdict="Holds" if certificate.all_hold else "Fails",
        detail=f"{certificate.spec.describe()} for '{certificate.map_name}' on '{certificate.space_name}'",
        value={
            "pairs_tested": certificate.pairs_tested,
            "violations": len(certificate.violations),
            "ill_posed": len(certificate.ill_posed),
            "vacuous_pairs": certificate.vacuous_pairs,
            "domain_exits": certificate.domain_exits,
            "exhaustive": certificate.exhaustive,
        },
    ))
    return rows


def _axiom_records(report: AxiomReport, domain: DomainDescriptor) -> list[dict]:
    rows = []
    for index, witness in enumerate(report.violations):
        values = list(witness.values.items())
        rows.append(_record(
            "axiom",
            index=index,
            points=[domain.to_json(p) for p in witness.points],
            bound_check=witness.eigenvalue,
            verdict="Fails",
            lhs=element_json(values[0][1]),
            rhs=element_json(values[1][1]) if len(values) > 1 else None,
            lhs_spectrum=spectrum_json(values[0][1]),
            rhs_spectrum=spectrum_json(values[1][1]) if len(values) > 1 else None,
            detail=f"{witness.axiom}: {witness.detail}",
            value={"axiom": witness.axiom, "terms": [name for name, _ in values]},
        ))
    rows.append(_record(
        "summary",
        verdict="Holds" if report.all_pass else "Fails",
        value={"samples_tested": report.samples_tested,
               "violated": [w.axiom for w in report.violations]},
    ))
    return rows


def _uniqueness_records(report: UniquenessReport) -> list[dict]:
    rows = [_record("fixed_point", index=i, points=[z]) for i, z in enumerate(report.clusters)]
    rows.append(_record(
        "summary",
        verdict="Holds" if report.unique else "Fails",
        value={"unique": report.unique, "cluster_count": report.cluster_count,
               "max_spread": report.max_spread, "converged": report.converged,
               "non_converged": report.non_converged},
    ))
    return rows


def _altering_records(report: AlteringReport) -> list[dict]:
    return [_record(
        "summary",
        verdict="Holds" if report.passes else "Fails",
        detail="; ".join(report.failures) or None,
        value={"function": report.function, "samples": report.samples,
               "nondecreasing": report.nondecreasing, "zero_at_zero": report.zero_at_zero,
               "nonzero_away_from_zero": report.nonzero_away_from_zero, "continuous": report.continuous},
    )]


def emit_trace(result: SolveResult | Certificate | AxiomReport | UniquenessReport | AlteringReport,
               domain: DomainDescriptor | None = None) -> list[dict]:
    """Records for one result; certificates and axiom reports need the domain to render points."""
    if isinstance(result, SolveResult):
        return _solve_records(result)
    if isinstance(result, UniquenessReport):
        return _uniqueness_records(result)
    if isinstance(result, AlteringReport):
        return _altering_records(result)
    if domain is None:
        raise CStarError(f"{type(result).__name__} records need the domain of the space")
    if isinstance(result, Certificate):
        return _certificate_records(result, domain)
    return _axiom_records(result, domain)


def fixed_point_list_records(points: list, domain: DomainDescriptor) -> list[dict]:
    rows = [_record("fixed_point", index=i, points=[domain.to_json(p)]) for i, p in enumerate(points)]
    rows.append(_record("summary", verdict="Holds" if points else "Fails", value={"fixed_points": len(points)}))
    return rows


def _cell(column: str, value: Any) -> str:
    if column in TEXT_COLUMNS:
        return "" if value is None else value
    return encode(value)


# Writes records in order with a single writer: one JSON object per line, or a csv
# file with a header row and RFC 4180 quoting
def write_records(records: Iterable[dict], path: Path, fmt: OutputFormat) -> int:
    records = list(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if fmt == OutputFormat.JSONL:
            for row in records:
                f.write(encode(row) + "\n")
        else:
            writer = csv.DictWriter(f, fieldnames=COLUMNS)
            writer.writeheader()
            for row in records:
                writer.writerow({k: _cell(k, row.get(k)) for k in COLUMNS})
    logger.info(f"Wrote {len(records)} {fmt.value} records to '{path}'")
    return len(records)


def read_records(path: Path, fmt: OutputFormat) -> list[dict]:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as f:
        if fmt == OutputFormat.JSONL:
            return [json.loads(line) for line in f if line.strip()]
        rows = []
        for raw in csv.DictReader(f):
            rows.append({key: (cell or None) if key in TEXT_COLUMNS else json.loads(cell)
                         for key, cell in raw.items()})
        return rows
