"""Report assembly and emission (table, CSV, JSON).

CSV layouts are fixed; bump ``SCHEMA_VERSION`` whenever a column changes.
Run reports are long-format (one value per row) so that every section fits
one header; sweep reports are wide (one grid point per row).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .cycle import CycleLedger
from .oracle import FullCycleResult

SCHEMA_VERSION = 1
ENERGY_UNIT = "E"
ENTROPY_UNIT = "nats"

RUN_COLUMNS = ["schema_version", "scenario", "section", "item", "quantity", "value", "unit"]
SWEEP_COLUMNS = [
    "schema_version", "scenario", "parameter", "value", "temperature",
    "W_extracted", "dE_meas", "dS_meas", "dW_lost", "dF_measurement", "second_law_slack",
    "W_selective", "shannon_bonus", "oracle_steps", "W_sim", "oracle_error",
    "energy_unit", "entropy_unit",
]

_UNITS = {
    "dE": ENERGY_UNIT, "dS": ENTROPY_UNIT, "W_by_system": ENERGY_UNIT, "Q_from_bath": ENERGY_UNIT,
    "W_extracted": ENERGY_UNIT, "W_closed_form": ENERGY_UNIT, "dE_meas": ENERGY_UNIT,
    "dS_meas": ENTROPY_UNIT, "dW_lost": ENERGY_UNIT, "dF_measurement": ENERGY_UNIT,
    "second_law_slack": ENERGY_UNIT, "closure_dE": ENERGY_UNIT, "closure_dS": ENTROPY_UNIT,
    "temperature": ENERGY_UNIT, "p": "1", "W": ENERGY_UNIT, "W_mean": ENERGY_UNIT,
    "W_nonselective": ENERGY_UNIT, "shannon_bonus": ENERGY_UNIT, "reset_cost": ENERGY_UNIT,
    "net_deficit": ENERGY_UNIT, "W_sim": ENERGY_UNIT, "W_analytic": ENERGY_UNIT,
    "error": ENERGY_UNIT, "final_distance": "1",
}


def _num(x) -> str:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


@dataclass
class ReportBundle:
    scenario: str
    ledger_rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    selective_rows: list[dict] = field(default_factory=list)
    selective_summary: dict = field(default_factory=dict)
    oracle_rows: list[dict] = field(default_factory=list)
    sweep_parameter: Optional[str] = None
    sweep_rows: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def nonfinite_fields(self) -> list[str]:
        bad = []

        def scan(where, d):
            for k, v in d.items():
                if isinstance(v, float) and not math.isfinite(v):
                    bad.append(f"{where}.{k}")

        scan("summary", self.summary)
        scan("selective_summary", self.selective_summary)
        for name in ("ledger_rows", "selective_rows", "oracle_rows", "sweep_rows"):
            for i, row in enumerate(getattr(self, name)):
                scan(f"{name}[{i}]", row)
        return bad

    # -- emission -----------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.sweep_parameter is not None:
            w.writerow(SWEEP_COLUMNS)
            for row in self.sweep_rows:
                full = {"schema_version": SCHEMA_VERSION, "scenario": self.scenario,
                        "parameter": self.sweep_parameter, "energy_unit": ENERGY_UNIT,
                        "entropy_unit": ENTROPY_UNIT, **row}
                w.writerow([_num(full.get(c, "")) for c in SWEEP_COLUMNS])
            return buf.getvalue()
        w.writerow(RUN_COLUMNS)
        for section, item, quantity, value in self._long_rows():
            w.writerow([SCHEMA_VERSION, self.scenario, section, item, quantity, _num(value),
                        _UNITS.get(quantity, "")])
        return buf.getvalue()

    def _long_rows(self):
        for row in self.ledger_rows:
            for q in ("dE", "dS", "W_by_system", "Q_from_bath"):
                yield "ledger", row["stroke"], q, row[q]
        for q, v in self.summary.items():
            yield "summary", "cycle", q, v
        for row in self.selective_rows:
            for q in ("p", "dE", "dS", "W"):
                yield "selective", row["j"], q, row[q]
        for q, v in self.selective_summary.items():
            yield "selective", "mean", q, v
        for row in self.oracle_rows:
            for q in ("W_sim", "W_analytic", "error", "second_law_slack", "final_distance"):
                yield "oracle", row["steps"], q, row[q]

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "units": {"energy": ENERGY_UNIT, "entropy": ENTROPY_UNIT},
            "ledger": self.ledger_rows,
            "summary": self.summary,
            "selective": {"outcomes": self.selective_rows, **self.selective_summary}
            if self.selective_rows else None,
            "oracle": self.oracle_rows or None,
            "sweep": {"parameter": self.sweep_parameter, "rows": self.sweep_rows}
            if self.sweep_parameter else None,
            "notes": self.notes,
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_table(self) -> str:
        lines = [f"scenario: {self.scenario}   (energies in {ENERGY_UNIT}, entropies in {ENTROPY_UNIT})"]
        if self.sweep_parameter is not None:
            cols = ["value", "W_extracted", "dW_lost", "dS_meas", "W_selective", "oracle_error"]
            lines.append(f"sweep over {self.sweep_parameter}")
            lines.append("  ".join(f"{c:>18s}" for c in cols))
            for row in self.sweep_rows:
                lines.append("  ".join(f"{_fmt(row.get(c, '')):>18s}" for c in cols))
            return "\n".join(lines) + "\n"
        if self.ledger_rows:
            lines.append(f"{'stroke':<14s}{'dE':>18s}{'dS':>18s}{'W_by_system':>18s}{'Q_from_bath':>18s}")
            for r in self.ledger_rows:
                lines.append(f"{r['stroke']:<14s}" + "".join(
                    f"{_fmt(r[q]):>18s}" for q in ("dE", "dS", "W_by_system", "Q_from_bath")))
        if self.summary:
            lines.append("")
            lines.extend(f"{k:<22s}{_fmt(v):>18s}" for k, v in self.summary.items())
        if self.selective_rows:
            lines.append("")
            lines.append(f"{'outcome':<10s}{'p':>17s}{'dE':>17s}{'dS':>17s}{'W':>17s}")
            for r in self.selective_rows:
                lines.append(f"{r['j']:<10d}" + "".join(f"{_fmt(r[q]):>17s}" for q in ("p", "dE", "dS", "W")))
            lines.extend(f"{k:<22s}{_fmt(v):>18s}" for k, v in self.selective_summary.items())
        if self.oracle_rows:
            lines.append("")
            lines.append(f"{'oracle N':<10s}{'W_sim':>18s}{'W_analytic':>18s}{'|error|':>17s}")
            for r in self.oracle_rows:
                lines.append(f"{r['steps']:<10d}{_fmt(r['W_sim']):>18s}{_fmt(r['W_analytic']):>18s}"
                             f"{_fmt(r['error']):>17s}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return {"csv": self.to_csv, "json": self.to_json, "table": self.to_table}[fmt]()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


REGISTER_NOTE = "work done on the measuring register is not quantified; only system-side energies are booked"


def ledger_section(ledger: CycleLedger) -> tuple[list[dict], dict]:
    rows = [
        {"stroke": s.label, "dE": s.dE, "dS": s.dS, "W_by_system": s.W_by_system,
         "Q_from_bath": s.Q_from_bath}
        for s in ledger.strokes
    ]
    summary = {
        "temperature": ledger.bath.temperature,
        "W_extracted": ledger.W_extracted,
        "W_closed_form": ledger.W_closed_form,
        "dE_meas": ledger.dE_meas,
        "dS_meas": ledger.dS_meas,
        "dW_lost": ledger.dW_lost,
        "dF_measurement": ledger.dF_measurement,
        "second_law_slack": ledger.second_law_slack,
        "closure_dE": ledger.closure_dE,
        "closure_dS": ledger.closure_dS,
    }
    return rows, summary


def oracle_row(res: FullCycleResult) -> dict:
    return {
        "steps": res.isothermal.steps,
        "W_sim": res.W_total,
        "W_analytic": res.W_analytic,
        "error": res.error,
        "second_law_slack": res.second_law_slack,
        "final_distance": res.final_distance,
    }


def run_bundle(name: str, ledger: CycleLedger, oracle: Optional[FullCycleResult] = None) -> ReportBundle:
    rows, summary = ledger_section(ledger)
    b = ReportBundle(name, ledger_rows=rows, summary=summary, notes=[REGISTER_NOTE])
    sel = ledger.selective
    if sel is not None:
        b.selective_rows = [
            {"j": o.index, "p": o.probability, "dE": o.dE, "dS": o.dS, "W": o.W} for o in sel.outcomes
        ]
        b.selective_summary = {
            "W_mean": sel.W_mean,
            "W_nonselective": sel.W_nonselective,
            "shannon_bonus": sel.shannon_bonus,
            "reset_cost": sel.reset_cost,
            "net_deficit": sel.net_deficit,
        }
    if oracle is not None:
        b.oracle_rows = [oracle_row(oracle)]
    return b


def sweep_row(value, ledger: CycleLedger, oracle: Optional[FullCycleResult] = None) -> dict:
    row = {
        "value": value,
        "temperature": ledger.bath.temperature,
        "W_extracted": ledger.W_extracted,
        "dE_meas": ledger.dE_meas,
        "dS_meas": ledger.dS_meas,
        "dW_lost": ledger.dW_lost,
        "dF_measurement": ledger.dF_measurement,
        "second_law_slack": ledger.second_law_slack,
    }
    if ledger.selective is not None:
        row["W_selective"] = ledger.selective.W_mean
        row["shannon_bonus"] = ledger.selective.shannon_bonus
    if oracle is not None:
        row["oracle_steps"] = oracle.isothermal.steps
        row["W_sim"] = oracle.W_total
        row["oracle_error"] = oracle.error
    return row

