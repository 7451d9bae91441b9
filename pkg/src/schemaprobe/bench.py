"""Union benchmarks, recall@B evaluation and report files."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .catalog import CatalogError, Database, ForeignKey, SchemaCatalog, SchemaDocument, Table

log = logging.getLogger(__name__)

DEFAULT_BUDGETS = (3, 5, 10, 20, 30, 50, 100)
METHODS = ("crush", "single_dpr")


@dataclass
class BenchmarkExample:
    question: str
    gold_columns: tuple[str, ...] = ()
    gold_tables: tuple[str, ...] = ()
    source_db: str | None = None

    def __post_init__(self):
        if bool(self.gold_columns) == bool(self.gold_tables):
            raise ValueError(f"example {self.question!r}: give exactly one of gold_columns / gold_tables")

    @property
    def mode(self) -> str:
        return "column" if self.gold_columns else "table"

    @property
    def gold(self) -> tuple[str, ...]:
        return self.gold_columns or self.gold_tables

    def to_dict(self) -> dict:
        out = {"question": self.question}
        if self.gold_columns:
            out["gold_columns"] = list(self.gold_columns)
        else:
            out["gold_tables"] = list(self.gold_tables)
        if self.source_db:
            out["source_db"] = self.source_db
        return out


def load_examples(path: str | Path) -> list[BenchmarkExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                out.append(
                    BenchmarkExample(
                        rec["question"],
                        tuple(rec.get("gold_columns") or ()),
                        tuple(rec.get("gold_tables") or ()),
                        rec.get("source_db"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_examples(examples: Iterable[BenchmarkExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_dict()) + "\n")


def check_gold(examples: Sequence[BenchmarkExample], docs: Sequence[SchemaDocument]) -> None:
    """Every gold name must exist in the exploded catalog (case-insensitive)."""
    cols = {d.qualified_name.lower() for d in docs}
    tables = {d.table_ref.lower() for d in docs}
    for ex in examples:
        known = cols if ex.mode == "column" else tables
        for g in ex.gold:
            if g.lower() not in known:
                raise ValueError(f"gold {ex.mode} {g!r} of {ex.question!r} is not in the catalog")


def build_union(catalogs: Sequence[SchemaCatalog], name: str = "union") -> SchemaCatalog:
    """Merge many small catalogs into one, renaming every table to ``db.table``."""
    seen = set()
    tables = []
    for cat in catalogs:
        for db in cat.databases:
            if db.name in seen:
                raise CatalogError(f"duplicate database {db.name!r} in union")
            seen.add(db.name)
            for t in db.tables:
                tname = t.name if cat.prefixed else f"{db.name}.{t.name}"
                prefix = tname[: -len(t.name)]
                tables.append(
                    Table(
                        tname,
                        t.columns,
                        t.primary_key,
                        tuple(ForeignKey(fk.column, prefix + fk.ref_table, fk.ref_column) for fk in t.foreign_keys),
                    )
                )
    return SchemaCatalog((Database(name, tuple(tables)),), prefixed=True)


def table_of(qualified_column: str) -> str:
    return qualified_column.rsplit(".", 1)[0]


def recall(gold: Iterable[str], retrieved: Sequence[str], budget: int, mode: str = "column") -> float:
    """Fraction of gold names found among the first ``budget`` retrieved columns."""
    gold = {g.lower() for g in gold}
    if not gold:
        raise ValueError("gold set is empty")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    head = [r.lower() for r in retrieved[:budget]]
    if mode == "column":
        found = gold & set(head)
    elif mode == "table":
        found = gold & {table_of(r) for r in head}
    else:
        raise ValueError(f"unknown recall mode {mode!r}")
    return len(found) / len(gold)


@dataclass
class RecallReport:
    method: str
    budgets: list[int]
    per_example: list[list[float]]  # one row per evaluated example, aligned with budgets
    example_ids: list[int]
    excluded: list[tuple[int, str]] = field(default_factory=list)
    config_digest: str = ""

    @property
    def n_examples(self) -> int:
        return len(self.per_example)

    @property
    def n_excluded(self) -> int:
        return len(self.excluded)

    @property
    def means(self) -> list[float]:
        if not self.per_example:
            return [0.0] * len(self.budgets)
        return [float(np.mean([row[i] for row in self.per_example])) for i in range(len(self.budgets))]

    def mean_at(self, budget: int) -> float:
        return self.means[self.budgets.index(budget)]


def evaluate(
    pipeline,
    examples: Sequence[BenchmarkExample],
    method: str = "crush",
    budgets: Sequence[int] = DEFAULT_BUDGETS,
    resolve_per_budget: bool = False,
    max_in_flight: int = 1,
    config_digest: str = "",
) -> RecallReport:
    """Run ``method`` once per example at the largest budget and score every prefix.

    With ``resolve_per_budget`` the solver is rerun for each budget instead.
    Examples whose provider call fails are excluded and listed in the report.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    budgets = sorted(set(int(b) for b in budgets))
    if not budgets or budgets[0] < 1:
        raise ValueError("budgets must be positive")
    b_max = budgets[-1]
    docs = pipeline.docs
    run = pipeline.retrieve if method == "crush" else pipeline.retrieve_single_dpr

    def one(ex: BenchmarkExample):
        try:
            if resolve_per_budget:
                rows = []
                for b in budgets:
                    names = [docs[d].qualified_name for d in run(ex.question, b).selected]
                    rows.append(recall(ex.gold, names, b, ex.mode))
                return rows, None
            names = [docs[d].qualified_name for d in run(ex.question, b_max).selected]
            return [recall(ex.gold, names, b, ex.mode) for b in budgets], None
        except Exception as exc:  # recorded per example, never fatal for the run
            log.warning("excluding %r: %s", ex.question, exc)
            return None, f"{type(exc).__name__}: {exc}"

    if max_in_flight > 1:
        with ThreadPoolExecutor(max_in_flight) as pool:
            outcomes = list(pool.map(one, examples))
    else:
        outcomes = [one(ex) for ex in examples]
    report = RecallReport(method, budgets, [], [], config_digest=config_digest)
    for i, (rows, err) in enumerate(outcomes):
        if err is not None:
            report.excluded.append((i, err))
        else:
            report.per_example.append(rows)
            report.example_ids.append(i)
    return report


CSV_FIELDS = ("method", "budget", "recall", "n_examples", "n_excluded", "config_digest")


def report_csv(reports: Sequence[RecallReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for rep in reports:
        for b, r in zip(rep.budgets, rep.means):
            w.writerow([rep.method, b, f"{r:.6f}", rep.n_examples, rep.n_excluded, rep.config_digest])
    return buf.getvalue()


def report_table(reports: Sequence[RecallReport], title: str = "") -> str:
    """Fixed-width table: one row per method, one ``r @ B`` column per budget."""
    budgets = sorted({b for rep in reports for b in rep.budgets})
    width = max([len("Method")] + [len(r.method) for r in reports]) + 2
    lines = []
    if title:
        lines.append(title)
    excluded = sum(r.n_excluded for r in reports)
    if excluded:
        lines.append(f"# excluded examples: {excluded}")
    lines.append("Method".ljust(width) + "".join(f"{'r @ ' + str(b):>9}" for b in budgets))
    for rep in reports:
        vals = dict(zip(rep.budgets, rep.means))
        cells = "".join(f"{vals[b]:9.2f}" if b in vals else f"{'-':>9}" for b in budgets)
        lines.append(rep.method.ljust(width) + cells)
    return "\n".join(lines) + "\n"


def write_report(
    reports: Sequence[RecallReport], out_dir: str | Path, stem: str = "recall", title: str = ""
) -> dict[str, Path]:
    """Write CSV, text table and per-example JSONL; finished files replace ``.partial`` ones."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_example = io.StringIO()
    for rep in reports:
        for i, row in zip(rep.example_ids, rep.per_example):
            per_example.write(json.dumps({"method": rep.method, "example": i, "recall": dict(zip(map(str, rep.budgets), row))}) + "\n")
        for i, err in rep.excluded:
            per_example.write(json.dumps({"method": rep.method, "example": i, "excluded": err}) + "\n")
    payloads = {
        "csv": (f"{stem}.csv", report_csv(reports)),
        "table": (f"{stem}.txt", report_table(reports, title)),
        "per_example": (f"{stem}_examples.jsonl", per_example.getvalue()),
    }
    written = {}
    for key, (fname, text) in payloads.items():
        final = out_dir / fname
        partial = out_dir / (fname + ".partial")
        partial.write_text(text, encoding="utf-8")
        partial.replace(final)
        written[key] = final
    return written


def export_subset(question: str, selected: Sequence[int], docs: Sequence[SchemaDocument], out: str | Path | None = None) -> dict:
    """Mini-catalog of the selected columns, grouped by table in catalog order."""
    tables: dict[str, list[str]] = {}
    for d in sorted(selected):
        doc = docs[d]
        tables.setdefault(doc.table_ref, []).append(doc.column)
    payload = {
        "question": question,
        "tables": [{"name": t, "columns": cols} for t, cols in tables.items()],
    }
    if any("." in t for t in tables):
        payload["prefixed"] = True
    if out is not None:
        Path(out).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return payload
