"""Converters for SPIDER/BIRD ``tables.json`` schemas and their question files.

The datasets themselves are not shipped; point these functions at local copies.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .bench import BenchmarkExample
from .catalog import Column, Database, ForeignKey, SchemaCatalog, Table


def _table_columns(entry: dict):
    tables = entry.get("table_names_original") or entry["table_names"]
    columns = entry.get("column_names_original") or entry["column_names"]
    return tables, columns


def database_from_tables_entry(entry: dict, descriptions: bool = False) -> Database:
    """One ``tables.json`` record -> Database. Column index 0 (``*``) is dropped."""
    tables, columns = _table_columns(entry)
    natural = entry.get("column_names") or columns
    per_table: list[list[Column]] = [[] for _ in tables]
    for i, (t_idx, cname) in enumerate(columns):
        if t_idx < 0:
            continue
        desc = natural[i][1] if descriptions and natural[i][1] != cname else None
        per_table[t_idx].append(Column(cname, desc))

    pks: list[list[str]] = [[] for _ in tables]
    for pk in entry.get("primary_keys", []):
        for c in pk if isinstance(pk, list) else [pk]:
            t_idx, cname = columns[c]
            pks[t_idx].append(cname)

    fks: list[list[ForeignKey]] = [[] for _ in tables]
    for src, dst in entry.get("foreign_keys", []):
        s_t, s_c = columns[src]
        d_t, d_c = columns[dst]
        fks[s_t].append(ForeignKey(s_c, tables[d_t], d_c))

    return Database(
        entry["db_id"],
        tuple(Table(name, tuple(per_table[i]), tuple(pks[i]), tuple(fks[i])) for i, name in enumerate(tables)),
    )


def load_tables_json(path: str | Path, descriptions: bool = False) -> list[SchemaCatalog]:
    """Read a SPIDER or BIRD tables file into one single-database catalog per schema."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    return [SchemaCatalog((database_from_tables_entry(e, descriptions),)) for e in entries]


# --- gold columns ------------------------------------------------------------


def _spider_sql_columns(sql, out: set[int]) -> None:
    """Collect column ids referenced anywhere in a SPIDER parsed-SQL dict."""

    def col_unit(cu):
        if cu:
            out.add(cu[1])

    def val_unit(vu):
        if vu:
            col_unit(vu[1])
            col_unit(vu[2])

    def val(v):
        if isinstance(v, dict):
            _spider_sql_columns(v, out)
        elif isinstance(v, list) and len(v) == 3 and isinstance(v[1], int):
            col_unit(v)

    def condition(conds):
        for c in conds or []:
            if isinstance(c, list):
                val_unit(c[2])
                val(c[3])
                val(c[4])

    if not sql:
        return
    for _, vu in sql["select"][1]:
        val_unit(vu)
    for kind, unit in sql["from"]["table_units"]:
        if kind == "sql":
            _spider_sql_columns(unit, out)
    condition(sql["from"]["conds"])
    condition(sql["where"])
    condition(sql["having"])
    for cu in sql.get("groupBy") or []:
        col_unit(cu)
    if sql.get("orderBy"):
        for vu in sql["orderBy"][1]:
            val_unit(vu)
    for key in ("intersect", "union", "except"):
        _spider_sql_columns(sql.get(key), out)


def spider_examples(questions_path: str | Path, tables_path: str | Path, prefix_db: bool = True) -> list[BenchmarkExample]:
    """SPIDER dev/train questions with gold columns; queries containing ``*`` are dropped."""
    schemas = {e["db_id"]: e for e in json.loads(Path(tables_path).read_text(encoding="utf-8"))}
    out = []
    for rec in json.loads(Path(questions_path).read_text(encoding="utf-8")):
        if "*" in rec["query"]:
            continue
        entry = schemas[rec["db_id"]]
        tables, columns = _table_columns(entry)
        ids: set[int] = set()
        _spider_sql_columns(rec["sql"], ids)
        gold = []
        for c in sorted(ids):
            t_idx, cname = columns[c]
            if t_idx < 0:
                continue
            prefix = f"{rec['db_id']}." if prefix_db else ""
            gold.append(f"{prefix}{tables[t_idx]}.{cname}")
        if gold:
            out.append(BenchmarkExample(rec["question"], tuple(gold), source_db=rec["db_id"]))
    return out


_IDENT_RE = re.compile(r"`([^`]+)`|\"([^\"]+)\"|\[([^\]]+)\]|([A-Za-z_][A-Za-z0-9_]*)")


def sql_identifiers(sql: str) -> list[str]:
    sql = re.sub(r"'(?:[^']|'')*'", " ", sql)  # drop string literals
    return [next(g for g in m.groups() if g is not None) for m in _IDENT_RE.finditer(sql)]


def bird_examples(questions_path: str | Path, tables_path: str | Path, prefix_db: bool = True) -> list[BenchmarkExample]:
    """BIRD questions with gold columns recovered by identifier matching.

    BIRD ships SQL text only, so a column counts as gold when its name appears
    in the query and its table is also named there. Ambiguous names map to every
    such table.
    """
    schemas = {e["db_id"]: e for e in json.loads(Path(tables_path).read_text(encoding="utf-8"))}
    out = []
    for rec in json.loads(Path(questions_path).read_text(encoding="utf-8")):
        sql = rec.get("SQL") or rec.get("query") or ""
        if "*" in sql:
            continue
        entry = schemas[rec["db_id"]]
        tables, columns = _table_columns(entry)
        idents = {i.lower() for i in sql_identifiers(sql)}
        used = {i for i, t in enumerate(tables) if t.lower() in idents}
        gold = []
        for t_idx, cname in columns:
            if t_idx in used and cname.lower() in idents:
                prefix = f"{rec['db_id']}." if prefix_db else ""
                gold.append(f"{prefix}{tables[t_idx]}.{cname}")
        if gold:
            q = rec["question"]
            out.append(BenchmarkExample(q, tuple(dict.fromkeys(gold)), source_db=rec["db_id"]))
    return out
