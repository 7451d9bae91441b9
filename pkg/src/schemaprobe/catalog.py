"""Schema catalogs, exploded column documents and the schema graph.

A catalog is loaded from a single JSON document::

    {"databases": [{"name": "club_1",
                    "tables": [{"name": "club",
                                "columns": [{"name": "club_id"}, {"name": "club_name"}],
                                "primary_key": ["club_id"],
                                "foreign_keys": [{"column": "...", "ref_table": "...",
                                                  "ref_column": "..."}]}]}]}

Every column becomes one retrievable document whose text is ``table.column``
(``db.table.column`` when the database prefix is requested).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterator

import numpy as np


class CatalogError(ValueError):
    """Raised for malformed or inconsistent catalog files."""


@dataclass(frozen=True)
class Column:
    name: str
    description: str | None = None


@dataclass(frozen=True)
class ForeignKey:
    column: str
    ref_table: str
    ref_column: str


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...] = ()
    foreign_keys: tuple[ForeignKey, ...] = ()

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class Database:
    name: str
    tables: tuple[Table, ...]


@dataclass(frozen=True)
class SchemaCatalog:
    databases: tuple[Database, ...] = ()
    # set by build_union: table names already carry their database prefix
    prefixed: bool = False

    def __post_init__(self):
        validate(self)

    @property
    def n_tables(self) -> int:
        return sum(len(db.tables) for db in self.databases)

    @property
    def n_columns(self) -> int:
        return sum(len(t.columns) for db in self.databases for t in db.tables)

    def iter_tables(self) -> Iterator[tuple[Database, Table]]:
        for db in self.databases:
            for table in db.tables:
                yield db, table

    def to_dict(self) -> dict:
        out = []
        for db in self.databases:
            tables = []
            for t in db.tables:
                cols = []
                for c in t.columns:
                    entry = {"name": c.name}
                    if c.description is not None:
                        entry["description"] = c.description
                    cols.append(entry)
                tdict = {"name": t.name, "columns": cols}
                if t.primary_key:
                    tdict["primary_key"] = list(t.primary_key)
                if t.foreign_keys:
                    tdict["foreign_keys"] = [
                        {"column": fk.column, "ref_table": fk.ref_table, "ref_column": fk.ref_column}
                        for fk in t.foreign_keys
                    ]
                tables.append(tdict)
            out.append({"name": db.name, "tables": tables})
        if self.prefixed:
            return {"prefixed": True, "databases": out}
        return {"databases": out}


def validate(catalog: SchemaCatalog) -> None:
    """Check name uniqueness and foreign-key resolution; raise CatalogError naming the culprit."""
    seen_dbs: set[str] = set()
    for db in catalog.databases:
        if not db.name:
            raise CatalogError("database with empty name")
        if "." in db.name:
            raise CatalogError(f"database name {db.name!r} contains '.'")
        if db.name in seen_dbs:
            raise CatalogError(f"duplicate database {db.name!r}")
        seen_dbs.add(db.name)
        tables = {}
        for t in db.tables:
            if not t.name:
                raise CatalogError(f"table with empty name in database {db.name!r}")
            if not catalog.prefixed and "." in t.name:
                raise CatalogError(f"table name {t.name!r} contains '.'")
            if t.name in tables:
                raise CatalogError(f"duplicate table {db.name}.{t.name}")
            names = t.column_names()
            if len(set(names)) != len(names):
                dup = next(n for n in names if names.count(n) > 1)
                raise CatalogError(f"duplicate column {db.name}.{t.name}.{dup}")
            for n in names:
                if not n:
                    raise CatalogError(f"empty column name in {db.name}.{t.name}")
                if "." in n:
                    raise CatalogError(f"column name {db.name}.{t.name}.{n!r} contains '.'")
            for pk in t.primary_key:
                if pk not in names:
                    raise CatalogError(f"primary key {db.name}.{t.name}.{pk} is not a column")
            tables[t.name] = t
        for t in db.tables:
            for fk in t.foreign_keys:
                label = f"foreign key {db.name}.{t.name}.{fk.column} -> {fk.ref_table}.{fk.ref_column}"
                if fk.column not in t.column_names():
                    raise CatalogError(f"{label}: local column does not exist")
                target = tables.get(fk.ref_table)
                if target is None:
                    raise CatalogError(f"{label}: table {fk.ref_table!r} does not exist")
                if fk.ref_column not in target.column_names():
                    raise CatalogError(f"{label}: column {fk.ref_column!r} does not exist")


def _column(entry) -> Column:
    if isinstance(entry, str):
        return Column(entry)
    return Column(str(entry["name"]), entry.get("description"))


def catalog_from_dict(data: dict) -> SchemaCatalog:
    """Build a catalog from parsed JSON.

    Besides the ``databases`` form, a bare ``{"tables": [...]}`` object (the
    exported subset format) is read as one database named ``subset``.
    """
    if isinstance(data, dict) and "databases" not in data and isinstance(data.get("tables"), list):
        data = {"prefixed": data.get("prefixed", False),
                "databases": [{"name": data.get("name", "subset"), "tables": data["tables"]}]}
    if not isinstance(data, dict) or not isinstance(data.get("databases"), list):
        raise CatalogError("catalog must be an object with a 'databases' list")
    dbs = []
    try:
        for d in data["databases"]:
            tables = []
            for t in d.get("tables", []):
                cols = tuple(_column(c) for c in t.get("columns", []))
                fks = tuple(
                    ForeignKey(str(fk["column"]), str(fk["ref_table"]), str(fk["ref_column"]))
                    for fk in t.get("foreign_keys") or []
                )
                tables.append(
                    Table(str(t["name"]), cols, tuple(t.get("primary_key") or ()), fks)
                )
            dbs.append(Database(str(d["name"]), tuple(tables)))
    except (KeyError, TypeError, AttributeError) as exc:
        raise CatalogError(f"malformed catalog entry: {exc!r}") from exc
    return SchemaCatalog(tuple(dbs), prefixed=bool(data.get("prefixed", False)))


def load_catalog(path: str | Path) -> SchemaCatalog:
    """Read and validate a catalog JSON file.

    Raw table names may not contain ``.`` unless the file is marked
    ``"prefixed": true`` (the output of a union build).
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: not valid JSON ({exc})") from exc
    return catalog_from_dict(data)


def dump_catalog(catalog: SchemaCatalog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(catalog.to_dict(), indent=1) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class SchemaDocument:
    doc_id: int
    qualified_name: str
    display_text: str
    database: str
    table: str
    column: str

    @property
    def table_ref(self) -> str:
        """Qualified name of the owning table."""
        return self.qualified_name.rsplit(".", 1)[0]


def explode(
    catalog: SchemaCatalog, prefix_db: bool = False, with_descriptions: bool = True
) -> list[SchemaDocument]:
    docs = []
    for db, table in catalog.iter_tables():
        table_text = f"{db.name}.{table.name}" if prefix_db else table.name
        for col in table.columns:
            text = f"{table_text}.{col.name}"
            if with_descriptions and col.description:
                text = f"{text} {col.description}"
            docs.append(
                SchemaDocument(
                    doc_id=len(docs),
                    qualified_name=f"{table_text}.{col.name}",
                    display_text=text,
                    database=db.name,
                    table=table.name,
                    column=col.name,
                )
            )
    return docs


@dataclass
class SchemaGraph:
    """Sparse symmetric edge weights between documents."""

    adjacency: dict[int, dict[int, float]] = field(default_factory=dict)
    default_same_table_weight: float = 0.0
    default_fk_weight: float = 0.0

    def add_edge(self, a: int, b: int, weight: float) -> None:
        if a == b or weight <= 0:
            return
        # an FK pair inside one table keeps the larger weight
        w = max(weight, self.weight(a, b))
        self.adjacency.setdefault(a, {})[b] = w
        self.adjacency.setdefault(b, {})[a] = w

    def weight(self, a: int, b: int) -> float:
        return self.adjacency.get(a, {}).get(b, 0.0)

    def neighbors(self, a: int) -> dict[int, float]:
        return self.adjacency.get(a, {})

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for a in sorted(self.adjacency):
            for b, w in sorted(self.adjacency[a].items()):
                if a < b:
                    yield a, b, w

    def submatrix(self, ids) -> np.ndarray:
        ids = list(ids)
        pos = {d: i for i, d in enumerate(ids)}
        out = np.zeros((len(ids), len(ids)))
        for i, d in enumerate(ids):
            for nb, w in self.neighbors(d).items():
                j = pos.get(nb)
                if j is not None:
                    out[i, j] = w
        return out


def build_graph(
    catalog: SchemaCatalog,
    same_table_weight: float = 0.01,
    fk_weight: float = 0.01,
    docs: list[SchemaDocument] | None = None,
) -> SchemaGraph:
    """Same-table edges between all column pairs, plus one edge per FK column pair."""
    if same_table_weight < 0 or fk_weight < 0:
        raise ValueError("edge weights must be non-negative")
    if docs is None:
        docs = explode(catalog)
    ids = {(d.database, d.table, d.column): d.doc_id for d in docs}
    graph = SchemaGraph(default_same_table_weight=same_table_weight, default_fk_weight=fk_weight)
    for db, table in catalog.iter_tables():
        col_ids = [ids[(db.name, table.name, c.name)] for c in table.columns]
        if same_table_weight > 0:
            for a, b in combinations(col_ids, 2):
                graph.add_edge(a, b, same_table_weight)
        if fk_weight > 0:
            for fk in table.foreign_keys:
                graph.add_edge(
                    ids[(db.name, table.name, fk.column)],
                    ids[(db.name, fk.ref_table, fk.ref_column)],
                    fk_weight,
                )
    return graph
