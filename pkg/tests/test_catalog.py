import json
from itertools import combinations

import pytest

from schemaprobe.catalog import (
    CatalogError,
    Column,
    Database,
    ForeignKey,
    SchemaCatalog,
    SchemaGraph,
    Table,
    build_graph,
    catalog_from_dict,
    dump_catalog,
    explode,
    load_catalog,
)


def two_table_catalog(prefixed_db="shop"):
    return SchemaCatalog(
        (
            Database(
                prefixed_db,
                (
                    Table("customer", (Column("id"), Column("name", "full name"), Column("city")), ("id",)),
                    Table(
                        "orders",
                        (Column("order_id"), Column("customer_id"), Column("total")),
                        ("order_id",),
                        (ForeignKey("customer_id", "customer", "id"),),
                    ),
                ),
            ),
        )
    )


class TestExplode:
    def test_one_document_per_column_in_order(self):
        docs = explode(two_table_catalog())
        assert [d.qualified_name for d in docs] == [
            "customer.id", "customer.name", "customer.city",
            "orders.order_id", "orders.customer_id", "orders.total",
        ]
        assert [d.doc_id for d in docs] == list(range(6))

    def test_prefix_and_descriptions(self):
        docs = explode(two_table_catalog(), prefix_db=True)
        assert docs[1].qualified_name == "shop.customer.name"
        assert docs[1].display_text == "shop.customer.name full name"
        assert docs[1].table_ref == "shop.customer"
        bare = explode(two_table_catalog(), with_descriptions=False)
        assert bare[1].display_text == "customer.name"


class TestGraph:
    def test_three_columns_give_three_edges(self):
        cat = SchemaCatalog((Database("d", (Table("t", (Column("a"), Column("b"), Column("c"))),)),))
        g = build_graph(cat)
        assert g.n_edges == 3
        assert sorted(g.edges()) == [(0, 1, 0.01), (0, 2, 0.01), (1, 2, 0.01)]

    def test_fk_adds_exactly_one_cross_edge(self):
        cat = two_table_catalog()
        docs = explode(cat)
        g = build_graph(cat, 0.01, 0.02, docs)
        # hand enumeration: C(3,2) pairs per table plus the (orders.customer_id, customer.id) link
        expected = {(a, b) for a, b in combinations(range(3), 2)} | {(a, b) for a, b in combinations(range(3, 6), 2)} | {(0, 4)}
        assert {(a, b) for a, b, _ in g.edges()} == expected
        assert g.weight(0, 4) == g.weight(4, 0) == 0.02
        assert g.weight(1, 4) == 0.0

    def test_symmetric_no_self_edges(self):
        g = SchemaGraph()
        g.add_edge(2, 2, 1.0)
        g.add_edge(1, 3, 0.0)
        g.add_edge(1, 3, 0.5)
        g.add_edge(3, 1, 0.2)
        assert g.n_edges == 1
        assert g.weight(1, 3) == g.weight(3, 1) == 0.5
        m = g.submatrix([1, 2, 3])
        assert (m == m.T).all() and m[0, 2] == 0.5 and m.trace() == 0

    def test_zero_weights_omit_edges(self):
        assert build_graph(two_table_catalog(), 0.0, 0.0).n_edges == 0
        with pytest.raises(ValueError):
            build_graph(two_table_catalog(), -1.0, 0.01)


class TestValidation:
    def test_dangling_fk_is_named(self):
        with pytest.raises(CatalogError, match="missing"):
            SchemaCatalog((Database("d", (Table("t", (Column("x"),), (), (ForeignKey("x", "missing", "id"),)),)),))

    def test_duplicate_column(self):
        with pytest.raises(CatalogError):
            SchemaCatalog((Database("d", (Table("t", (Column("x"), Column("x"))),)),))

    def test_unknown_primary_key(self):
        with pytest.raises(CatalogError):
            SchemaCatalog((Database("d", (Table("t", (Column("x"),), ("y",)),)),))

    def test_dotted_table_needs_prefixed_flag(self):
        t = (Table("db.t", (Column("x"),)),)
        with pytest.raises(CatalogError):
            SchemaCatalog((Database("u", t),))
        assert SchemaCatalog((Database("u", t),), prefixed=True).n_tables == 1

    def test_malformed_dict(self):
        with pytest.raises(CatalogError):
            catalog_from_dict({"databases": [{"tables": []}]})
        with pytest.raises(CatalogError):
            catalog_from_dict([1, 2])


def test_round_trip(tmp_path):
    cat = two_table_catalog()
    path = tmp_path / "c.json"
    dump_catalog(cat, path)
    back = load_catalog(path)
    assert back == cat
    assert back.n_columns == 6


def test_tables_shorthand(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"tables": [{"name": "a.t", "columns": ["x", "y"]}], "prefixed": True}))
    cat = load_catalog(path)
    assert [d.qualified_name for d in explode(cat)] == ["a.t.x", "a.t.y"]


def test_bad_json_is_catalog_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(CatalogError):
        load_catalog(path)
