import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import objective_oracle, round_robin_oracle, scores_oracle
from schemaprobe.catalog import Column, Database, SchemaCatalog, SchemaGraph, Table, build_graph, explode
from schemaprobe.embed import CachedEmbedder, HashEmbedder, VectorIndex
from schemaprobe.hallucinate import PromptTemplate, StubLLM
from schemaprobe.retrieve import (
    Pipeline,
    RetrievalSettings,
    SubsetTooLarge,
    gather_candidates,
    objective,
    score_from_cosines,
    select_bruteforce,
    select_greedy,
    smx,
)
from schemaprobe.bench import recall


def unit_rows(rng, n, dim):
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class TestGather:
    def test_single_probe_is_knn(self):
        rng = np.random.default_rng(0)
        idx = VectorIndex(unit_rows(rng, 20, 8))
        q = unit_rows(rng, 1, 8)[0]
        assert gather_candidates(idx, [q], 5) == [d for d, _ in idx.knn(q, 5)]

    def test_disjoint_probes_interleave(self):
        idx = VectorIndex(np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]]))
        assert gather_candidates(idx, [np.array([1.0, 0.0]), np.array([0.0, 1.0])], 4) == [0, 2, 1, 3]

    def test_three_probes_match_simulation(self):
        rng = np.random.default_rng(3)
        rows = unit_rows(rng, 20, 6)
        idx = VectorIndex(rows)
        probes = list(unit_rows(rng, 3, 6))
        rank_lists = []
        for p in probes:
            cos = [(float(np.dot(r, p) / np.linalg.norm(r)), i) for i, r in enumerate(idx.vectors.astype(float))]
            rank_lists.append([i for _, i in sorted(cos, key=lambda t: (-t[0], t[1]))])
        assert gather_candidates(idx, probes, 10) == round_robin_oracle(rank_lists, 10)

    def test_cap_and_exhaustion(self):
        idx = VectorIndex(np.eye(3))
        assert sorted(gather_candidates(idx, [np.ones(3), -np.ones(3)], 100)) == [0, 1, 2]
        assert gather_candidates(VectorIndex(np.zeros((0, 3))), [np.ones(3)], 5) == []
        with pytest.raises(ValueError):
            gather_candidates(idx, [], 5)


class TestScores:
    def test_hand_example(self):
        cos = [[0.8, 0.2, -0.4], [0.1, 0.1, 0.1]]
        scored = score_from_cosines(np.array(cos), [7, 8, 9])
        # spreadsheet-style: halves, row sums, entropies
        h1 = [0.9, 0.6, 0.3]
        p1 = [x / 1.8 for x in h1]
        e1 = -sum(p * math.log(p) for p in p1)
        e2 = math.log(3)
        hbar = (e1 + e2) / 2
        s1 = [x / (1 + math.exp(-(hbar - e1))) for x in h1]
        s2 = [0.55 / (1 + math.exp(-(hbar - e2)))] * 3
        assert np.allclose(scored.scores, [s1, s2], atol=1e-12, rtol=0)
        assert scored.scores[0].max() > 0.9 * 0.5  # the peaked probe is boosted above sigma(0)

    def test_single_candidate(self):
        scored = score_from_cosines(np.array([[0.3], [-0.5]]), [0])
        assert np.allclose(scored.entropies, 0.0)
        assert np.allclose(scored.scores[:, 0], [0.25 * 1.3, 0.25 * 0.5])

    def test_equal_cosines(self):
        scored = score_from_cosines(np.full((3, 4), 0.2), list(range(4)))
        assert np.allclose(scored.entropies, math.log(4))
        assert np.allclose(scored.scores, 0.6 * 0.5)

    def test_degenerate_row(self):
        scored = score_from_cosines(np.array([[-1.0, -1.0], [0.5, 0.0]]), [0, 1])
        assert scored.degenerate == [0]
        assert np.array_equal(scored.scores[0], [0.0, 0.0])
        assert np.allclose(scored.probs[0], 0.5)

    def test_without_entropy(self):
        cos = np.array([[0.9, -0.2], [0.3, 0.3]])
        assert np.allclose(score_from_cosines(cos, [0, 1], use_entropy=False).scores, (1 + cos) / 2)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_matches_oracle_and_is_order_free(self, k, c, seed):
        rng = np.random.default_rng(seed)
        cos = rng.uniform(-0.99, 1.0, size=(k, c))
        ids = list(range(100, 100 + c))
        scored = score_from_cosines(cos, ids)
        ref, probs, ents = scores_oracle(cos.tolist())
        assert np.allclose(scored.scores, ref, atol=1e-12, rtol=0)
        assert np.allclose(scored.probs.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(scored.entropies >= -1e-12) and np.all(scored.entropies <= math.log(c) + 1e-12)
        perm = rng.permutation(c)
        shuffled = score_from_cosines(cos[:, perm], [ids[i] for i in perm])
        assert np.array_equal(shuffled.scores, scored.scores[:, perm])


def random_instance(rng, n_probe, n_cand, edge_p=0.3, gamma=0.01):
    cos = rng.uniform(-1, 1, size=(n_probe, n_cand))
    scored = score_from_cosines(cos, list(range(n_cand)))
    g = SchemaGraph()
    for a in range(n_cand):
        for b in range(a + 1, n_cand):
            if rng.random() < edge_p:
                g.add_edge(a, b, gamma)
    return scored, g


def edge_dict(g):
    return {(a, b): w for a, b, w in g.edges()}


class TestObjective:
    def test_singleton(self):
        scored = score_from_cosines(np.array([[0.2, 0.4], [0.6, -0.1]]), [0, 1])
        assert objective(scored, None, [1]) == pytest.approx(scored.scores[:, 1].sum(), abs=1e-15)

    def test_one_edge_counts_twice(self):
        scored = score_from_cosines(np.array([[0.2, 0.4]]), [0, 1])
        g = SchemaGraph()
        g.add_edge(0, 1, 0.01)
        total, o1, o2 = objective(scored, g, [0, 1], parts=True)
        assert o2 == pytest.approx(0.02, abs=1e-15)
        assert total == pytest.approx(o1 + o2, abs=1e-15)

    def test_isolated_elements_contribute_zero(self):
        scored = score_from_cosines(np.array([[0.2, 0.4, 0.1]]), [0, 1, 2])
        g = SchemaGraph()
        g.add_edge(0, 1, 0.5)
        assert objective(scored, g, [0, 2], parts=True)[2] == 0.0

    def test_coverage_off_is_plain_sum(self):
        scored = score_from_cosines(np.array([[0.2, 0.4, 0.1], [0.0, 0.3, 0.9]]), [0, 1, 2])
        assert objective(scored, None, [0, 2], coverage=False) == pytest.approx(scored.scores[:, [0, 2]].sum())

    def test_bad_subsets(self):
        scored = score_from_cosines(np.array([[0.2, 0.4]]), [0, 1])
        for bad in ([], [0, 0], [5]):
            with pytest.raises(ValueError):
                objective(scored, None, bad)

    def test_matches_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            scored, g = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(1, 15)), gamma=float(rng.uniform(0, 2)))
            n = len(scored.candidates)
            subset = list(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
            col = {d: i for i, d in enumerate(scored.candidates)}
            for cov in (True, False):
                want = objective_oracle(scored.scores.tolist(), col, edge_dict(g), subset, 0.7, cov)
                assert objective(scored, g, subset, 0.7, cov) == pytest.approx(want, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=1, max_size=30))
    def test_smx_bounds(self, values):
        out = smx(values)
        assert max(values) <= out <= max(values) + math.log(len(values)) + 1e-12


class TestGreedy:
    def test_single_probe_no_edges_is_cosine_ranking(self):
        rng = np.random.default_rng(5)
        cos = rng.uniform(-1, 1, size=(1, 12))
        scored = score_from_cosines(cos, list(range(12)))
        res = select_greedy(scored, None, 5, clubsuit=0.0)
        assert res.selected == list(np.argsort(-cos[0], kind="stable")[:5])

    def test_first_pick_and_gains(self):
        rng = np.random.default_rng(6)
        scored, g = random_instance(rng, 3, 10)
        res = select_greedy(scored, g, 4)
        assert res.selected[0] == int(np.argmax(scored.scores.sum(axis=0)))
        prev = 0.0
        for i, gain in enumerate(res.gains, 1):
            cur = objective(scored, g, res.selected[:i])
            assert gain == pytest.approx(cur - prev, abs=1e-12)
            prev = cur
        assert res.objective == pytest.approx(prev, abs=1e-12)

    def test_each_step_is_the_best_extension(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            scored, g = random_instance(rng, int(rng.integers(1, 4)), int(rng.integers(3, 12)), edge_p=0.5, gamma=float(rng.uniform(0, 1)))
            for cov in (True, False):
                res = select_greedy(scored, g, 5, clubsuit=1.0, coverage=cov)
                for i, d in enumerate(res.selected):
                    head = res.selected[:i]
                    best = max(objective(scored, g, head + [e], 1.0, cov) for e in scored.candidates if e not in head)
                    assert objective(scored, g, head + [d], 1.0, cov) >= best - 1e-9

    def test_ties_prefer_smaller_doc_id(self):
        scored = score_from_cosines(np.array([[0.5, 0.5, 0.5]]), [9, 4, 6])
        assert select_greedy(scored, None, 2).selected == [4, 6]

    def test_ties_prefer_larger_best_probe(self):
        # doc 0: scores (a, b), doc 1: (b, a) mirrored plus a third probe equal; sums tie, maxima differ
        cos = np.array([[0.9, 0.5], [0.1, 0.5]])
        scored = score_from_cosines(cos, [0, 1], use_entropy=False)
        assert scored.scores[:, 0].sum() == scored.scores[:, 1].sum()
        assert select_greedy(scored, None, 1).selected == [0]

    def test_budget_beyond_candidates(self):
        scored = score_from_cosines(np.array([[0.5, 0.1]]), [3, 1])
        assert sorted(select_greedy(scored, None, 10).selected) == [1, 3]
        with pytest.raises(ValueError):
            select_greedy(scored, None, 0)

    def test_matches_bruteforce_on_dominant_instance(self):
        cos = -np.ones((3, 6)) * 0.5
        for k, d in enumerate([0, 2, 4]):
            cos[k, d] = 1.0
        scored = score_from_cosines(cos, list(range(6)))
        g = select_greedy(scored, None, 3, clubsuit=0.0)
        b = select_bruteforce(scored, None, 3, clubsuit=0.0)
        assert sorted(g.selected) == b.selected == [0, 2, 4]
        assert g.objective == pytest.approx(b.objective, abs=1e-12)

    def test_bruteforce_cap(self):
        scored = score_from_cosines(np.zeros((1, 40)), list(range(40)))
        with pytest.raises(SubsetTooLarge):
            select_bruteforce(scored, None, 10)


def test_ablate_names():
    base = RetrievalSettings()
    assert base.ablate("x-contextual").contextual is False
    assert base.ablate("entropy").entropy is False
    assert base.ablate("edges").clubsuit == 0.0
    assert base.ablate("coverage").coverage is False
    with pytest.raises(ValueError):
        base.ablate("nothing")


def small_pipeline(reply, catalog, settings=None):
    docs = explode(catalog)
    emb = CachedEmbedder(HashEmbedder(1024))
    idx = VectorIndex.build(emb, docs)
    return Pipeline(docs, idx, build_graph(catalog, docs=docs), emb, StubLLM(reply), PromptTemplate(), settings or RetrievalSettings())


ZOO = SchemaCatalog(
    (
        Database(
            "zoo",
            (
                Table("animal", tuple(Column(c) for c in ("animal_id", "species", "birth_date", "weight_kg", "enclosure_id"))),
                Table("enclosure", tuple(Column(c) for c in ("enclosure_id", "habitat", "area_sqm"))),
                Table("keeper", tuple(Column(c) for c in ("keeper_id", "keeper_name", "salary", "enclosure_id"))),
                Table("feeding", tuple(Column(c) for c in ("animal_id", "food_type", "feeding_time", "quantity_kg"))),
            ),
        ),
    )
)


class TestPipeline:
    def test_gold_schema_reply_recovers_gold(self):
        gold = ["keeper.keeper_name", "enclosure.habitat"]
        pipe = small_pipeline("keeper(keeper_name), enclosure(habitat)", ZOO, RetrievalSettings(contextual=False))
        res = pipe.retrieve("Who looks after the animals in the savanna?", budget=len(gold))
        assert {pipe.docs[d].qualified_name for d in res.selected} >= set(gold)
        assert res.probes == ["keeper.keeper_name", "enclosure.habitat"]
        assert res.manifest["method"] == "crush" and res.manifest["completion_key"]

    def test_multi_atom_question_beats_single_vector(self):
        # the question vector leans on the feeding table; the keeper atom is one bare word
        question = "which food type does each keeper give"
        gold = ["feeding.food_type", "keeper.keeper_name"]
        pipe = small_pipeline("feeding(food type), keeper(keeper name)", ZOO)
        crush = [pipe.docs[d].qualified_name for d in pipe.retrieve(question, 2).selected]
        dpr = [pipe.docs[d].qualified_name for d in pipe.retrieve_single_dpr(question, 2).selected]
        assert recall(gold, dpr, 2) < recall(gold, crush, 2)

    def test_single_dpr_is_knn(self):
        pipe = small_pipeline("x(y)", ZOO)
        res = pipe.retrieve_single_dpr("keeper salary", 3)
        assert res.selected == [d for d, _ in pipe.index.knn(pipe.embedder.embed_text("keeper salary"), 3)]
