"""Collective retrieval: candidates from many probes, entropy-damped scores, budgeted selection."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .catalog import SchemaDocument, SchemaGraph
from .embed import VectorIndex, probe_text
from .hallucinate import CompletionCache, HallucinatedSchema, PromptTemplate, hallucinate


# SCHEMAPROBE_DEBUG=1 turns on the max <= smx <= max + ln n check on every evaluation
DEBUG_CHECKS = os.environ.get("SCHEMAPROBE_DEBUG", "") not in ("", "0")


class SubsetTooLarge(ValueError):
    """Exhaustive search was refused because the subset count exceeds the cap."""


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def smx(values) -> float:
    """ln sum exp over a set, order independent (exact summation of the shifted terms)."""
    values = sorted(float(v) for v in values)
    if not values:
        raise ValueError("smx of an empty set is undefined")
    top = values[-1]
    out = top + math.log(math.fsum(math.exp(v - top) for v in values))
    if DEBUG_CHECKS:
        assert top <= out <= top + math.log(len(values)) + 1e-12, (values, out)
    return out


def gather_candidates(index: VectorIndex, probe_vectors: Sequence[np.ndarray], n_cand: int = 100) -> list[int]:
    """Probe-fair union of k-NN lists: rank 1 of every probe, then rank 2, ... up to ``n_cand`` docs."""
    if n_cand < 1:
        raise ValueError("n_cand must be >= 1")
    if not probe_vectors:
        raise ValueError("need at least one probe")
    if index.size == 0:
        return []
    rankings = [index.ranking(v) for v in probe_vectors]
    seen: set[int] = set()
    out: list[int] = []
    cursors = [0] * len(rankings)
    while len(out) < n_cand:
        progressed = False
        for p, ranking in enumerate(rankings):
            if len(out) >= n_cand:
                break
            while cursors[p] < len(ranking) and int(ranking[cursors[p]]) in seen:
                cursors[p] += 1
            if cursors[p] < len(ranking):
                doc = int(ranking[cursors[p]])
                cursors[p] += 1
                seen.add(doc)
                out.append(doc)
                progressed = True
        if not progressed:
            break
    return out


@dataclass
class ScoredCandidateSet:
    candidates: list[int]
    cosines: np.ndarray  # probes x candidates
    probs: np.ndarray
    entropies: np.ndarray
    mean_entropy: float
    scores: np.ndarray
    degenerate: list[int] = field(default_factory=list)

    def column(self, doc_id: int) -> int:
        return self._pos[doc_id]

    def __post_init__(self):
        self._pos = {d: i for i, d in enumerate(self.candidates)}


def score_from_cosines(cosines: np.ndarray, candidates: Sequence[int], use_entropy: bool = True) -> ScoredCandidateSet:
    """Entropy-guided scores from a probes x candidates cosine matrix.

    p[k, d] is the row-normalised ``(1 + cos)/2``, H(k) its natural-log entropy,
    and ``s[k, d] = (1 + cos)/2 * sigmoid(mean(H) - H(k))``. Without entropy the
    sigmoid factor is replaced by 1. Row sums use exact summation so scores do not
    depend on the order of the candidate list.
    """
    cos = np.clip(np.asarray(cosines, dtype=np.float64), -1.0, 1.0)
    if cos.ndim != 2 or cos.shape[0] < 1 or cos.shape[1] < 1:
        raise ValueError("need at least one probe and one candidate")
    if cos.shape[1] != len(candidates):
        raise ValueError("cosine matrix does not match the candidate list")
    half = 0.5 * (1.0 + cos)
    n_probe, n_cand = half.shape
    probs = np.empty_like(half)
    entropies = np.zeros(n_probe)
    degenerate = []
    for k in range(n_probe):
        total = math.fsum(half[k])
        if total <= 0.0:
            degenerate.append(k)
            probs[k] = 1.0 / n_cand
            entropies[k] = math.log(n_cand)
            continue
        probs[k] = half[k] / total
        entropies[k] = -math.fsum(p * math.log(p) for p in probs[k] if p > 0.0)
    mean_entropy = math.fsum(entropies) / n_probe
    if use_entropy:
        damp = sigmoid(mean_entropy - entropies)
    else:
        damp = np.ones(n_probe)
    scores = half * damp[:, None]
    for k in degenerate:
        scores[k] = 0.0
    return ScoredCandidateSet(list(candidates), cos, probs, entropies, mean_entropy, scores, degenerate)


def score_candidates(
    probe_vectors: Sequence[np.ndarray], candidate_ids: Sequence[int], index: VectorIndex, use_entropy: bool = True
) -> ScoredCandidateSet:
    if not probe_vectors or not candidate_ids:
        raise ValueError("need at least one probe and one candidate")
    ids = np.asarray(candidate_ids, dtype=np.int64)
    cos = np.vstack([index.cosines(v)[ids] for v in probe_vectors])
    return score_from_cosines(cos, candidate_ids, use_entropy=use_entropy)


def objective(
    scored: ScoredCandidateSet,
    graph: SchemaGraph | None,
    subset: Sequence[int],
    clubsuit: float = 1.0,
    coverage: bool = True,
    parts: bool = False,
):
    """Coverage plus weighted connectivity of ``subset``.

    Coverage is the sum over probes of smx of that probe's scores on the subset
    (a plain sum when ``coverage`` is off). Connectivity sums, per selected
    element, smx of its strictly positive edge weights to the other selected
    elements; an element with no such edge contributes 0.
    """
    if not subset:
        raise ValueError("subset must be non-empty")
    if len(set(subset)) != len(subset):
        raise ValueError("subset has duplicates")
    try:
        cols = [scored.column(d) for d in subset]
    except KeyError as exc:
        raise ValueError(f"doc {exc.args[0]} is not a candidate") from None
    block = scored.scores[:, cols]
    if coverage:
        o1 = math.fsum(smx(row) for row in block)
    else:
        o1 = math.fsum(block.ravel())
    o2 = 0.0
    if graph is not None and clubsuit != 0:
        members = set(subset)
        terms = []
        for d in subset:
            ws = [w for d2, w in graph.neighbors(d).items() if d2 in members and d2 != d and w > 0]
            if ws:
                terms.append(smx(ws))
        o2 = math.fsum(terms)
    total = o1 + clubsuit * o2
    return (total, o1, o2) if parts else total


@dataclass
class RetrievalResult:
    selected: list[int]
    budget: int
    objective: float
    gains: list[float]
    clubsuit: float
    question: str = ""
    probes: list[str] = field(default_factory=list)
    candidates: list[int] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    def to_json_dict(self, docs: Sequence[SchemaDocument] | None = None) -> dict:
        def name(d):
            return docs[d].qualified_name if docs is not None else d

        return {
            "question": self.question,
            "probes": list(self.probes),
            "candidates": [name(d) for d in self.candidates],
            "selected": [
                {"rank": i + 1, "qualified_name": name(d), "gain": g}
                for i, (d, g) in enumerate(zip(self.selected, self.gains))
            ],
            "objective": self.objective,
            "config_digest": self.manifest.get("config_digest", ""),
        }


def _gains_along(scored, graph, order, clubsuit, coverage) -> tuple[list[float], float]:
    gains = []
    prev = 0.0
    for i in range(1, len(order) + 1):
        val = objective(scored, graph, order[:i], clubsuit, coverage)
        gains.append(val - prev)
        prev = val
    return gains, prev


def select_greedy(
    scored: ScoredCandidateSet,
    graph: SchemaGraph | None,
    budget: int,
    clubsuit: float = 1.0,
    coverage: bool = True,
) -> RetrievalResult:
    """Grow the subset one element at a time, always taking the best objective value.

    Ties go to the larger best-probe score, then the smaller doc_id.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cands = list(scored.candidates)
    if not cands:
        return RetrievalResult([], budget, 0.0, [], clubsuit)
    n = len(cands)
    s = scored.scores
    exp_s = np.exp(s)
    best_probe = s.max(axis=0)
    doc_ids = np.asarray(cands)
    use_edges = graph is not None and clubsuit != 0
    if use_edges:
        E = graph.submatrix(cands)
        mask = E > 0
        expE = np.where(mask, np.exp(E), 0.0)
    cover_sum = np.zeros(s.shape[0])  # per probe: sum of exp(s) over the selection
    edge_sum = np.zeros(n)  # per element: sum of exp(e) over selected neighbours
    edge_cnt = np.zeros(n, dtype=np.int64)
    edge_terms = np.zeros(n)  # smx term of each selected element
    chosen = np.zeros(n, dtype=bool)
    o1 = 0.0
    order: list[int] = []
    for _ in range(min(budget, n)):
        if not coverage:
            value = o1 + s.sum(axis=0)
        elif order:
            value = np.log(cover_sum[:, None] + exp_s).sum(axis=0)
        else:
            value = s.sum(axis=0)
        new_o1 = value
        if use_edges:
            own = np.log(np.where(edge_cnt > 0, edge_sum, 1.0))
            sel = np.flatnonzero(chosen)
            if sel.size:
                with np.errstate(divide="ignore"):  # non-neighbour entries are masked out below
                    raised = np.log(edge_sum[sel][:, None] + expE[sel]) - edge_terms[sel][:, None]
                own = own + np.where(mask[sel], raised, 0.0).sum(axis=0)
            value = value + clubsuit * (edge_terms.sum() + own)
        value = np.where(chosen, -np.inf, value)
        tied = np.flatnonzero(value == value.max())
        if tied.size > 1:
            tied = tied[np.lexsort((doc_ids[tied], -best_probe[tied]))]
        j = int(tied[0])
        chosen[j] = True
        order.append(cands[j])
        cover_sum += exp_s[:, j]
        o1 = float(new_o1[j])
        if use_edges:
            nbrs = np.flatnonzero(mask[j])
            edge_sum[nbrs] += expE[nbrs, j]
            edge_cnt[nbrs] += 1
            live = chosen & (edge_cnt > 0)
            edge_terms = np.where(live, np.log(np.where(live, edge_sum, 1.0)), 0.0)
    gains, total = _gains_along(scored, graph, order, clubsuit, coverage)
    return RetrievalResult(order, budget, total, gains, clubsuit, candidates=cands)


def select_bruteforce(
    scored: ScoredCandidateSet,
    graph: SchemaGraph | None,
    budget: int,
    clubsuit: float = 1.0,
    coverage: bool = True,
    cap: int = 200_000,
) -> RetrievalResult:
    """Exact optimum by enumerating every subset of size min(budget, |C|)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    cands = sorted(scored.candidates)
    if not cands:
        return RetrievalResult([], budget, 0.0, [], clubsuit)
    size = min(budget, len(cands))
    count = math.comb(len(cands), size)
    if count > cap:
        raise SubsetTooLarge(f"C({len(cands)}, {size}) = {count} subsets exceeds cap {cap}; use select_greedy")
    best, best_val = None, -math.inf
    for combo in combinations(cands, size):
        val = objective(scored, graph, combo, clubsuit, coverage)
        if val > best_val:
            best, best_val = list(combo), val
    gains, total = _gains_along(scored, graph, best, clubsuit, coverage)
    return RetrievalResult(best, budget, total, gains, clubsuit, candidates=list(scored.candidates))


# --- pipeline ----------------------------------------------------------------


@dataclass
class RetrievalSettings:
    budget: int = 10
    n_cand: int = 100
    clubsuit: float = 1.0
    contextual: bool = True
    entropy: bool = True
    coverage: bool = True

    def ablate(self, name: str) -> "RetrievalSettings":
        """Return a copy with one design element removed."""
        out = RetrievalSettings(**asdict(self))
        if name in ("x-contextual", "contextual"):
            out.contextual = False
        elif name == "entropy":
            out.entropy = False
        elif name in ("edges", "edge"):
            out.clubsuit = 0.0
        elif name == "coverage":
            out.coverage = False
        else:
            raise ValueError(f"unknown ablation {name!r}")
        return out


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode("utf-8")).hexdigest()[:16]


class Pipeline:
    """Question -> invented schema -> probes -> candidates -> scores -> budgeted subset."""

    def __init__(
        self,
        docs: Sequence[SchemaDocument],
        index: VectorIndex,
        graph: SchemaGraph | None,
        embedder,
        llm=None,
        template: PromptTemplate | None = None,
        settings: RetrievalSettings | None = None,
        completion_cache: CompletionCache | None = None,
        config_digest: str = "",
    ):
        if index.size != len(docs):
            raise ValueError(f"index has {index.size} rows but catalog has {len(docs)} documents")
        self.docs = list(docs)
        self.index = index
        self.graph = graph
        self.embedder = embedder
        self.llm = llm
        self.template = template or PromptTemplate()
        self.settings = settings or RetrievalSettings()
        self.completion_cache = completion_cache
        self.config_digest = config_digest

    def with_settings(self, settings: RetrievalSettings) -> "Pipeline":
        return Pipeline(
            self.docs, self.index, self.graph, self.embedder, self.llm, self.template,
            settings, self.completion_cache, self.config_digest,
        )

    def hallucinate(self, question: str) -> HallucinatedSchema:
        if self.llm is None:
            raise RuntimeError("no LLM client configured")
        return hallucinate(self.llm, self.template, question, self.completion_cache)

    def _manifest(self, method: str, **extra) -> dict:
        st = self.settings
        return {
            "method": method,
            "settings": asdict(st),
            "embedding": {"provider": self.embedder.provider_id, "model": self.embedder.model},
            "index_doc_ids_sha256": self.index.doc_ids_sha256,
            "config_digest": self.config_digest,
            **extra,
        }

    def retrieve(self, question: str, budget: int | None = None) -> RetrievalResult:
        st = self.settings
        budget = st.budget if budget is None else budget
        if budget < 1:
            raise ValueError("budget must be >= 1")
        schema = self.hallucinate(question)
        probes = schema.probes
        texts = [probe_text(question, p, st.contextual) for p in probes]
        vectors = self.embedder.embed_many(texts)
        cands = gather_candidates(self.index, vectors, st.n_cand)
        manifest = self._manifest(
            "crush",
            llm_model=getattr(self.llm, "model", ""),
            completion_key=schema.cache_key,
            hallucination_fallback=schema.fallback,
            probe_cache_keys=[self.embedder.cache_key(t) for t in texts] if hasattr(self.embedder, "cache_key") else [],
        )
        if not cands:
            return RetrievalResult([], budget, 0.0, [], st.clubsuit, question, probes, [], manifest)
        scored = score_candidates(vectors, cands, self.index, use_entropy=st.entropy)
        result = select_greedy(scored, self.graph, budget, st.clubsuit, st.coverage)
        result.question = question
        result.probes = probes
        result.manifest = manifest
        if scored.degenerate:
            manifest["degenerate_probes"] = [probes[k] for k in scored.degenerate]
        return result

    def retrieve_single_dpr(self, question: str, budget: int | None = None) -> RetrievalResult:
        budget = self.settings.budget if budget is None else budget
        if budget < 1:
            raise ValueError("budget must be >= 1")
        qvec = self.embedder.embed_text(question)
        hits = self.index.knn(qvec, budget)
        selected = [d for d, _ in hits]
        gains = [c for _, c in hits]
        manifest = self._manifest("single_dpr")
        return RetrievalResult(
            selected, budget, float(sum(gains)), gains, 0.0, question, [question], selected, manifest
        )
