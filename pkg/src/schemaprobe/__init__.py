"""Schema subsetting for very large catalogs: hallucinated probes, entropy-guided
scoring and budgeted log-sum-exp coverage."""

from .bench import BenchmarkExample, build_union, evaluate, recall
from .catalog import SchemaCatalog, SchemaGraph, build_graph, explode, load_catalog
from .embed import HashEmbedder, VectorIndex
from .hallucinate import PromptTemplate, builtin_template, parse_schema
from .retrieve import Pipeline, RetrievalSettings, objective, score_candidates, select_bruteforce, select_greedy

__version__ = "0.1.0"

__all__ = [
    "BenchmarkExample",
    "HashEmbedder",
    "Pipeline",
    "PromptTemplate",
    "RetrievalSettings",
    "SchemaCatalog",
    "SchemaGraph",
    "VectorIndex",
    "build_graph",
    "build_union",
    "builtin_template",
    "evaluate",
    "explode",
    "load_catalog",
    "objective",
    "parse_schema",
    "recall",
    "score_candidates",
    "select_bruteforce",
    "select_greedy",
]
