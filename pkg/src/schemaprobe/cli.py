"""Command line entry point: ``schemaprobe {index,retrieve,eval,build-union,convert-questions,hallucinate,toy}``."""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import bench
from .catalog import build_graph, dump_catalog, explode, load_catalog
from .config import RunConfig, apply_override, load_config
from .embed import (
    CachedEmbedder,
    DimensionMismatch,
    EmbeddingCache,
    HashEmbedder,
    HttpEmbedder,
    VectorIndex,
    names_digest,
)
from .hallucinate import (
    CompletionCache,
    FixtureLLM,
    HttpLLM,
    build_prompt,
    builtin_template,
    hallucinate,
    load_template,
)
from .retrieve import Pipeline, RetrievalSettings

log = logging.getLogger("schemaprobe")

ABLATIONS = ("x-contextual", "entropy", "edges", "coverage")


def toy_dir() -> Path:
    return Path(str(resources.files("schemaprobe").joinpath("data/toy")))


def make_embedder(cfg: RunConfig) -> CachedEmbedder:
    e = cfg.embedding
    if e.provider == "hash":
        provider = HashEmbedder(e.dim)
    elif e.provider == "http":
        provider = HttpEmbedder(
            e.endpoint, e.model, auth_env=e.auth_env or None, batch_size=e.batch_size,
            requests_per_second=e.requests_per_second,
        )
    else:
        raise ValueError(f"unknown embedding provider {e.provider!r}")
    cache = EmbeddingCache(cfg.path(cfg.cache_dir) / "embeddings.sqlite")
    return CachedEmbedder(provider, cache, max_in_flight=e.max_in_flight, chunk=e.batch_size)


def make_llm(cfg: RunConfig):
    c = cfg.llm
    if c.provider == "fixture":
        if not c.fixture_dir:
            raise ValueError("llm.fixture_dir must name a directory of recorded responses")
        return FixtureLLM(cfg.path(c.fixture_dir))
    if c.provider == "http":
        return HttpLLM(
            c.endpoint, c.model, auth_env=c.auth_env or None, style=c.style, max_tokens=c.max_tokens,
            requests_per_second=c.requests_per_second,
        )
    raise ValueError(f"unknown llm provider {c.provider!r}")


def make_template(cfg: RunConfig):
    candidate = cfg.path(cfg.prompt)
    template = load_template(candidate) if candidate.suffix == ".json" else builtin_template(cfg.prompt)
    if cfg.n_shots is not None:
        template = template.with_shots(cfg.n_shots)
    if cfg.temperature is not None:
        template = replace(template, temperature=float(cfg.temperature))
    return template


def load_docs(cfg: RunConfig):
    if not cfg.catalog:
        raise ValueError("config has no catalog path")
    catalog = load_catalog(cfg.path(cfg.catalog))
    return catalog, explode(catalog, cfg.prefix_db, cfg.descriptions)


def settings_from(cfg: RunConfig) -> RetrievalSettings:
    r = cfg.retrieval
    return RetrievalSettings(r.budget, r.n_cand, r.clubsuit, r.contextual, r.entropy, r.coverage)


def build_pipeline(cfg: RunConfig) -> Pipeline:
    catalog, docs = load_docs(cfg)
    graph = build_graph(catalog, cfg.graph.same_table_weight, cfg.graph.fk_weight, docs)
    embedder = make_embedder(cfg)
    index_dir = cfg.path(cfg.index_dir)
    if not (index_dir / "manifest.json").exists():
        raise FileNotFoundError(f"no index at {index_dir}; run `schemaprobe index` first")
    index = VectorIndex.load(index_dir, expect_doc_ids_sha256=names_digest([d.qualified_name for d in docs]))
    if (index.provider, index.model) != (embedder.provider_id, embedder.model):
        raise DimensionMismatch(
            f"index was built with {index.provider}/{index.model}, config uses "
            f"{embedder.provider_id}/{embedder.model}; rerun `schemaprobe index`"
        )
    return Pipeline(
        docs, index, graph, embedder,
        llm=make_llm(cfg),
        template=make_template(cfg),
        settings=settings_from(cfg),
        completion_cache=CompletionCache(cfg.path(cfg.cache_dir) / "completions.sqlite"),
        config_digest=cfg.digest(),
    )


# --- subcommands -------------------------------------------------------------


def cmd_index(cfg: RunConfig, args) -> int:
    _, docs = load_docs(cfg)
    embedder = make_embedder(cfg)
    try:
        index = VectorIndex.build(embedder, docs)
    except Exception:
        done = len(embedder.cache) if embedder.cache is not None else 0
        log.error("indexing stopped; %d vectors are cached and will be reused on rerun", done)
        raise
    out = cfg.path(cfg.index_dir)
    index.save(out)
    print(f"indexed {index.size} documents (dim {index.dim}) into {out}; provider calls: {embedder.calls}")
    return 0


def _print_result(result, docs, digest: str) -> None:
    print(f"question: {result.question}")
    print(f"probes:   {', '.join(result.probes)}")
    print(f"objective {result.objective:.4f}   config {digest}")
    for i, (d, g) in enumerate(zip(result.selected, result.gains), 1):
        print(f"{i:4d}  {g:8.4f}  {docs[d].qualified_name}")


def cmd_retrieve(cfg: RunConfig, args) -> int:
    pipe = build_pipeline(cfg)
    if args.method == "single_dpr":
        result = pipe.retrieve_single_dpr(args.question)
    else:
        result = pipe.retrieve(args.question)
    _print_result(result, pipe.docs, cfg.digest())
    payload = result.to_json_dict(pipe.docs)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(payload, indent=1) + "\n")
        manifest = dict(result.manifest, config=cfg.to_dict())
        out.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    if args.subset:
        bench.export_subset(args.question, result.selected, pipe.docs, args.subset)
    if args.plot:
        from .plotting import plot_gains

        plot_gains([pipe.docs[d].qualified_name for d in result.selected], result.gains, args.plot)
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    pipe = build_pipeline(cfg)
    examples = bench.load_examples(args.examples)
    bench.check_gold(examples, pipe.docs)
    digest = cfg.digest()
    runs = []
    for method in args.methods:
        runs.append((method, method, pipe))
        if method == "crush" and args.ablation_table:
            for name in ABLATIONS:
                runs.append((f"crush -{name}", method, pipe.with_settings(pipe.settings.ablate(name))))
    reports = []
    for label, method, p in runs:
        rep = bench.evaluate(
            p, examples, method, cfg.eval.budgets,
            resolve_per_budget=cfg.eval.resolve_per_budget,
            max_in_flight=cfg.eval.max_in_flight,
            config_digest=digest,
        )
        rep.method = label
        reports.append(rep)
    out = Path(args.out)
    written = bench.write_report(reports, out, title=f"config {digest}")
    (out / "run_manifest.json").write_text(
        json.dumps({"config_digest": digest, "config": cfg.to_dict(), "examples": str(args.examples)}, indent=1, sort_keys=True) + "\n"
    )
    if not args.no_plot:
        from .plotting import plot_recall_curves

        plot_recall_curves(reports, out / "recall.png", title=f"config {digest}")
    sys.stdout.write(bench.report_table(reports, title=f"config {digest}"))
    for k, v in written.items():
        log.info("wrote %s: %s", k, v)
    return 0


def cmd_build_union(cfg: RunConfig, args) -> int:
    from .datasets import load_tables_json

    catalogs = []
    for path in args.inputs:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, list):  # SPIDER/BIRD tables.json
            catalogs.extend(load_tables_json(path, descriptions=args.descriptions))
        else:
            catalogs.append(load_catalog(path))
    union = bench.build_union(catalogs, name=args.name)
    dump_catalog(union, args.out)
    print(f"{len(catalogs)} catalogs -> {union.n_tables} tables, {union.n_columns} columns -> {args.out}")
    return 0


def cmd_convert_questions(cfg: RunConfig, args) -> int:
    from .datasets import bird_examples, spider_examples

    conv = spider_examples if args.format == "spider" else bird_examples
    examples = conv(args.questions, args.tables)
    bench.write_examples(examples, args.out)
    print(f"wrote {len(examples)} examples to {args.out}")
    return 0


def cmd_hallucinate(cfg: RunConfig, args) -> int:
    template = make_template(cfg)
    if args.show_prompt:
        print(build_prompt(template, args.question))
        print("---")
    cache = CompletionCache(cfg.path(cfg.cache_dir) / "completions.sqlite")
    schema = hallucinate(make_llm(cfg), template, args.question, cache)
    print(schema.raw_response.strip())
    if schema.fallback:
        print("(unparseable reply; using free-form fragments)")
    for p in schema.probes:
        print(f"  {p}")
    return 0


def cmd_toy(cfg: RunConfig, args) -> int:
    dest = Path(args.dest)
    if dest.exists() and any(dest.iterdir()):
        raise FileExistsError(f"{dest} is not empty")
    shutil.copytree(toy_dir(), dest, dirs_exist_ok=True, ignore=shutil.ignore_patterns("index", ".cache", "__pycache__"))
    print(f"copied the offline benchmark to {dest}; next: schemaprobe index --config {dest / 'config.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--offline", action="store_true", help="hash embedder + recorded LLM replies, no network")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key, e.g. retrieval.budget=20")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="schemaprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("index", parents=[common], help="embed every column and write the vector store")

    p = sub.add_parser("retrieve", parents=[common], help="select a schema subset for one question")
    p.add_argument("question")
    p.add_argument("--budget", type=int)
    p.add_argument("--n-cand", type=int)
    p.add_argument("--method", choices=bench.METHODS, default="crush")
    p.add_argument("--ablate", action="append", choices=ABLATIONS, default=[])
    p.add_argument("--out", help="write the result JSON here")
    p.add_argument("--subset", help="write the selected mini-catalog here")
    p.add_argument("--plot", help="write a bar chart of marginal gains here")

    p = sub.add_parser("eval", parents=[common], help="recall@B over a question set")
    p.add_argument("--examples", required=True, help="JSONL with question and gold_columns/gold_tables")
    p.add_argument("--methods", default="crush,single_dpr", type=lambda s: [m.strip() for m in s.split(",") if m.strip()])
    p.add_argument("--budgets", type=lambda s: [int(b) for b in s.split(",")])
    p.add_argument("--ablate", action="append", choices=ABLATIONS, default=[])
    p.add_argument("--ablation-table", action="store_true", help="also run crush with each design element removed")
    p.add_argument("--out", default="results")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("build-union", parents=[common], help="merge per-database catalogs with db-prefixed table names")
    p.add_argument("inputs", nargs="+", help="catalog JSON files or SPIDER/BIRD tables.json files")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="union")
    p.add_argument("--descriptions", action="store_true", help="keep natural-language column names as descriptions")

    p = sub.add_parser("convert-questions", parents=[common], help="SPIDER/BIRD question file -> examples JSONL")
    p.add_argument("--format", choices=("spider", "bird"), required=True)
    p.add_argument("--questions", required=True)
    p.add_argument("--tables", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("hallucinate", parents=[common], help="show the invented schema and probes for a question")
    p.add_argument("question")
    p.add_argument("--show-prompt", action="store_true")

    p = sub.add_parser("toy", parents=[common], help="copy the vendored offline benchmark into a directory")
    p.add_argument("dest")
    return parser


COMMANDS = {
    "index": cmd_index,
    "retrieve": cmd_retrieve,
    "eval": cmd_eval,
    "build-union": cmd_build_union,
    "convert-questions": cmd_convert_questions,
    "hallucinate": cmd_hallucinate,
    "toy": cmd_toy,
}


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    for item in args.set:
        key, _, value = item.partition("=")
        apply_override(cfg, key, value)
    if args.offline:
        cfg.embedding.provider = "hash"
        cfg.llm.provider = "fixture"
        if not cfg.llm.fixture_dir:
            cfg.llm.fixture_dir = str(toy_dir() / "llm")
    if getattr(args, "budget", None) is not None:
        cfg.retrieval.budget = args.budget
    if getattr(args, "n_cand", None) is not None:
        cfg.retrieval.n_cand = args.n_cand
    if getattr(args, "budgets", None):
        cfg.eval.budgets = args.budgets
    for name in getattr(args, "ablate", []) or []:
        if name == "x-contextual":
            cfg.retrieval.contextual = False
        elif name == "entropy":
            cfg.retrieval.entropy = False
        elif name == "edges":
            cfg.retrieval.clubsuit = 0.0
        elif name == "coverage":
            cfg.retrieval.coverage = False
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except Exception as exc:
        if args.verbose:
            raise
        print(f"schemaprobe {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
