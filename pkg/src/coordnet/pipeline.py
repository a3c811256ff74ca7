"""Staged pipeline: every stage reads the previous stage's files from the
output directory and writes its own, so runs are resumable and each stage
can be executed on its own."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Mapping

from . import export
from .analysis import connected_components, edge_counts, engagement_stats, top_terms, weighted_degree
from .classify import UserClassTable, class_census, classify_corpus, load_mapping
from .corpus import Corpus, dump_corpus, filter_originals, load_corpus
from .errors import ConfigError, CoordnetError
from .induce import CoordinationGraph, build_incidence, induce, prune
from .knn import SimilarityGraph, build_knn, symmetrize
from .synth import GroundTruth, ScenarioConfig, generate_scenario, score_detection
from .vectorize import DEFAULT_DIM, embed_corpus, import_embeddings, write_embeddings

log = logging.getLogger(__name__)

CONFIG_ENV = "COORDNET_CONFIG"

ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "classes": "classes.json",
    "embeddings": "embeddings.txt",
    "similarity": "similarity.csv",
    "coordination": "coordination.csv",
    "core": "coordination_core.csv",
    "report": "report.json",
    "analysis": "analysis.json",
    "engagement": "engagement.txt",
}
EXTRA_EXPORTS = {"graphml": "coordination_core.graphml", "dot": "coordination_core.dot"}
EXPORT_FORMATS = ("csv", "json", "graphml", "dot")


@dataclass
class PipelineConfig:
    input: str | None = None
    format: str | None = None
    classes: str | None = None
    vectorizer: str = "builtin"
    embeddings: str | None = None
    dim: int = DEFAULT_DIM
    seed: int = 0
    k: int | None = None
    std_mult: float = 1.0
    out: str = "coordnet_out"
    export: list[str] = field(default_factory=lambda: ["csv", "json"])
    threads: int = 1
    cluster_method: str = "components"
    top_n: int = 15

    def __post_init__(self):
        if isinstance(self.export, str):
            self.export = [e.strip() for e in self.export.split(",") if e.strip()]
        bad = sorted(set(self.export) - set(EXPORT_FORMATS))
        if bad:
            raise ConfigError(f"unknown export format(s): {', '.join(bad)}")
        if self.vectorizer not in ("builtin", "import"):
            raise ConfigError("vectorizer must be 'builtin' or 'import'")
        if self.vectorizer == "import" and not self.embeddings:
            raise ConfigError("vectorizer 'import' needs an embeddings path")
        if not self.std_mult > 0:
            raise ConfigError("std_mult must be > 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @classmethod
    def from_sources(cls, path: str | Path | None = None, overrides: Mapping | None = None) -> "PipelineConfig":
        """Merge a config file (explicit path, else $COORDNET_CONFIG) with overrides."""
        data: dict = {}
        path = path or os.environ.get(CONFIG_ENV)
        if path:
            loaded = load_mapping(Path(path))
            known = {f.name for f in fields(cls)}
            unknown = sorted(set(loaded) - known)
            if unknown:
                raise ConfigError(f"{path}: unknown config key(s): {', '.join(unknown)}")
            data.update(loaded)
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls(**data)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def path(self, name: str) -> Path:
        return self.out_dir / ARTIFACTS.get(name, EXTRA_EXPORTS.get(name, name))

    def class_table(self) -> UserClassTable:
        return UserClassTable.load(self.classes) if self.classes else UserClassTable.default()


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _update_report(cfg: PipelineConfig, stage: str, info: dict, top: dict | None = None) -> None:
    path = cfg.path("report")
    report = read_json(path) if path.exists() else {"stages": {}}
    report["stages"][stage] = info
    report.update(top or {})
    write_json(path, report)


def _require(cfg: PipelineConfig, name: str, stage: str) -> Path:
    p = cfg.path(name)
    if not p.exists():
        raise CoordnetError(f"missing {p}; run the stage before {stage} first")
    return p


def _originals(cfg: PipelineConfig, stage: str) -> tuple[Corpus, Corpus]:
    corpus = load_corpus(_require(cfg, "corpus", stage), "jsonl")
    return corpus, filter_originals(corpus)


# -- stages ----------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig) -> None:
    if not cfg.input:
        raise ConfigError("no input corpus given (--input)")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(cfg.input, cfg.format)
    dump_corpus(corpus, cfg.path("corpus"), "jsonl")
    n_echo = sum(p.is_echo for p in corpus)
    _update_report(cfg, "ingest", {
        "n_posts": len(corpus), "n_users": len(corpus.users),
        "n_echoes": n_echo, "n_originals": len(corpus) - n_echo,
    })
    log.info("ingest: %d posts from %d users", len(corpus), len(corpus.users))


def stage_classify(cfg: PipelineConfig) -> None:
    corpus = load_corpus(_require(cfg, "corpus", "classify"), "jsonl")
    table = cfg.class_table()
    assignments = classify_corpus(corpus, table)
    census = class_census(corpus, table, assignments) if len(corpus.users) else {}
    write_json(cfg.path("classes"), {
        "table": {k: list(v) for k, v in table.classes.items()},
        "assignments": {u: sorted(c) for u, c in assignments.items()},
        "census": census,
    })
    _update_report(cfg, "classify", {lab: c["account_count"] for lab, c in census.items()})


def stage_embed(cfg: PipelineConfig) -> None:
    _, originals = _originals(cfg, "embed")
    if cfg.vectorizer == "import":
        emb = import_embeddings(cfg.embeddings, originals, normalize=True)
    else:
        emb = embed_corpus(originals, dim=cfg.dim, seed=cfg.seed)
    write_embeddings(emb, cfg.path("embeddings"))
    _update_report(cfg, "embed", {
        "vectorizer": cfg.vectorizer, "n_posts": emb.shape[0], "dim": emb.shape[1],
        "n_zero_rows": int(emb.zero_rows.sum()),
    })


def stage_knn(cfg: PipelineConfig) -> None:
    _, originals = _originals(cfg, "knn")
    emb = import_embeddings(_require(cfg, "embeddings", "knn"), originals, normalize=False)
    adj = build_knn(emb, k=cfg.k, threads=cfg.threads)
    sim = symmetrize(adj)
    sim.write_csv(cfg.path("similarity"))
    _update_report(cfg, "knn", {"n_posts": sim.n, "k": adj.k, "n_edges": sim.n_edges})


def stage_induce(cfg: PipelineConfig) -> None:
    _, originals = _originals(cfg, "induce")
    sim = SimilarityGraph.read_csv(_require(cfg, "similarity", "induce"), originals.post_ids)
    graph = induce(build_incidence(originals), sim)
    graph.write_csv(cfg.path("coordination"))
    _update_report(cfg, "induce", {"n_users": graph.n_users, "n_edges": graph.n_edges})


def _user_ids(cfg: PipelineConfig) -> list[str] | None:
    p = cfg.path("corpus")
    return filter_originals(load_corpus(p, "jsonl")).usernames if p.exists() else None


def stage_prune(cfg: PipelineConfig, graph_path: str | Path | None = None) -> None:
    src = Path(graph_path) if graph_path else _require(cfg, "coordination", "prune")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    graph = CoordinationGraph.read_csv(src, _user_ids(cfg))
    core = prune(graph, std_mult=cfg.std_mult)
    core.write_csv(cfg.path("core"))
    summary = core.report()
    _update_report(cfg, "prune", {"std_mult": cfg.std_mult}, top=summary)


def stage_analyze(cfg: PipelineConfig) -> None:
    corpus, originals = _originals(cfg, "analyze")
    classes = read_json(_require(cfg, "classes", "analyze"))
    labels = list(classes["table"])
    assignments = {u: frozenset(c) for u, c in classes["assignments"].items()}
    sim = SimilarityGraph.read_csv(_require(cfg, "similarity", "analyze"), originals.post_ids)
    core = CoordinationGraph.read_csv(_require(cfg, "core", "analyze"), originals.usernames)

    clusters = connected_components(
        core, corpus=corpus, similarity=sim, assignments=assignments,
        class_labels=labels, method=cfg.cluster_method, seed=cfg.seed,
    )
    stats = engagement_stats(corpus, assignments, labels)
    wdeg, ndeg = weighted_degree(core), edge_counts(core)
    terms = {"all": top_terms(corpus, cfg.top_n)}
    for lab in labels:
        terms[lab] = top_terms(
            [p for u in corpus.users if lab in assignments.get(u, ()) for p in corpus.posts_of(u)],
            cfg.top_n,
        )
    write_json(cfg.path("analysis"), {
        "cluster_method": cfg.cluster_method,
        "clusters": [c.to_dict() for c in clusters],
        "engagement": stats.to_dict(),
        "top_terms": {k: [[t, c] for t, c in v] for k, v in terms.items()},
        "degree": {
            u: {"weighted": wdeg[u], "edges": ndeg[u]} for u in core.user_ids if ndeg[u]
        },
    })
    cfg.path("engagement").write_text(stats.render_table(), encoding="utf-8")
    if "graphml" in cfg.export:
        export.write_graphml(core, cfg.path("graphml"), assignments)
    if "dot" in cfg.export:
        export.write_dot(core, cfg.path("dot"), assignments, labels)
    _update_report(cfg, "analyze", {
        "n_clusters": len(clusters),
        "cluster_sizes": [c.size for c in clusters],
    })


class StageError(CoordnetError):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        return f"{self.stage}: {self.args[0]}"


def run_stage(name: str, cfg: PipelineConfig, **kwargs) -> None:
    """Run one stage, re-raising any failure as a StageError naming it."""
    try:
        STAGES[name](cfg, **kwargs)
    except StageError:
        raise
    except (CoordnetError, OSError, ValueError, KeyError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        raise StageError(name, msg) from exc


STAGES: dict[str, Callable[[PipelineConfig], None]] = {
    "ingest": stage_ingest,
    "classify": stage_classify,
    "embed": stage_embed,
    "knn": stage_knn,
    "induce": stage_induce,
    "prune": stage_prune,
    "analyze": stage_analyze,
}
# artifact whose presence marks a stage as done when resuming
STAGE_OUTPUT = {
    "ingest": "corpus", "classify": "classes", "embed": "embeddings", "knn": "similarity",
    "induce": "coordination", "prune": "core", "analyze": "analysis",
}


def run_pipeline(cfg: PipelineConfig, resume: bool = False) -> dict:
    """Run every stage in order and return the final report."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if not resume and cfg.path("report").exists():
        cfg.path("report").unlink()
    for name in STAGES:
        if resume and cfg.path(STAGE_OUTPUT[name]).exists():
            log.info("%s: output present, skipping", name)
            continue
        run_stage(name, cfg)
    return read_json(cfg.path("report"))


# -- synthetic scenarios ---------------------------------------------------


def run_synth(scenario: ScenarioConfig, out: str | Path) -> tuple[Path, Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    corpus, truth = generate_scenario(scenario)
    corpus_path, truth_path = out / "scenario.jsonl", out / "ground_truth.csv"
    dump_corpus(corpus, corpus_path, "jsonl")
    truth.write_csv(truth_path)
    write_json(out / "scenario.json", scenario.to_dict())
    return corpus_path, truth_path


def run_score(core_path: str | Path, truth_path: str | Path, out: str | Path | None = None) -> dict:
    truth = GroundTruth.read_csv(truth_path)
    core = CoordinationGraph.read_csv(core_path, list(truth))
    scores = score_detection(core, truth)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        write_json(Path(out) / "scores.json", scores)
    return scores


def config_dict(cfg: PipelineConfig) -> dict:
    return asdict(cfg)
