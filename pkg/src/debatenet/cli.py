"""Command-line pipeline driver.

Each subcommand runs one stage and writes its artifacts into its own
directory of the workspace, together with a ``manifest.json`` holding the
SHA-256 of every input and output, the parameters, the tool version and a
timestamp. A stage refuses to run when an upstream artifact is missing or
has changed since its producer wrote it, unless ``--force`` is given.

Exit status: 0 success, 1 data error, 2 usage or dependency error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import __version__

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2
WORKSPACE_ENV = "DEBATENET_WORKSPACE"
DEFAULT_WORKSPACE = "debatenet-work"


class UsageError(Exception):
    """Bad invocation, configuration or missing upstream stage (exit 2)."""


class DataError(Exception):
    """Input data could not be processed (exit 1)."""


# -- configuration ----------------------------------------------------------

@dataclass
class PipelineConfig:
    archive: Path | None = None
    seeds: Path | None = None
    boundaries: Path | None = None
    fallback_boundaries: Path | None = None
    output: Path = Path(DEFAULT_WORKSPACE)
    filter: dict | None = None
    strict: bool = False
    quote_as: str = "retweet"
    snowball: dict | None = None
    layout: dict = field(default_factory=dict)
    layout_seed: int = 0
    alpha: float = 0.85
    tol: float = 1e-12
    bins: int = 40
    directed_walk: bool = False
    weighted: bool = False
    audit_size: int = 50
    source: Path | None = None

    def layout_params(self):
        from .layout import LayoutParams

        return LayoutParams(**self.layout)

    def corpus_filter(self):
        from .ingest import filter_from_mapping

        return filter_from_mapping(self.filter) if self.filter else None


_SECTIONS = {
    "paths": {"archive", "seeds", "boundaries", "fallback_boundaries", "output"},
    "filter": {"window_start", "window_end", "keywords", "apply_keywords_to"},
    "parse": {"strict", "quote_as"},
    "snowball": {"min_weekly_rate", "weeks", "allow", "deny"},
    "layout": {"seed", "scaling_ratio", "gravity", "iterations", "jitter_tolerance", "linlog",
               "edge_weight_influence", "theta", "barnes_hut", "init_side"},
    "assortativity": {"alpha", "tol", "bins", "directed_walk", "weighted"},
    "classify": {"audit_size"},
}


def _number(value) -> float | None:
    # YAML 1.1 reads "1e-10" (no dot) as a string
    if isinstance(value, bool):
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def load_config(path, workspace: str | None = None) -> PipelineConfig:
    """Read and validate a YAML pipeline config; paths resolve against its folder.

    All problems are collected and reported together as ``section.key: reason``.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"config {path}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config {path}: top level must be a mapping")
    errors: list[str] = []
    cfg = PipelineConfig(source=path)
    base = path.parent

    for section, value in raw.items():
        if section not in _SECTIONS:
            errors.append(f"{section}: unknown section")
        elif value is not None and not isinstance(value, dict):
            errors.append(f"{section}: must be a mapping")
        else:
            for key in value or {}:
                if key not in _SECTIONS[section]:
                    errors.append(f"{section}.{key}: unknown field")

    def section(name) -> dict:
        value = raw.get(name)
        return value if isinstance(value, dict) else {}

    paths = section("paths")
    for key in ("archive", "seeds", "boundaries", "fallback_boundaries"):
        if paths.get(key) is None:
            continue
        p = (base / str(paths[key])).resolve()
        if not p.is_file():
            errors.append(f"paths.{key}: file not found: {p}")
        setattr(cfg, key, p)
    if paths.get("output") is not None:
        cfg.output = (base / str(paths["output"])).resolve()
    elif workspace or os.environ.get(WORKSPACE_ENV):
        cfg.output = Path(workspace or os.environ[WORKSPACE_ENV]).resolve()
    else:
        cfg.output = (base / DEFAULT_WORKSPACE).resolve()

    if raw.get("filter"):
        cfg.filter = dict(section("filter"))
        try:
            cfg.corpus_filter()
        except (ValueError, TypeError) as exc:
            errors.append(f"filter: {exc}")

    parse = section("parse")
    if "strict" in parse:
        if not isinstance(parse["strict"], bool):
            errors.append("parse.strict: must be true or false")
        else:
            cfg.strict = parse["strict"]
    if "quote_as" in parse:
        if parse["quote_as"] not in ("retweet", "original", "drop"):
            errors.append("parse.quote_as: must be retweet, original or drop")
        else:
            cfg.quote_as = parse["quote_as"]

    if raw.get("snowball") is not None:
        snow = dict(section("snowball"))
        rate = snow.get("min_weekly_rate")
        if not isinstance(rate, (int, float)) or isinstance(rate, bool) or rate <= 0:
            errors.append("snowball.min_weekly_rate: must be a positive number")
        weeks = snow.get("weeks")
        if weeks is not None and (not isinstance(weeks, (int, float)) or weeks < 1):
            errors.append("snowball.weeks: must be a number >= 1")
        cfg.snowball = snow

    lay = dict(section("layout"))
    seed = lay.pop("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append("layout.seed: must be a non-negative integer")
    else:
        cfg.layout_seed = seed
    cfg.layout = {k: v for k, v in lay.items() if k in _SECTIONS["layout"]}
    try:
        cfg.layout_params()
    except (ValueError, TypeError) as exc:
        errors.append(f"layout: {exc}")

    ass = section("assortativity")
    alpha = _number(ass.get("alpha", cfg.alpha))
    if alpha is None or not 0 < alpha < 1:
        errors.append("assortativity.alpha: must lie strictly between 0 and 1")
    else:
        cfg.alpha = float(alpha)
    tol = _number(ass.get("tol", cfg.tol))
    if tol is None or not tol > 0:
        errors.append("assortativity.tol: must be a positive number")
    else:
        cfg.tol = float(tol)
    bins = ass.get("bins", cfg.bins)
    if not isinstance(bins, int) or isinstance(bins, bool) or bins < 1:
        errors.append("assortativity.bins: must be a positive integer")
    else:
        cfg.bins = bins
    for key in ("directed_walk", "weighted"):
        if key in ass:
            if not isinstance(ass[key], bool):
                errors.append(f"assortativity.{key}: must be true or false")
            else:
                setattr(cfg, key, ass[key])

    audit = section("classify").get("audit_size", cfg.audit_size)
    if not isinstance(audit, int) or isinstance(audit, bool) or audit < 0:
        errors.append("classify.audit_size: must be a non-negative integer")
    else:
        cfg.audit_size = audit

    if errors:
        raise UsageError(f"invalid config {path}:\n  " + "\n  ".join(errors))
    return cfg


# -- workspace and manifests ------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


# (stage directory, command name, handler name) for dependency messages
STAGES = {
    "ingest": ("ingest", "cmd_ingest"),
    "retweet": ("retweet-net", "cmd_retweet_net"),
    "forest": ("forest", "cmd_forest"),
    "layout": ("layout", "cmd_layout"),
    "classify": ("classify", "cmd_classify"),
    "assort": ("assort", "cmd_assort"),
    "stats": ("stats", "cmd_stats"),
    "report": ("report", "cmd_report"),
}


class Stage:
    """One stage run: collects inputs and outputs, then writes the manifest."""

    def __init__(self, root: Path, name: str, force: bool = False):
        self.root = Path(root)
        self.name = name
        self.dir = self.root / name
        self.force = force
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.params: dict = {}

    def _key(self, path: Path) -> str:
        path = Path(path).resolve()
        try:
            return path.relative_to(self.root.resolve()).as_posix()
        except ValueError:
            return str(path)

    def external(self, path) -> Path:
        path = Path(path)
        self.inputs[self._key(path)] = sha256_file(path)
        return path

    def require(self, producer: str, name: str) -> Path:
        """Path of an upstream artifact, after checking it exists and is current."""
        path = self.root / producer / name
        manifest = self.root / producer / "manifest.json"
        command, handler = STAGES[producer]
        if not path.is_file() or not manifest.is_file():
            raise UsageError(
                f"missing {producer} artifact {path}; run `debatenet {command}` first ({handler})"
            )
        record = json.loads(manifest.read_text(encoding="utf-8"))
        digest = sha256_file(path)
        stale = []
        if record.get("outputs", {}).get(name) != digest:
            stale.append(f"{producer}/{name} changed after {command} wrote it")
        for key, recorded in record.get("inputs", {}).items():
            upstream = self.root / key
            if not Path(key).is_absolute() and upstream.is_file() and sha256_file(upstream) != recorded:
                stale.append(f"{key} changed since {command} ran")
        if stale and not self.force:
            raise UsageError(
                "stale upstream artifacts (rerun the named stages or pass --force):\n  " + "\n  ".join(stale)
            )
        self.inputs[self._key(path)] = digest
        return path

    def write(self, name: str, data: bytes) -> Path:
        path = self.dir / name
        atomic_write(path, data)
        self.outputs[name] = hashlib.sha256(data).hexdigest()
        return path

    def finish(self) -> None:
        manifest = {
            "stage": self.name,
            "tool": "debatenet",
            "version": __version__,
            "timestamp": _timestamp(),
            "parameters": self.params,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
        }
        atomic_write(self.dir / "manifest.json", (json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n").encode())


def _kv(pairs) -> bytes:
    return "".join(f"{k}\t{v}\n" for k, v in pairs).encode("utf-8")


def _read_kv(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        k, _, v = line.partition("\t")
        out[k] = v
    return out


def _fmt(x: float) -> str:
    return "nan" if x != x else repr(float(x))


# -- stages -----------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig, args) -> int:
    from .ingest import apply_filter, parse_archive, read_seeds, seeds_bytes, serialize_records, snowball_expand

    if cfg.archive is None:
        raise UsageError("config: paths.archive is required for ingest")
    if cfg.seeds is None:
        raise UsageError("config: paths.seeds is required for ingest")
    st = Stage(cfg.output, "ingest", args.force)
    strict = cfg.strict or args.strict
    with open(st.external(cfg.archive), encoding="utf-8") as fh:
        records, errors = parse_archive(fh, strict=strict, quote_as=cfg.quote_as)
    seeds = read_seeds(st.external(cfg.seeds))
    filt = cfg.corpus_filter()
    event = apply_filter(records, filt) if filt else list(records)
    if not event:
        raise DataError("no records left after filtering")
    if cfg.snowball:
        seeds = snowball_expand(
            event, seeds, cfg.snowball["min_weekly_rate"], cfg.snowball.get("weeks"),
            cfg.snowball.get("allow"), cfg.snowball.get("deny"),
        )
    st.params = {"strict": strict, "quote_as": cfg.quote_as, "filter": cfg.filter, "snowball": cfg.snowball}
    st.write("event.jsonl", serialize_records(event))
    st.write("background.jsonl", serialize_records(records))
    st.write("seeds.tsv", seeds_bytes(seeds))
    st.write("parse_errors.tsv", _kv((e.line, e.message) for e in errors))
    st.write("summary.txt", _kv([
        ("records", len(records)), ("event_records", len(event)),
        ("parse_errors", len(errors)), ("seeds", len(seeds.user_ids)),
    ]))
    st.finish()
    print(f"ingest: {len(records)} records, {len(event)} in event corpus, {len(errors)} skipped lines")
    return EXIT_OK


def _records(path):
    from .ingest import read_archive

    return read_archive(path, strict=True).records


def cmd_retweet_net(cfg: PipelineConfig, args) -> int:
    from .graph import edgelist_bytes, restrict, retweet_network, weak_components

    st = Stage(cfg.output, "retweet", args.force)
    summary = []
    for name in ("event", "background"):
        graph = retweet_network(_records(st.require("ingest", f"{name}.jsonl")))
        comps = weak_components(graph)
        giant = restrict(graph, comps.giant)
        st.write(f"{name}_edges.tsv", edgelist_bytes(graph))
        st.write(f"{name}_giant.tsv", edgelist_bytes(giant))
        summary += [
            (f"{name}_nodes", len(graph)), (f"{name}_edges", graph.number_of_edges()),
            (f"{name}_retweets", graph.total_weight()), (f"{name}_self_retweets", graph.self_loops),
            (f"{name}_components", len(comps.sizes)), (f"{name}_giant_nodes", len(giant)),
        ]
    st.write("summary.txt", _kv(summary))
    st.finish()
    print(f"retweet-net: event giant component {dict(summary)['event_giant_nodes']} nodes")
    return EXIT_OK


def cmd_forest(cfg: PipelineConfig, args) -> int:
    from .forest import aggregate_reply_network, build_forest, forest_to_jsonl, metrics_csv
    from .graph import edgelist_bytes
    from .ingest import read_seeds

    st = Stage(cfg.output, "forest", args.force)
    records = _records(st.require("ingest", "event.jsonl"))
    seeds = read_seeds(st.require("ingest", "seeds.tsv"))
    strict = cfg.strict or args.strict
    forest = build_forest(records, seeds, strict=strict)
    if not forest.trees:
        raise DataError("no seed-authored root posts in the event corpus")
    net = aggregate_reply_network(forest)
    st.params = {"strict": strict}
    st.write("trees.jsonl", forest_to_jsonl(forest))
    st.write("metrics.csv", metrics_csv(forest))
    st.write("reply_edges.tsv", edgelist_bytes(net))
    st.write("summary.txt", _kv([
        ("trees", len(forest)), ("replies", forest.reply_count()),
        ("reply_network_nodes", len(net)), ("reply_network_edges", net.number_of_edges()),
        ("reply_edge_mass", net.total_weight()), ("self_replies", net.self_loops),
        ("orphans", forest.orphans), ("unrooted", forest.unrooted),
        ("time_violations", forest.time_violations), ("duplicates", forest.duplicates),
    ]))
    st.finish()
    print(f"forest: {len(forest)} trees, {forest.reply_count()} replies")
    return EXIT_OK


def cmd_layout(cfg: PipelineConfig, args) -> int:
    from .graph import read_edgelist
    from .layout import BACKEND, LayoutError, embedding_csv, spatialize

    st = Stage(cfg.output, "layout", args.force)
    params = cfg.layout_params()
    seed = cfg.layout_seed if args.seed is None else args.seed
    st.params = {"layout": asdict(params), "seed": seed}
    for name in ("event", "background"):
        graph = read_edgelist(st.require("retweet", f"{name}_giant.tsv"))
        if len(graph) == 0:
            raise DataError(f"{name} retweet network is empty")
        started = time.perf_counter()
        try:
            emb = spatialize(graph, params, seed=seed, threads=args.threads)
        except LayoutError as exc:
            raise DataError(f"{name} layout: {exc}") from None
        st.write(f"{name}_embedding.csv", embedding_csv(emb))
        print(f"layout: {name} network, {len(graph)} nodes, {time.perf_counter() - started:.1f}s ({BACKEND} backend)")
    st.finish()
    return EXIT_OK


def cmd_classify(cfg: PipelineConfig, args) -> int:
    from .classify import (
        BoundaryError, Label, assign_clusters, audit_sample, coverage, fallback_merge,
        read_boundaries, suggest_boundaries,
    )
    from .forest import forest_from_jsonl, reply_network_users, reply_users
    from .layout import read_embedding

    st = Stage(cfg.output, "classify", args.force)
    results = {}
    sources = {}
    for name, given in (("event", cfg.boundaries), ("background", cfg.fallback_boundaries)):
        emb = read_embedding(st.require("layout", f"{name}_embedding.csv"))
        try:
            if given is not None:
                spec = read_boundaries(st.external(given))
                sources[name] = "given"
            else:
                spec = suggest_boundaries(emb)
                sources[name] = "suggested"
        except BoundaryError as exc:
            raise DataError(f"{name} boundaries: {exc}") from None
        st.write(f"{name}_boundaries.txt", spec.to_text().encode("utf-8"))
        results[name] = assign_clusters(emb, spec)
        st.write(f"{name}_clusters.csv", results[name].to_csv())
    trees = forest_from_jsonl(st.require("forest", "trees.jsonl").read_bytes())
    users = reply_users(trees) | reply_network_users(trees)
    merged = fallback_merge(results["event"], results["background"], sorted(users))
    seed = 0 if args.seed is None else args.seed
    st.params = {"boundaries": sources, "audit_size": cfg.audit_size, "audit_seed": seed}
    st.write("reply_clusters.csv", merged.to_csv())
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["user_id", "label"])
    wr.writerows(audit_sample(results["event"], cfg.audit_size, seed=seed))
    st.write("audit_sample.csv", out.getvalue().encode("utf-8"))
    counts = results["event"].counts()
    cov = coverage(merged, users) if users else float("nan")
    st.write("summary.txt", _kv(
        [(f"event_{lab.value.lower()}", counts[lab]) for lab in Label]
        + [("reply_users", len(users)), ("reply_coverage", _fmt(cov))]
        + [(f"boundaries_{k}", v) for k, v in sources.items()]
    ))
    st.finish()
    print(f"classify: {sum(counts.values())} event users, reply coverage {cov:.3f}")
    return EXIT_OK


def cmd_assort(cfg: PipelineConfig, args) -> int:
    from .assortativity import AssortativityError, assort_histogram, assortativity_profile, weighted_mean
    from .classify import KNOWN_LABELS, ClusterAssignment
    from .graph import read_edgelist

    st = Stage(cfg.output, "assort", args.force)
    labels = ClusterAssignment.from_csv(st.require("classify", "reply_clusters.csv").read_bytes())
    graph = read_edgelist(st.require("forest", "reply_edges.tsv"))
    st.params = {"alpha": cfg.alpha, "tol": cfg.tol, "bins": cfg.bins,
                 "directed_walk": cfg.directed_walk, "weighted": cfg.weighted}
    try:
        prof = assortativity_profile(graph, labels, cfg.alpha, cfg.tol, threads=args.threads,
                                     weighted=cfg.weighted, directed=cfg.directed_walk)
    except AssortativityError as exc:
        raise DataError(str(exc)) from None
    hist = assort_histogram(prof, labels, cfg.bins)
    st.write("profile.csv", prof.to_csv(labels))
    st.write("histogram.csv", hist.to_csv())
    st.write("summary.txt", _kv(
        [("global_r", _fmt(prof.global_r)), ("nodes", len(prof.r)), ("flagged_zero_mass", len(prof.flagged))]
        + [(f"mean_r_{lab.value.lower()}", _fmt(weighted_mean(prof, labels.users(lab)))) for lab in KNOWN_LABELS]
    ))
    st.finish()
    print(f"assort: {len(prof.r)} nodes, global r = {prof.global_r:.4f}")
    return EXIT_OK


def cmd_stats(cfg: PipelineConfig, args) -> int:
    from .classify import ClusterAssignment, Label
    from .forest import forest_from_jsonl, reply_network_users
    from .graph import read_edgelist
    from .ingest import read_seeds
    from .stats import (
        engagement_table, first_order_table, interaction_matrix, participation_csv,
        participation_share, participation_tests, tests_csv,
    )

    st = Stage(cfg.output, "stats", args.force)
    trees = forest_from_jsonl(st.require("forest", "trees.jsonl").read_bytes())
    net = read_edgelist(st.require("forest", "reply_edges.tsv"))
    event = ClusterAssignment.from_csv(st.require("classify", "event_clusters.csv").read_bytes())
    labels = ClusterAssignment.from_csv(st.require("classify", "reply_clusters.csv").read_bytes())
    seeds = read_seeds(st.require("ingest", "seeds.tsv"))
    if not trees:
        raise DataError("forest has no trees")
    st.write("engagement.csv", engagement_table(trees, labels).to_csv())
    st.write("first_order.csv", first_order_table(trees, labels).to_csv())
    shares = participation_share(event, reply_network_users(trees), seeds.user_ids)
    st.write("participation.csv", participation_csv(shares))
    st.write("tests.csv", tests_csv(participation_tests(shares)))
    st.write("interaction_matrix.csv", interaction_matrix(net, labels).to_csv())
    st.finish()
    maj, mino = shares[Label.MAJORITY], shares[Label.MINORITY]
    print(f"stats: participation majority {maj.share:.3f}, minority {mino.share:.3f}")
    return EXIT_OK


def cmd_report(cfg: PipelineConfig, args) -> int:
    from .assortativity import AssortHistogram
    from .classify import KNOWN_LABELS, ClusterAssignment, read_boundaries
    from .forest import ccdf, forest_from_jsonl, tree_metrics
    from .layout import read_embedding
    from . import plots
    import numpy as np

    st = Stage(cfg.output, "report", args.force)
    tables = [
        ("stats", "engagement.csv"), ("stats", "first_order.csv"), ("stats", "participation.csv"),
        ("stats", "tests.csv"), ("stats", "interaction_matrix.csv"),
        ("assort", "histogram.csv"), ("assort", "profile.csv"), ("forest", "metrics.csv"),
        ("classify", "audit_sample.csv"),
    ]
    for stage, name in tables:
        st.write(name, st.require(stage, name).read_bytes())

    emb = read_embedding(st.require("layout", "event_embedding.csv"))
    clusters = ClusterAssignment.from_csv(st.require("classify", "event_clusters.csv").read_bytes())
    spec = read_boundaries(st.require("classify", "event_boundaries.txt"))
    st.write("layout_event.svg", plots.layout_svg(emb, clusters, spec, "event retweet network"))

    trees = forest_from_jsonl(st.require("forest", "trees.jsonl").read_bytes())
    metrics = [tree_metrics(t) for t in trees]
    st.write("ccdf_size.svg", plots.ccdf_svg({"S": ccdf([m.size for m in metrics])}, "tree size S"))
    st.write("ccdf_depth.svg", plots.ccdf_svg({"D": ccdf([m.depth + 1 for m in metrics])}, "tree depth D + 1"))

    rows = list(csv.DictReader(io.StringIO(st.require("assort", "histogram.csv").read_text(encoding="utf-8"))))
    edges = np.array([float(r["bin_lo"]) for r in rows] + [float(rows[-1]["bin_hi"])])
    mass = {lab: np.array([float(r[f"mass_{lab.value.lower()}"]) for r in rows]) for lab in KNOWN_LABELS}
    hist = AssortHistogram(edges, mass, np.array([float(r["mass_all"]) for r in rows]))
    st.write("assort_histogram.svg", plots.histogram_svg(hist, "local assortativity (z-weighted)"))

    lines = ["debatenet report", ""]
    for stage in ("ingest", "retweet", "forest", "classify", "assort"):
        lines.append(f"[{stage}]")
        lines.extend(f"{k} = {v}" for k, v in _read_kv(st.require(stage, "summary.txt")).items())
        lines.append("")
    sizes = np.array([m.size for m in metrics])
    depths = np.array([m.depth for m in metrics])
    lines.append("[trees]")
    lines.append(f"share_size_below_10 = {_fmt(float(np.mean(sizes < 10)))}")
    lines.append(f"share_depth_below_5 = {_fmt(float(np.mean(depths < 5)))}")
    st.write("report.txt", ("\n".join(lines) + "\n").encode("utf-8"))
    st.finish()
    print(f"report: written to {st.dir}")
    return EXIT_OK


def cmd_synth(cfg, args) -> int:
    from .ingest import seeds_bytes
    from .synth import generate, paper_pattern, symmetric_pattern

    seed = 0 if args.seed is None else args.seed
    if args.preset == "paper":
        params = paper_pattern(seed=seed, n_users=args.users)
    else:
        params = symmetric_pattern(seed=seed, n_per_group=args.users // 2)
    corpus = generate(params)
    out = Path(args.out or os.environ.get(WORKSPACE_ENV) or "synthetic").resolve()
    st = Stage(out, ".", force=True)
    st.dir = out
    st.params = asdict(params)
    st.write("corpus.jsonl", corpus.archive_bytes())
    st.write("seeds.tsv", seeds_bytes(corpus.seeds))
    st.write("truth.csv", corpus.truth_csv())
    st.write("params.json", corpus.params_json())
    config = {
        "paths": {"archive": "corpus.jsonl", "seeds": "seeds.tsv", "output": "work"},
        "filter": {"window_start": params.window_start, "window_end": params.window_end,
                   "keywords": [params.keyword]},
        "layout": {"seed": 1, "iterations": 1000},
    }
    st.write("config.yaml", yaml.safe_dump(config, sort_keys=False).encode("utf-8"))
    st.finish()
    print(f"synth: {len(corpus.records)} records for {len(corpus.truth)} users in {out}")
    return EXIT_OK


PIPELINE = [
    ("ingest", cmd_ingest), ("retweet-net", cmd_retweet_net), ("forest", cmd_forest),
    ("layout", cmd_layout), ("classify", cmd_classify), ("assort", cmd_assort),
    ("stats", cmd_stats), ("report", cmd_report),
]


def cmd_run(cfg: PipelineConfig, args) -> int:
    for _, handler in PIPELINE:
        handler(cfg, args)
    return EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML pipeline config")
    common.add_argument("--seed", type=int, default=None, metavar="N", help="random seed (layout, audit sample, synth)")
    common.add_argument("--strict", action="store_true", help="fail on the first malformed record")
    common.add_argument("--force", action="store_true", help="run even if upstream artifacts are stale")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (results do not depend on it)")
    common.add_argument("--workspace", metavar="DIR", help=f"workspace directory (default: ${WORKSPACE_ENV} or the config's paths.output)")

    parser = argparse.ArgumentParser(prog="debatenet", description="Retweet and reply network analysis of online debates.")
    parser.add_argument("--version", action="version", version=f"debatenet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "parse and filter the archive, expand seeds",
        "retweet-net": "build event and background retweet networks",
        "forest": "build reply trees and the reply network",
        "layout": "force-directed layouts of both retweet networks",
        "classify": "assign opinion clusters from pole regions",
        "assort": "global and local assortativity of the reply network",
        "stats": "engagement tables, participation tests, interaction matrix",
        "report": "collect tables and figures into one directory",
        "run": "run every stage in order",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    syn = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus with ground truth")
    syn.add_argument("--out", metavar="DIR", help="output directory")
    syn.add_argument("--preset", choices=("paper", "symmetric"), default="paper")
    syn.add_argument("--users", type=int, default=10_000, help="retweeting population size")
    return parser


HANDLERS = dict(PIPELINE, run=cmd_run)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        if args.command == "synth":
            if args.users < 10:
                raise UsageError("--users must be at least 10")
            return cmd_synth(None, args)
        if not args.config:
            raise UsageError(f"{args.command}: --config is required")
        cfg = load_config(args.config, args.workspace)
        if args.workspace:
            cfg.output = Path(args.workspace).resolve()
        return HANDLERS[args.command](cfg, args)
    except UsageError as exc:
        print(f"debatenet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"debatenet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError, OSError) as exc:
        print(f"debatenet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
