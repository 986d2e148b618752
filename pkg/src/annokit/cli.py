"""Command-line interface.

Subcommands mirror the pipeline stages: ingest-validate, graph, select,
retrieve, score, metrics, trials, gen-synthetic.  Exit codes: 0 success,
1 configuration error, 2 data error, 3 scorer/transport error; diagnostics
go to stderr.  With fixed inputs, flags and seeds every primary output file
is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import confidence as conf
from . import datamodel as dm
from . import metrics as mx
from . import retrieval as rt
from . import selectors as sel
from .errors import AnnokitError, ConfigError, DataError, ScorerError
from .simgraph import build_knn_graph


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the exit-code contract."""

    def error(self, message):
        raise ConfigError(message)


def _load_file_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except Exception as exc:
            raise ConfigError(f"{p}: invalid TOML: {exc}") from None
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: config must be a table/object")
    return data


_CONFIG_FIELDS = ("method", "budget", "k", "rho", "seed",
                  "stage_one_count", "lc_round_size", "single_pass")


def _selection_config(args) -> dm.SelectionConfig:
    """File config overlaid by explicitly-passed flags."""
    merged = {k: v for k, v in _load_file_config(getattr(args, "config", None)).items()
              if k in _CONFIG_FIELDS}
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            merged[name] = value
    if "method" not in merged:
        raise ConfigError("no selection method given (flag --method or config file)")
    if "budget" not in merged:
        raise ConfigError("no budget given (flag --budget or config file)")
    if merged["budget"] < 1:
        raise ConfigError("budget must be >= 1")
    return dm.SelectionConfig(**merged)


def _add_pool_args(p: _Parser, name: str = "--pool", required: bool = True):
    p.add_argument(name, required=required, help="pool file")
    p.add_argument("--format", choices=("jsonl", "binmat"), default="jsonl")
    p.add_argument("--ids", default=None, help="sidecar id file (binmat only)")


def _load_pool(args, attr: str = "pool") -> dm.Pool:
    return dm.load_pool(getattr(args, attr), format=args.format, ids_path=args.ids)


def _make_scorer(args, pool: dm.Pool) -> conf.ConfidenceScorer:
    kind = getattr(args, "scorer", "mock") or "mock"
    if kind == "mock":
        return conf.MockScorer(pool)
    if kind == "file":
        if not args.scores:
            raise ConfigError("--scorer file requires --scores")
        if not Path(args.scores).exists():
            raise DataError(f"scores file not found: {args.scores}")
        return conf.FileScorer.from_file(args.scores)
    if kind == "remote":
        template = rt.load_template(args.template) if args.template else rt.DEFAULT_TEMPLATE
        render = lambda demos, text: rt.assemble_prompt(demos, text, template)
        return conf.RemoteScorer(
            url=args.lm_url, token=args.lm_token,
            render_prompt=render, max_tokens=args.max_tokens,
        )
    raise ConfigError(f"unknown scorer {kind!r}")


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands

def cmd_ingest_validate(args) -> int:
    pool = _load_pool(args)
    labeled = sum(1 for inst in pool.instances if inst.label is not None)
    print(f"ok: {len(pool)} instances, dim={pool.dim}, labeled={labeled}")
    return 0


def cmd_graph(args) -> int:
    pool = _load_pool(args)
    graph = build_knn_graph(pool, args.k)
    if args.out:
        _write_json(graph.to_json_dict(), args.out)
    print(f"graph: n={graph.n} k={graph.k} out_degree={graph.out_degree}")
    return 0


def cmd_select(args) -> int:
    config = _selection_config(args)
    pool = _load_pool(args)
    scorer = None
    if config.method in ("vote_k", "least_confidence"):
        scorer = _make_scorer(args, pool)
    started = time.monotonic()
    result = sel.select(pool, config, scorer=scorer, max_workers=args.threads)
    elapsed = time.monotonic() - started
    dm.save_result(result, args.out)
    print(f"method={config.method} M={config.budget} wall={elapsed:.2f}s -> {args.out}")
    return 0


def cmd_score(args) -> int:
    pool = _load_pool(args)
    scorer = _make_scorer(args, pool)
    demos: list[conf.Demonstration] = []
    if args.demos_result:
        result = dm.load_result(args.demos_result)
        for sid in result.selected:
            inst = pool[sid]
            label = inst.label
            if label is None:
                if scorer.needs_labels:
                    raise DataError(f"no label for demonstration id {sid!r}")
                label = inst.id
            demos.append(conf.Demonstration(inst.text or inst.id, label, source_id=sid))
    table = conf.score_pool(scorer, demos, pool.instances, max_workers=args.threads)
    conf.save_confidence_table(table, args.out)
    print(f"scored {len(table)} instances -> {args.out}")
    return 0


def cmd_retrieve(args) -> int:
    annotated = _load_pool(args, attr="annotated")
    template = rt.load_template(args.template) if args.template else rt.DEFAULT_TEMPLATE
    queries_path = Path(args.queries)
    if not queries_path.exists():
        raise DataError(f"queries file not found: {queries_path}")

    sink = sys.stdout if args.out is None else open(args.out, "w", encoding="utf-8")
    count = 0
    try:
        with open(queries_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    query = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{queries_path}:{lineno}: invalid JSON: {exc}") from None
                if not isinstance(query, dict) or "embedding" not in query:
                    raise DataError(f"{queries_path}:{lineno}: query needs an 'embedding'")
                result = rt.retrieve(
                    annotated,
                    query["embedding"],
                    token_budget=args.budget,
                    max_examples=args.max_examples,
                    template=template,
                    query_text=query.get("text"),
                )
                payload = {"query_id": query.get("id", f"q{lineno}")}
                payload.update(result.to_json_dict())
                sink.write(json.dumps(payload, sort_keys=True) + "\n")
                count += 1
    finally:
        if sink is not sys.stdout:
            sink.close()
    print(f"retrieved for {count} queries", file=sys.stderr)
    return 0


def cmd_metrics(args) -> int:
    pool = _load_pool(args)
    result = dm.load_result(args.result)
    names = tuple(name.strip() for name in args.metrics.split(",") if name.strip())
    report = mx.compute_metrics(result.selected, pool, names)
    _write_json(report.to_json_dict(), args.out)
    return 0


def cmd_trials(args) -> int:
    pool = _load_pool(args)
    names = tuple(name.strip() for name in args.metrics.split(",") if name.strip())
    budgets = ([int(b) for b in args.budgets.split(",")] if args.budgets
               else [None])
    csv_rows = []
    payloads = []
    for budget in budgets:
        if budget is not None:
            args.budget = budget
        config = _selection_config(args)
        summary = mx.run_trials(
            pool, config,
            trials=args.trials,
            subsample_n=args.subsample_n,
            base_seed=args.base_seed,
            metrics=names,
        )
        payloads.append(summary.to_json_dict())
        for metric, stats in summary.stats().items():
            csv_rows.append((config.budget, config.method, metric,
                             stats["mean"], stats["min"], stats["max"]))
    _write_json(payloads[0] if len(payloads) == 1 else {"sweeps": payloads}, args.out)
    if args.csv:
        mx.write_sweep_csv(args.csv, csv_rows)
    return 0


def cmd_gen_synthetic(args) -> int:
    pool = mx.make_clustered_pool(
        clusters=args.clusters,
        per_cluster=args.per_cluster,
        dim=args.dim,
        seed=args.seed,
        center_scale=args.center_scale,
        spread=args.spread,
        with_labels=not args.no_labels,
        with_text=not args.no_text,
    )
    dm.save_pool_jsonl(pool, args.out)
    print(f"wrote {len(pool)} instances ({args.clusters} clusters, dim={args.dim}) -> {args.out}")
    return 0


# ---------------------------------------------------------------- wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="annokit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-validate", parents=[], help="load a pool and report/validate it")
    _add_pool_args(p)
    p.set_defaults(func=cmd_ingest_validate)

    p = sub.add_parser("graph", help="build the kNN graph (optional JSON dump)")
    _add_pool_args(p)
    p.add_argument("-k", type=int, default=150, help="neighbors per vertex")
    p.add_argument("--out", default=None, help="debug JSON adjacency dump")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("select", help="run a selective-annotation method")
    _add_pool_args(p)
    p.add_argument("--config", default=None, help="TOML/JSON config file (flags override)")
    p.add_argument("--method", choices=dm.SELECTION_METHODS, default=None)
    p.add_argument("--budget", type=int, default=None, help="number of instances to select")
    p.add_argument("-k", type=int, default=None, help="kNN graph degree (default 150)")
    p.add_argument("--rho", type=float, default=None, help="vote discount base (default 10)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stage-one-count", dest="stage_one_count", type=int, default=None)
    p.add_argument("--lc-round-size", dest="lc_round_size", type=int, default=None)
    p.add_argument("--single-pass", dest="single_pass", action="store_true", default=False,
                   help="fast_vote_k: one scoring pass, top-M outright")
    p.add_argument("--scorer", choices=("mock", "file", "remote"), default="mock")
    p.add_argument("--scores", default=None, help="confidence table (scorer=file)")
    p.add_argument("--lm-url", default=None, help="remote scorer URL")
    p.add_argument("--lm-token", default=None)
    p.add_argument("--template", default=None, help="prompt template file (remote scorer)")
    p.add_argument("--max-tokens", type=int, default=64)
    p.add_argument("--threads", type=int, default=None, help="scoring concurrency")
    p.add_argument("--out", required=True, help="selection result JSON")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("score", help="run a scorer over a pool -> confidence table")
    _add_pool_args(p)
    p.add_argument("--scorer", choices=("mock", "file", "remote"), default="mock")
    p.add_argument("--scores", default=None)
    p.add_argument("--lm-url", default=None)
    p.add_argument("--lm-token", default=None)
    p.add_argument("--template", default=None)
    p.add_argument("--max-tokens", type=int, default=64)
    p.add_argument("--demos-result", default=None,
                   help="selection result whose picks become demonstrations")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("retrieve", help="retrieve demonstrations per query")
    p.add_argument("--annotated", required=True, help="labeled pool file")
    p.add_argument("--format", choices=("jsonl", "binmat"), default="jsonl")
    p.add_argument("--ids", default=None)
    p.add_argument("--queries", required=True, help="JSONL of {id, embedding, text?}")
    p.add_argument("--budget", type=int, default=rt.DEFAULT_TOKEN_BUDGET, help="token budget")
    p.add_argument("--max-examples", type=int, default=None)
    p.add_argument("--template", default=None)
    p.add_argument("--out", default=None, help="JSONL output (default stdout)")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("metrics", help="metrics for a saved selection")
    _add_pool_args(p)
    p.add_argument("--result", required=True)
    p.add_argument("--metrics", default="div_f,repr")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("trials", help="stability-trial harness")
    _add_pool_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--method", choices=dm.SELECTION_METHODS, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--budgets", default=None, help="comma list for a budget sweep")
    p.add_argument("-k", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stage-one-count", dest="stage_one_count", type=int, default=None)
    p.add_argument("--lc-round-size", dest="lc_round_size", type=int, default=None)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--subsample-n", dest="subsample_n", type=int, default=3000)
    p.add_argument("--base-seed", dest="base_seed", type=int, default=0)
    p.add_argument("--metrics", default="div_f,repr")
    p.add_argument("--csv", default=None, help="budget-sweep CSV output")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_trials, single_pass=False)

    p = sub.add_parser("gen-synthetic", help="seeded Gaussian-cluster pool")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--per-cluster", dest="per_cluster", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--center-scale", dest="center_scale", type=float, default=5.0)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--no-labels", action="store_true")
    p.add_argument("--no-text", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScorerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AnnokitError as exc:  # safety net for future kinds
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
