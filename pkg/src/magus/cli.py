"""Command-line entry points.

Each stage of the pipeline is its own command: generate data, build the
graph, train a scorer, train edge weights, run the simulator, serve
sessions over HTTP.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from . import catalog as cat
from . import graph as gr
from . import scorer as sc
from . import weights as wt
from .propagation import PropagationConfig, save_transcripts
from .simulator import run_benchmark


@click.group()
def main():
    """Multiple-round query+item recommender toolkit."""


@main.command("gen-synthetic")
@click.option("--users", type=int, required=True)
@click.option("--items", type=int, required=True)
@click.option("--words", type=int, required=True)
@click.option("--wpi", type=int, required=True, help="words per item")
@click.option("--events", type=int, required=True, help="events per user")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def gen_synthetic_cmd(users, items, words, wpi, events, seed, out):
    """Write a synthetic catalog with planted word preferences."""
    counts = cat.gen_synthetic(users, items, words, wpi, events, seed, out)
    click.echo(json.dumps(counts))


@main.command("build-graph")
@click.option("--catalog", "catalog_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--max-combo", type=int, default=2, show_default=True)
@click.option("--rminus-cap", type=int, default=16, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def build_graph_cmd(catalog_dir, max_combo, rminus_cap, out):
    """Build and save the relational graph for a catalog directory."""
    c = cat.load_catalog_dir(catalog_dir)
    g = gr.build_graph(c, max_combo_size=max_combo, rminus_degree_cap=rminus_cap)
    gr.save_graph(g, out)
    click.echo(json.dumps({
        "nodes": g.n_nodes,
        "edges": len(g.edges),
        "dropped_queries": g.dropped_queries,
    }))


@main.command("build-sessions")
@click.option("--catalog", "catalog_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--size", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-events", type=int, default=30, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def build_sessions_cmd(catalog_dir, size, seed, min_events, out):
    """Temporal-split the catalog and sample one session per test user."""
    c = cat.load_catalog_dir(catalog_dir)
    split = cat.temporal_split(c.log, min_events=min_events)
    sessions = cat.build_sessions(c, split.test, session_size=size, seed=seed)
    cat.save_sessions(sessions, out)
    click.echo(json.dumps({"sessions": len(sessions), "dropped_users": split.dropped_users}))


@main.command("train-scorer")
@click.option("--kind", type=click.Choice(["matfact", "popularity"]), required=True)
@click.option("--catalog", "catalog_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--d", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-events", type=int, default=30, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def train_scorer_cmd(kind, catalog_dir, epochs, d, seed, min_events, out):
    """Train the base recommender on the temporal train split."""
    c = cat.load_catalog_dir(catalog_dir)
    split = cat.temporal_split(c.log, min_events=min_events)
    if kind == "popularity":
        model = sc.train_popularity(split.train, c.n_items)
        click.echo(json.dumps({"kind": kind, "items": c.n_items}))
    else:
        model, losses = sc.train_matfact(
            split.train, c.n_users, c.n_items, d=d, epochs=epochs, seed=seed)
        click.echo(json.dumps({"kind": kind, "loss_first": losses[0],
                               "loss_final": losses[-1]}))
    sc.save_scorer(model, out)


@main.command("train-weights")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--scorer", "scorer_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--catalog", "catalog_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--lr", type=float, default=1e-2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-events", type=int, default=30, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def train_weights_cmd(graph_path, scorer_path, catalog_dir, epochs, lr, seed,
                      min_events, out):
    """Learn edge weights and save the re-weighted graph snapshot."""
    g = gr.load_graph(graph_path)
    model = sc.load_scorer(scorer_path)
    c = cat.load_catalog_dir(catalog_dir)
    split = cat.temporal_split(c.log, min_events=min_events)
    weighted, _, losses = wt.train_weights(
        g, model, split.train, epochs=epochs, lr0=lr, seed=seed)
    gr.save_graph(weighted, out)
    click.echo(json.dumps({"loss_first": losses[0], "loss_final": losses[-1],
                           "edges": len(weighted.edges)}))


@main.command("simulate")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--scorer", "scorer_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--sessions", "sessions_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--agent", type=click.Choice(["strict", "ambiguous"]), default="strict",
              show_default=True)
@click.option("--n", type=int, default=3, show_default=True)
@click.option("--kmax", type=int, default=5, show_default=True)
@click.option("--mode", type=click.Choice(["literal", "delta"]), default="literal",
              show_default=True)
@click.option("--query-boost", type=click.Choice(["max_floor", "literal_min"]),
              default="max_floor", show_default=True)
@click.option("--catalog", "catalog_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="enables query-history boosting when given")
@click.option("--min-events", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", type=click.Path(dir_okay=False), required=True)
@click.option("--transcripts", type=click.Path(dir_okay=False), default=None,
              help="defaults to <report>.transcripts.jsonl")
def simulate_cmd(graph_path, scorer_path, sessions_path, agent, n, kmax, mode,
                 query_boost, catalog_dir, min_events, seed, report, transcripts):
    """Run the user-agent simulation and write a metric report + transcripts."""
    g = gr.load_graph(graph_path)
    model = sc.load_scorer(scorer_path)
    sessions = cat.load_sessions(sessions_path)
    histories = None
    if catalog_dir:
        c = cat.load_catalog_dir(catalog_dir)
        split = cat.temporal_split(c.log, min_events=min_events)
        histories = {}
        for log in (split.train, split.valid):
            for user, qs in log.queries.items():
                histories.setdefault(user, []).extend(fs for fs, _ in qs)
    config = PropagationConfig(n=n, k_max=kmax, mode=mode, query_boost=query_boost)
    [(metric_report, transcript_list)] = run_benchmark(
        g, model, sessions, [agent], [config], query_histories=histories)
    doc = metric_report.as_dict()
    doc["seed"] = seed
    Path(report).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                            encoding="utf-8")
    tpath = transcripts or str(Path(report).with_suffix("")) + ".transcripts.jsonl"
    save_transcripts(transcript_list, tpath)
    click.echo(json.dumps({"ra": metric_report.ra, "sa": metric_report.sa,
                           "sac": metric_report.sac, "sessions": len(sessions)}))


@main.command("serve")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--scorer", "scorer_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--catalog", "catalog_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--sessions", "sessions_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="prebuilt sessions for source=auto (built on the fly otherwise)")
@click.option("--port", type=int, default=8040, show_default=True,
              help="MAGUS_PORT env var wins over this flag")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--n", type=int, default=3, show_default=True)
@click.option("--kmax", type=int, default=5, show_default=True)
@click.option("--mode", type=click.Choice(["literal", "delta"]), default="literal",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-events", type=int, default=30, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="static directory to serve at /")
def serve_cmd(graph_path, scorer_path, catalog_dir, sessions_path, port, host,
              n, kmax, mode, seed, min_events, ui_dir):
    """Serve live sessions over HTTP (and the feedback console, if built)."""
    import uvicorn

    from .service import create_app

    g = gr.load_graph(graph_path)
    model = sc.load_scorer(scorer_path)
    c = cat.load_catalog_dir(catalog_dir)
    split = cat.temporal_split(c.log, min_events=min_events)
    if sessions_path:
        sessions = cat.load_sessions(sessions_path)
    else:
        sessions = cat.build_sessions(c, split.test, seed=seed)
    histories: dict[int, list] = {}
    for log in (split.train, split.valid):
        for user, qs in log.queries.items():
            histories.setdefault(user, []).extend(fs for fs, _ in qs)
    app = create_app(
        g, model, c,
        sessions_by_user={s.user: s for s in sessions},
        query_histories=histories,
        defaults=PropagationConfig(n=n, k_max=kmax, mode=mode),
    )
    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    port = int(os.environ.get("MAGUS_PORT", port))
    uvicorn.run(app, host=host, port=port, log_level="warning")


# per-command console-script aliases keep the documented names working
gen_synthetic_cmd = main.commands["gen-synthetic"]
build_graph_cmd = main.commands["build-graph"]
build_sessions_cmd = main.commands["build-sessions"]
train_scorer_cmd = main.commands["train-scorer"]
train_weights_cmd = main.commands["train-weights"]
simulate_cmd = main.commands["simulate"]
serve_cmd = main.commands["serve"]


if __name__ == "__main__":
    main()
