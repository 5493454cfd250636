"""Command-line entry point: ingest, ask, eval, inspect.

Exit codes: 0 success, 2 usage, 3 knowledge-base error, 4 backend error.
Mock mode (--mock) wires fixture-backed backends from --fixtures.
"""

import json
import logging
import os
import sys
from typing import Optional

import click

from .backends import BackendConfigError, BackendError, build_http_suite
from .config import EngineConfig
from .evalqa import load_items, run_eval, write_results
from .ingest import IngestError, ingest_video
from .kb import KBError, load_kb, top_k_search
from .mocks import build_mock_suite, load_fixture_meta
from .runtime import EpisodeAborted, run_episode
from .util import fmt_seconds

EXIT_KB_ERROR = 3
EXIT_BACKEND_ERROR = 4

logger = logging.getLogger(__name__)


class Env:
    def __init__(self, config: EngineConfig, mock: bool, fixtures: str,
                 as_json: bool, trace_dir: Optional[str], jobs: int,
                 seed: int, force: bool):
        self.config = config
        self.mock = mock
        self.fixtures = fixtures
        self.as_json = as_json
        self.trace_dir = trace_dir
        self.jobs = jobs
        self.seed = seed
        self.force = force


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON config overriding engine defaults")
@click.option("--mock", is_flag=True, help="use fixture-backed mock backends")
@click.option("--fixtures", default="fixtures/video", show_default=True,
              help="fixture directory for mock mode")
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.option("--trace-dir", default=None, help="directory for episode trace files")
@click.option("--jobs", default=4, show_default=True, help="eval episode concurrency")
@click.option("--seed", default=0, show_default=True,
              help="seed for randomized fixture utilities")
@click.option("--force", is_flag=True, help="overwrite existing output directories")
@click.pass_context
def main(ctx, config_path, mock, fixtures, as_json, trace_dir, jobs, seed, force):
    """Agentic video question answering over a compiled knowledge base."""
    config = EngineConfig.from_file(config_path) if config_path else EngineConfig()
    ctx.obj = Env(config=config, mock=mock, fixtures=fixtures, as_json=as_json,
                  trace_dir=trace_dir, jobs=jobs, seed=seed, force=force)


def _episode_suite(env: Env, episode_key: Optional[str]):
    if env.mock:
        return build_mock_suite(env.fixtures, env.config.clip_len,
                                episode_key=episode_key)
    return build_http_suite(env.config)


@main.command()
@click.argument("video_ref")
@click.argument("out_dir")
@click.option("--duration", type=float, default=None,
              help="video duration in seconds (mock mode reads meta.json)")
@click.option("--video-id", default=None, help="logical id (defaults to video_ref)")
@click.pass_obj
def ingest(env: Env, video_ref, out_dir, duration, video_id):
    """Compile VIDEO_REF into a knowledge base under OUT_DIR."""
    if os.path.exists(out_dir) and os.listdir(out_dir) and not env.force:
        click.echo(f"refusing to overwrite non-empty {out_dir} (use --force)", err=True)
        sys.exit(EXIT_KB_ERROR)
    try:
        if env.mock:
            meta = load_fixture_meta(env.fixtures)
            duration = duration or float(meta["duration"])
            video_ref = meta.get("video_ref", video_ref)
            video_id = video_id or meta.get("video_id")
            suite = build_mock_suite(env.fixtures, env.config.clip_len)
        else:
            if duration is None:
                raise click.UsageError("--duration is required without --mock")
            suite = build_http_suite(env.config)
        kb = ingest_video(video_ref, duration, suite, env.config,
                          video_id=video_id, out_dir=out_dir)
    except (KBError, IngestError, OSError) as exc:
        click.echo(f"ingest failed: {exc}", err=True)
        sys.exit(EXIT_KB_ERROR)
    except (BackendError, BackendConfigError) as exc:
        click.echo(f"backend failure: {exc}", err=True)
        sys.exit(EXIT_BACKEND_ERROR)
    build = kb.manifest.build_cost
    click.echo(f"clips={kb.manifest.clip_count} nodes={kb.manifest.node_count} "
               f"supernodes={len(kb.graph.supernodes)} "
               f"db_tokens={build.tokens_in + build.tokens_out} "
               f"db_seconds={build.seconds:.3f} db_calls={build.calls}")
    if kb.manifest.diagnostics:
        click.echo(f"diagnostics: {len(kb.manifest.diagnostics)} recorded")


@main.command()
@click.argument("kb_dir")
@click.argument("question")
@click.option("--script", "episode_key", default="default",
              help="episode script key in mock mode")
@click.pass_obj
def ask(env: Env, kb_dir, question, episode_key):
    """Answer QUESTION over the knowledge base at KB_DIR."""
    try:
        kb = load_kb(kb_dir)
    except (KBError, OSError) as exc:
        click.echo(f"cannot load knowledge base: {exc}", err=True)
        sys.exit(EXIT_KB_ERROR)
    trace_path = None
    if env.trace_dir:
        os.makedirs(env.trace_dir, exist_ok=True)
        trace_path = os.path.join(env.trace_dir, "episode.trace.jsonl")
    try:
        suite = _episode_suite(env, episode_key)
        report = run_episode(kb, question, suite, env.config, trace_path=trace_path)
    except EpisodeAborted as exc:
        click.echo(f"episode aborted: {exc}", err=True)
        sys.exit(EXIT_BACKEND_ERROR)
    except (BackendError, BackendConfigError) as exc:
        click.echo(f"backend failure: {exc}", err=True)
        sys.exit(EXIT_BACKEND_ERROR)
    if env.as_json:
        click.echo(json.dumps(report.to_dict(), sort_keys=True))
        return
    answer = report.answer
    if answer.kind == "mc":
        click.echo(f"**Answer:**{answer.letter}")
    elif answer.kind == "span":
        a, b = answer.span
        click.echo(f"**Answer:**[{fmt_seconds(a)}s,{fmt_seconds(b)}s]")
    elif answer.kind == "forced":
        click.echo(f"[forced] {answer.text}")
    else:
        click.echo(f"**Answer:**{answer.text}")
    click.echo(f"iterations={report.iterations_used}"
               + (f" trace={trace_path}" if trace_path else ""))


@main.command(name="eval")
@click.argument("kb_root")
@click.argument("items_file")
@click.option("--out-dir", default=None, help="write per-item JSONL and summary here")
@click.pass_obj
def eval_cmd(env: Env, kb_root, items_file, out_dir):
    """Run every eval item in ITEMS_FILE against KBs under KB_ROOT."""
    try:
        items = load_items(items_file)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"cannot read items file: {exc}", err=True)
        sys.exit(2)

    def suite_factory(item):
        return _episode_suite(env, item.item_id)

    try:
        summary = run_eval(items, kb_root, suite_factory, env.config,
                           jobs=env.jobs, trace_dir=env.trace_dir)
    except (BackendError, BackendConfigError) as exc:
        click.echo(f"backend failure: {exc}", err=True)
        sys.exit(EXIT_BACKEND_ERROR)
    if out_dir:
        write_results(summary, out_dir)
    if env.as_json:
        sys.stdout.buffer.write(summary.to_json_bytes())
        return
    acc = "n/a" if summary.accuracy is None else f"{summary.accuracy:.3f}"
    miou = "n/a" if summary.mean_iou is None else f"{summary.mean_iou:.3f}"
    click.echo(f"items={summary.total} errors={summary.errors} "
               f"accuracy={acc} mean_iou={miou} "
               f"recall@0.5={summary.recall_at['0.5']:.3f}")


@main.command()
@click.argument("kb_dir")
@click.argument("what", type=click.Choice(["clips", "graph", "search", "trace"]))
@click.argument("arg", required=False)
@click.pass_obj
def inspect(env: Env, kb_dir, what, arg):
    """Inspect a knowledge base: clips, graph, search <query>, trace <file>."""
    if what == "trace":
        if not arg:
            raise click.UsageError("trace requires a file argument")
        try:
            with open(arg, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    event = json.loads(line)
                    click.echo(f"[{event['iteration']:>2}] {event['phase']:<8} "
                               f"{event['kind']:<11} {event['digest']}")
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"cannot read trace: {exc}", err=True)
            sys.exit(EXIT_KB_ERROR)
        return

    try:
        kb = load_kb(kb_dir)
    except (KBError, OSError) as exc:
        click.echo(f"cannot load knowledge base: {exc}", err=True)
        sys.exit(EXIT_KB_ERROR)

    if what == "clips":
        for clip in kb.clips:
            click.echo(f"{clip.clip_id:>4} [{fmt_seconds(clip.span.start)}s-"
                       f"{fmt_seconds(clip.span.end)}s] {clip.caption}")
    elif what == "graph":
        for node in sorted(kb.graph.nodes.values(), key=lambda n: n.node_id):
            timeline = ", ".join(f"[{fmt_seconds(t.start)}s-{fmt_seconds(t.end)}s]"
                                 for t in node.timeline)
            click.echo(f"node {node.node_id}: {node.name} "
                       f"(w_base={node.base_weight:.4f}) {timeline}")
        for edge in kb.graph.edges:
            click.echo(f"edge {edge.src} -> {edge.dst}: {edge.description} "
                       f"[{fmt_seconds(edge.span.start)}s-{fmt_seconds(edge.span.end)}s]")
        for sn in kb.graph.supernodes:
            click.echo(f"super {sn.super_id}: {sn.label} members={sn.members}")
    elif what == "search":
        if not arg:
            raise click.UsageError("search requires a query argument")
        suite = _episode_suite(env, None)
        reply = suite.embedder.embed([arg])
        for clip_id, score in top_k_search(kb, reply.vectors[0], env.config.top_k):
            clip = kb.clips[clip_id]
            click.echo(f"{score:.4f} [{fmt_seconds(clip.span.start)}s-"
                       f"{fmt_seconds(clip.span.end)}s] {clip.caption}")


if __name__ == "__main__":
    main()
