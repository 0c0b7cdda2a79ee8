"""Command-line surface: generate, validate, loop, serve-review, analyze,
eval, toxicity, export, split.

Outputs are line-delimited records. Exit code 0 means full success; partial
failures exit 2 and leave an error manifest next to the output.
"""

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import analysis, export, metrics
from .corpus import Corpus, load_corpus, save_corpus
from .errors import EscorpusError
from .gateway import (
    ChatGateway,
    FixtureResponder,
    GatewayConfig,
    GenerationRequest,
    RetryPolicy,
    SamplingParams,
    TokenUsage,
    estimate_cost,
)
from .loop import CurationStore, LoopConfig, run_iteration
from .registry import default_scenarios
from .validation import DedupIndex, ValidationPolicy, validate


def _write_manifest(path: Path, failures: list[dict]) -> None:
    path.write_text(
        "\n".join(json.dumps(f, ensure_ascii=False) for f in failures) + "\n", "utf-8"
    )


def _partial_exit(out: Path, failures: list[dict], what: str) -> None:
    manifest = out.with_suffix(out.suffix + ".errors")
    _write_manifest(manifest, failures)
    click.echo(f"{len(failures)} {what} failed; manifest at {manifest}", err=True)
    sys.exit(2)


@click.group()
@click.version_option(package_name="escorpus")
def main():
    """Build, curate, and analyze strategy-annotated support dialogues."""


# ------------------------------------------------------------------ generate

@main.command()
@click.option("--seeds", "seeds_path", type=click.Path(exists=True), required=True,
              help="Corpus file providing in-context seed dialogues.")
@click.option("--scenario", required=True, help="Scenario name to generate for.")
@click.option("--count", default=1, show_default=True, type=int)
@click.option("--seeds-per-prompt", default=2, show_default=True, type=int)
@click.option("--endpoint", default=GatewayConfig.endpoint, show_default=True)
@click.option("--auth-env", default=GatewayConfig.auth_env, show_default=True)
@click.option("--model", default=GatewayConfig.model, show_default=True)
@click.option("--temperature", default=1.0, show_default=True, type=float)
@click.option("--max-tokens", default=2048, show_default=True, type=int)
@click.option("--max-concurrency", default=4, show_default=True, type=int)
@click.option("--rate-limit", default=60.0, show_default=True, type=float,
              help="Requests per minute.")
@click.option("--mock", is_flag=True, help="Serve responses from --fixtures instead of HTTP.")
@click.option("--fixtures", type=click.Path(exists=True), help="Fixture directory for --mock.")
@click.option("--rng-seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(), required=True, help="Raw generations (JSONL).")
def generate(seeds_path, scenario, count, seeds_per_prompt, endpoint, auth_env, model,
             temperature, max_tokens, max_concurrency, rate_limit, mock, fixtures,
             rng_seed, out):
    """Generate raw candidate dialogues for one scenario."""
    from .loop import SeedPool, Origin, select_seeds

    seed_corpus = load_corpus(seeds_path)
    pool = SeedPool()
    for d in seed_corpus:
        pool.add(d.scene, d.id, Origin.MANUAL)
    scenarios = default_scenarios()
    if scenario not in scenarios:
        scenarios.register(scenario)
        click.echo(f"note: {scenario!r} is not canonical; registered locally", err=True)
    try:
        seeds = select_seeds(pool, scenario, seeds_per_prompt, rng_seed,
                             lookup=lambda did: seed_corpus.get(did))
    except EscorpusError as exc:
        raise click.ClickException(str(exc))

    config = GatewayConfig(
        endpoint=endpoint, auth_env=auth_env, model=model,
        max_concurrency=max_concurrency, retry=RetryPolicy(),
        rate_limit_per_min=rate_limit,
    )
    responder = FixtureResponder(fixtures) if mock else None
    if mock and fixtures is None:
        raise click.ClickException("--mock requires --fixtures DIR")
    gateway = ChatGateway(config, responder=responder, scenarios=scenarios)
    request = GenerationRequest(
        scenario=scenario, seeds=tuple(seeds), count=count,
        sampling=SamplingParams(temperature, max_tokens),
    )
    try:
        batch = gateway.generate(request)
    except EscorpusError as exc:
        raise click.ClickException(str(exc))

    out_path = Path(out)
    with out_path.open("w", encoding="utf-8") as fh:
        for raw in batch.successes:
            fh.write(json.dumps({
                "request_id": raw.request_id,
                "scenario": raw.scenario,
                "raw_text": raw.raw_text,
                "usage": {"input": raw.usage.input, "output": raw.usage.output},
                "latency": raw.latency,
                "attempts": raw.attempts,
            }, ensure_ascii=False))
            fh.write("\n")
    cost = estimate_cost(
        len(batch.successes),
        TokenUsage(
            sum(r.usage.input for r in batch.successes) // max(1, len(batch.successes)),
            sum(r.usage.output for r in batch.successes) // max(1, len(batch.successes)),
        ),
        config.pricing,
    )
    click.echo(f"{len(batch.successes)}/{batch.requested} generations -> {out_path} "
               f"(est. cost {cost:.4f})")
    if batch.failures:
        _partial_exit(out_path, [asdict(f) for f in batch.failures], "generations")


# ------------------------------------------------------------------ validate

@main.command("validate")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="Raw generations JSONL (as written by generate).")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True),
              help="Existing corpus to deduplicate against.")
@click.option("--scenario", help="Expected scenario; defaults to each record's own.")
@click.option("--policy", "policy_path", type=click.Path(exists=True),
              help="Validation policy file (JSON or YAML).")
@click.option("--out", type=click.Path(), required=True, help="Reports (JSONL).")
def validate_cmd(input_path, corpus_path, scenario, policy_path, out):
    """Validate raw generations and emit a report per record."""
    policy = ValidationPolicy.from_file(policy_path) if policy_path else ValidationPolicy()
    against = load_corpus(corpus_path) if corpus_path else Corpus()
    index = DedupIndex(against)
    out_path = Path(out)
    failures = []
    n = 0
    with Path(input_path).open("r", encoding="utf-8") as fh, \
            out_path.open("w", encoding="utf-8") as out_fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                raw_text = record["raw_text"]
                expected = scenario or record.get("scenario", "")
            except (json.JSONDecodeError, KeyError) as exc:
                failures.append({"line": lineno, "error": f"bad input record: {exc}"})
                continue
            report = validate(raw_text, expected, index, policy)
            n += 1
            out_fh.write(json.dumps({
                "line": lineno,
                "verdict": report.verdict.value,
                "issues": [asdict(i) for i in report.issues],
                "duplicate_score": report.duplicate_score,
                "duplicate_of": report.duplicate_of,
            }, ensure_ascii=False, default=str))
            out_fh.write("\n")
    click.echo(f"validated {n} records -> {out_path}")
    if failures:
        _partial_exit(out_path, failures, "input lines")


# ---------------------------------------------------------------------- loop

@main.command("loop")
@click.option("--state-dir", type=click.Path(), required=True)
@click.option("--iterations", default=1, show_default=True, type=int)
@click.option("--init-seeds", type=click.Path(exists=True),
              help="Seed corpus for first-time initialization.")
@click.option("--quotas", "quotas_path", type=click.Path(exists=True),
              help="JSON file {scenario: target_count}; required on init.")
@click.option("--seeds-per-prompt", default=2, show_default=True, type=int)
@click.option("--seed-window", type=int, default=None,
              help="Cap sampling to the newest N seeds per scenario.")
@click.option("--per-scenario-cap", type=int, default=None,
              help="Max generations per scenario per iteration.")
@click.option("--min-turns", default=6, show_default=True, type=int)
@click.option("--dup-threshold", default=0.8, show_default=True, type=float)
@click.option("--max-correctable", default=3, show_default=True, type=int)
@click.option("--endpoint", default=GatewayConfig.endpoint, show_default=True)
@click.option("--auth-env", default=GatewayConfig.auth_env, show_default=True)
@click.option("--model", default=GatewayConfig.model, show_default=True)
@click.option("--max-concurrency", default=4, show_default=True, type=int)
@click.option("--rate-limit", default=60.0, show_default=True, type=float)
@click.option("--mock", is_flag=True)
@click.option("--fixtures", type=click.Path(exists=True))
@click.option("--rng-seed", default=0, show_default=True, type=int)
def loop_cmd(state_dir, iterations, init_seeds, quotas_path, seeds_per_prompt,
             seed_window, per_scenario_cap, min_turns, dup_threshold, max_correctable,
             endpoint, auth_env, model, max_concurrency, rate_limit, mock, fixtures,
             rng_seed):
    """Run curation-loop iterations against a state directory."""
    policy = ValidationPolicy(min_turns, dup_threshold, max_correctable)
    scenarios = default_scenarios()
    state = Path(state_dir)
    if (state / "events.log").exists():
        store = CurationStore.load(state, scenarios=scenarios, policy=policy)
    else:
        store = CurationStore(state, scenarios=scenarios, policy=policy)
        if not init_seeds or not quotas_path:
            raise click.ClickException(
                "fresh state dir: --init-seeds and --quotas are required"
            )
        for d in load_corpus(init_seeds):
            if d.scene not in scenarios:
                scenarios.register(d.scene)
            store.import_seed(d)
    if quotas_path:
        store.set_quotas(json.loads(Path(quotas_path).read_text("utf-8")))

    if mock and fixtures is None:
        raise click.ClickException("--mock requires --fixtures DIR")
    config = GatewayConfig(
        endpoint=endpoint, auth_env=auth_env, model=model,
        max_concurrency=max_concurrency, rate_limit_per_min=rate_limit,
    )
    responder = FixtureResponder(fixtures) if mock else None
    gateway = ChatGateway(config, responder=responder,
                          scenarios=scenarios, strategies=store.strategies)
    cfg = LoopConfig(
        seeds_per_prompt=seeds_per_prompt, policy=policy, rng_seed=rng_seed,
        per_scenario_cap=per_scenario_cap, seed_window=seed_window,
    )
    for _ in range(iterations):
        report = run_iteration(store, gateway, cfg)
        click.echo(json.dumps({
            "iteration": report.iteration,
            "generated": report.generated,
            "accepted": report.accepted,
            "queued": report.queued,
            "rejected": report.rejected,
            "failed": report.failed,
        }))
    click.echo(f"corpus size {len(store.corpus())}, seed pool {store.pool.size()}, "
               f"pending review {len(store.pending)}", err=True)


# -------------------------------------------------------------- serve-review

@main.command("serve-review")
@click.option("--state-dir", type=click.Path(exists=True), required=True)
@click.option("--port", default=8321, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Directory with the built review UI to mount at /ui.")
def serve_review(state_dir, port, host, ui_dir):
    """Serve the review queue API (and optionally the UI) over HTTP."""
    from .review_api import run_server

    store = CurationStore.load(state_dir)
    click.echo(f"serving review API on http://{host}:{port} "
               f"({len(store.pending)} pending)", err=True)
    run_server(store, port=port, host=host, ui_dir=ui_dir)


# ------------------------------------------------------------------- analyze

@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["table", "records"]),
              default="records", show_default=True)
@click.option("--bins", default=4, show_default=True, type=int)
@click.option("--hops", default="3,4,5", show_default=True,
              help="Comma-separated transition window lengths.")
def analyze(corpus_path, out_dir, fmt, bins, hops):
    """Write corpus statistics, phase distribution, and transition tables."""
    corpus = load_corpus(corpus_path, max_error_ratio=1.0)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = analysis.corpus_stats(corpus)
    phases = analysis.phase_distribution(corpus, bins)
    hop_list = [int(h) for h in hops.split(",") if h.strip()]

    if fmt == "records":
        (out / "stats.json").write_text(
            json.dumps(stats.to_record(), ensure_ascii=False, indent=2), "utf-8")
        (out / "phases.json").write_text(
            json.dumps(phases.to_record(), ensure_ascii=False, indent=2), "utf-8")
        for h in hop_list:
            ranked = analysis.transition_stats(corpus, h)
            with (out / f"transitions_{h}hop.jsonl").open("w", encoding="utf-8") as fh:
                for t in ranked:
                    fh.write(json.dumps({
                        "sequence": list(t.sequence), "count": t.count,
                        "permille": t.permille,
                    }))
                    fh.write("\n")
    else:
        lines = [
            f"dialogues        {stats.n_dialogues}",
            f"utterances       {stats.n_utterances}",
            f"avg dialogue len {stats.avg_dialogue_len:.1f}",
            f"avg utterance len {stats.avg_utterance_len:.1f}",
            "",
            "strategy            count   share",
        ]
        for name, count in stats.strategy_counts.items():
            lines.append(f"{name:<34s} {count:>7d} {stats.strategy_proportions[name]:6.1%}")
        lines.append("")
        lines.append("scenario            count   share")
        for name, count in stats.scenario_counts.items():
            lines.append(f"{name:<58s} {count:>7d} {stats.scenario_proportions[name]:6.1%}")
        (out / "stats.txt").write_text("\n".join(lines) + "\n", "utf-8")
        phase_lines = ["strategy " + "".join(f"  bin{b + 1:<3d}" for b in range(phases.n_bins))]
        for i, abbrev in enumerate(phases.strategies):
            row = "".join(f" {phases.proportions[i, b]:6.1%}" for b in range(phases.n_bins))
            phase_lines.append(f"{abbrev:<9s}{row}")
        (out / "phases.txt").write_text("\n".join(phase_lines) + "\n", "utf-8")
        for h in hop_list:
            ranked = analysis.transition_stats(corpus, h)[:20]
            t_lines = [f"{t.label():<40s} {t.permille:8.2f} permille" for t in ranked]
            (out / f"transitions_{h}hop.txt").write_text("\n".join(t_lines) + "\n", "utf-8")
    click.echo(f"analysis written to {out}")


# ---------------------------------------------------------------------- eval

@main.command("eval")
@click.option("--hyps", type=click.Path(exists=True), required=True,
              help="Candidate responses, one per line.")
@click.option("--refs", type=click.Path(exists=True), required=True,
              help="Reference responses, one per line, parallel to --hyps.")
@click.option("--embeddings", type=click.Path(exists=True), default=None,
              help="Embedding table for the extrema metric.")
@click.option("--scale-100", is_flag=True, help="Report values multiplied by 100.")
def eval_cmd(hyps, refs, embeddings, scale_100):
    """Score candidate responses against references."""
    hyp_lines = Path(hyps).read_text("utf-8").splitlines()
    ref_lines = Path(refs).read_text("utf-8").splitlines()
    if len(hyp_lines) != len(ref_lines):
        raise click.ClickException(
            f"{len(hyp_lines)} hypotheses vs {len(ref_lines)} references"
        )
    candidates = [metrics.tokenize(line) for line in hyp_lines]
    references = [metrics.tokenize(line) for line in ref_lines]
    table = metrics.load_embeddings(embeddings) if embeddings else None
    try:
        report = metrics.evaluate_pairs(candidates, references, table)
    except EscorpusError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(report.to_record(scale_100=scale_100), indent=2))


# ------------------------------------------------------------------ toxicity

@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--stub", is_flag=True, help="Use the offline lexicon scorer.")
@click.option("--endpoint", default=None, help="Scoring service endpoint.")
@click.option("--api-key-env", default="ESCORPUS_TOXICITY_KEY", show_default=True)
@click.option("--rate-limit", default=60.0, show_default=True, type=float)
@click.option("--resume", "progress_path", type=click.Path(), default=None,
              help="Progress file; reruns skip already-scored utterances.")
@click.option("--speaker", type=click.Choice(["User", "AI"]), default=None)
@click.option("--out", type=click.Path(), default=None, help="Write the audit record here.")
def toxicity(corpus_path, stub, endpoint, api_key_env, rate_limit, progress_path,
             speaker, out):
    """Audit a corpus for toxicity across the six attributes."""
    from .corpus import Speaker
    from .safety import (
        CachedScorer,
        HttpToxicityScorer,
        LexiconScorer,
        ScorerConfig,
        audit_corpus,
    )

    corpus = load_corpus(corpus_path, max_error_ratio=1.0)
    if stub:
        scorer = CachedScorer(LexiconScorer())
    else:
        config = ScorerConfig(
            endpoint=endpoint or ScorerConfig.endpoint,
            api_key_env=api_key_env, rate_limit_per_min=rate_limit,
        )
        scorer = CachedScorer(HttpToxicityScorer(config))
    try:
        audit = audit_corpus(
            corpus, scorer, progress_path=progress_path,
            speaker=Speaker(speaker) if speaker else None,
        )
    except EscorpusError as exc:
        raise click.ClickException(str(exc))
    record = json.dumps(audit.to_record(), ensure_ascii=False, indent=2)
    if out:
        Path(out).write_text(record + "\n", "utf-8")
    click.echo(record)


# -------------------------------------------------------------------- export

@main.command("export")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--with-strategies/--no-strategies", default=True, show_default=True)
@click.option("--out", type=click.Path(), required=True, help="SFT examples (JSONL).")
def export_cmd(corpus_path, with_strategies, out):
    """Export fine-tuning examples, one per assistant turn."""
    corpus = load_corpus(corpus_path, max_error_ratio=1.0)
    out_path = Path(out)
    n = 0
    with out_path.open("w", encoding="utf-8") as fh:
        for example in export.iter_sft(corpus, with_strategies):
            fh.write(example.to_json())
            fh.write("\n")
            n += 1
    click.echo(f"{n} examples -> {out_path}")


# --------------------------------------------------------------------- split

@main.command("split")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--train-out", type=click.Path(), required=True)
@click.option("--test-out", type=click.Path(), required=True)
@click.option("--train-ratio", default=0.9, show_default=True, type=float)
@click.option("--rng-seed", default=0, show_default=True, type=int)
def split_cmd(corpus_path, train_out, test_out, train_ratio, rng_seed):
    """Deterministic scenario-stratified train/test split."""
    corpus = load_corpus(corpus_path, max_error_ratio=1.0)
    try:
        train, test = export.split(
            corpus, train_ratio, round(1.0 - train_ratio, 9), rng_seed
        )
    except EscorpusError as exc:
        raise click.ClickException(str(exc))
    save_corpus(train, train_out)
    save_corpus(test, test_out)
    click.echo(f"train {len(train)} -> {train_out}; test {len(test)} -> {test_out}")


if __name__ == "__main__":
    main()
