"""Command-line entry points: run, serve, replay, report, goldens."""
from __future__ import annotations

import json
import sys
from collections import Counter

import click

from . import kernels
from . import model as model_mod
from .feedback import decode_instance
from .session import (SessionConfig, load_config, load_log, replay as replay_fn,
                      run_session)
from .taxonomy import FEEDBACK_TYPES, VOCABULARY


@click.group()
@click.version_option(package_name="rewardloop")
def main():
    """Reward learning from typed human feedback on gridworlds."""


def _load(config_path: str | None) -> SessionConfig:
    return load_config(config_path) if config_path else SessionConfig()


@main.command()
@click.argument("config_path", required=False, type=click.Path(exists=True))
@click.option("--log", "log_path", type=click.Path(), help="Write the session log here.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
def run(config_path, log_path, seed):
    """Run a simulated session to completion."""
    config = _load(config_path)
    if seed is not None:
        from dataclasses import replace
        config = replace(config, seed=seed)
    if config.mode != "simulated":
        raise click.UsageError("run drives simulated sessions; use serve for interactive")
    log = run_session(config, log_path=log_path)
    for rec in log.by_kind("metrics"):
        click.echo(f"round {rec['round']}: alignment={rec['alignment']:+.4f} "
                   f"instances={rec['n_instances']} return={rec['agent_return']:+.4f}")
    click.echo(f"kernels: {kernels.IMPL}; records: {len(log.records)}"
               + (f"; log: {log_path}" if log_path else ""))


@main.command()
@click.argument("config_path", required=False, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True, type=int)
@click.option("--log", "log_path", type=click.Path(), help="Write the session log here.")
@click.option("--session-id", default="default", show_default=True)
def serve(config_path, host, port, log_path, session_id):
    """Serve the wire API; the session runs in the background."""
    from .server import Registry, serve as serve_fn

    config = _load(config_path)
    registry = Registry()
    handle = registry.add(session_id, config, log_path=log_path)
    handle.start()
    click.echo(f"session {session_id!r} ({config.mode}) on http://{host}:{port}")
    serve_fn(registry, host=host, port=port)


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
@click.option("--verify/--no-verify", default=True, show_default=True,
              help="Compare the refit model to the logged final checkpoint.")
def replay(log_path, verify):
    """Re-translate and refit from a session log."""
    log = load_log(log_path)
    result = replay_fn(log)
    click.echo(f"episodes: {len(result.buffer.episodes)}; "
               f"instances: {len(result.instances)}")
    if verify:
        if result.logged_checkpoint is None:
            raise click.ClickException("log has no checkpoint to verify against")
        got = json.dumps(model_mod.checkpoint_dict(result.ensemble), sort_keys=True)
        want = json.dumps(result.logged_checkpoint, sort_keys=True)
        if got != want:
            click.echo("checkpoint mismatch", err=True)
            sys.exit(1)
        click.echo("checkpoint verified: bit-exact")


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
def report(log_path):
    """Summarize a session log."""
    log = load_log(log_path)
    kinds = Counter(r["kind"] for r in log.records)
    click.echo("records: " + ", ".join(f"{k}={n}" for k, n in sorted(kinds.items())))
    instances = [decode_instance(r["record"].encode()) for r in log.by_kind("instance")]
    by_value = Counter(i.value.kind for i in instances)
    if by_value:
        click.echo("instance values: "
                   + ", ".join(f"{k}={n}" for k, n in sorted(by_value.items())))
    interactions = Counter(r["interaction"] for r in log.by_kind("measurement"))
    if interactions:
        click.echo("interactions: "
                   + ", ".join(f"{k}={n}" for k, n in sorted(interactions.items())))
    for rec in log.by_kind("metrics"):
        click.echo(f"round {rec['round']}: alignment={rec['alignment']:+.4f} "
                   f"instances={rec['n_instances']} return={rec['agent_return']:+.4f}")
    non = kinds.get("nonengagement", 0)
    if non:
        click.echo(f"non-engagements: {non}")


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Emit the table as JSON.")
def goldens(as_json):
    """Print the feedback-type classification table."""
    if as_json:
        click.echo(json.dumps({name: p.to_dict() for name, p in FEEDBACK_TYPES.items()},
                              indent=2, sort_keys=True))
        return
    dims = [d.lower() for d in sorted(VOCABULARY)]
    widths = {d: max(len(d), *(len("|".join(sorted(getattr(p, d))))
                               for p in FEEDBACK_TYPES.values())) for d in dims}
    name_w = max(len(n) for n in FEEDBACK_TYPES)
    click.echo(" ".join(["type".ljust(name_w)] + [d.ljust(widths[d]) for d in dims]))
    for name, p in FEEDBACK_TYPES.items():
        row = [name.ljust(name_w)]
        for d in dims:
            row.append("|".join(sorted(getattr(p, d))).ljust(widths[d]))
        click.echo(" ".join(row))


if __name__ == "__main__":
    main()
