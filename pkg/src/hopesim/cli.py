"""Command line entry points: headless runs, the API server, and replay."""
from __future__ import annotations

import io
import json
import select
import sys
from pathlib import Path

import click

from .session import (
    ReplayError,
    SessionConfig,
    SessionStatus,
    create_session,
    replay_run,
    run_headless,
)


def _load_config(config_path: str | None, **overrides) -> SessionConfig:
    payload: dict = {}
    if config_path:
        payload = json.loads(Path(config_path).read_text(encoding="utf-8"))
    for key, value in overrides.items():
        if value is not None:
            payload[key] = value
    return SessionConfig.from_dict(payload)


config_options = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="JSON file with session config fields."),
    click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None),
    click.option("--role", "human_role", default=None,
                 help="Role the human plays (default: observer)."),
    click.option("--phases", type=int, default=None),
    click.option("--lag", type=int, default=None, help="Ticks per phase (policy time lag)."),
    click.option("--seed", type=int, default=None),
    click.option("--backend", type=click.Choice(["stub", "remote"]), default=None),
    click.option("--script", "script_path", type=click.Path(exists=True), default=None,
                 help="Script book JSON for the stub backend."),
    click.option("--out", "out_dir", type=click.Path(), default=None),
    click.option("--budget-rate", type=float, default=None),
    click.option("--human-timeout", type=float, default=None,
                 help="Seconds to wait for human input; expiry submits an empty message."),
]


def _read_line_with_timeout(prompt: str, timeout: float) -> str | None:
    """Read one stdin line, or None once the timeout expires."""
    click.echo(prompt, nl=False)
    try:
        ready, _, _ = select.select([sys.stdin], [], [], timeout)
    except (OSError, ValueError, io.UnsupportedOperation):
        # stdin is not selectable (e.g. a pipe substitute); EOF counts as expiry
        line = sys.stdin.readline()
        if not line:
            click.echo("")
            return None
        return line.rstrip("\n")
    if not ready:
        click.echo("")
        return None
    return sys.stdin.readline().rstrip("\n")


def with_config_options(fn):
    for option in reversed(config_options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Perspective-shifting land-use policy simulation."""


@main.command()
@with_config_options
def run(config_path, scenario_path, human_role, phases, lag, seed, backend, script_path,
        out_dir, budget_rate, human_timeout) -> None:
    """Run one episode headlessly (observer or scripted-human runs)."""
    config = _load_config(
        config_path,
        scenario_path=scenario_path,
        human_role=human_role,
        phases=phases,
        lag=lag,
        seed=seed,
        backend=backend,
        script_path=script_path,
        out_dir=out_dir,
        budget_rate=budget_rate,
        human_timeout=human_timeout,
    )
    session = create_session(config)
    status = run_headless(session)
    while status == SessionStatus.AWAITING_HUMAN:
        awaiting = session.snapshot()["awaiting"]
        if config.human_timeout is not None:
            text = _read_line_with_timeout(f"[{awaiting}] your statement: ", config.human_timeout)
            if text is None:
                click.echo(f"timeout expired; submitting an empty message for {awaiting}")
                status = session.submit_human_decision("", allow_empty=True)
                continue
            status = session.submit_human_decision(text)
            continue
        if not sys.stdin.isatty():
            click.echo(f"suspended awaiting human input for {awaiting}; "
                       f"session kept at {session.episode_dir}", err=True)
            raise SystemExit(2)
        text = click.prompt(f"[{awaiting}] your statement")
        status = session.submit_human_decision(text)
    snap = session.snapshot()
    click.echo(f"session {session.id}: {status.value} at tick {snap['tick']}")
    click.echo(f"run files: {session.episode_dir}")
    if status == SessionStatus.FAILED:
        click.echo(f"failure: {session.failure_reason}", err=True)
        raise SystemExit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for session run files.")
def serve(host: str, port: int, out_dir: str | None) -> None:
    """Serve the HTTP API and event stream."""
    import uvicorn

    from .api import SessionStore, create_app

    app = create_app(SessionStore(out_root=out_dir))
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", type=click.Path(), default=None)
def replay(run_dir: str, out_dir: str | None) -> None:
    """Re-execute a recorded run from its logs and verify the CSV matches."""
    try:
        outcome = replay_run(run_dir, out_root=out_dir)
    except ReplayError as exc:
        click.echo(f"replay error: {exc}", err=True)
        raise SystemExit(1)
    verdict = "byte-identical" if outcome.identical else "DIFFERS"
    click.echo(f"replayed {run_dir}: series.csv {verdict}")
    click.echo(f"replay files: {outcome.session.episode_dir}")
    if not outcome.identical:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
