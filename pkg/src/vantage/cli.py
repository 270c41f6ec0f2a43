"""Command line entry point.

Exit codes: 0 converged, 1 runtime error, 2 stalled, 3 max_ticks reached,
64 usage error, 65 invalid data (scenario or trace rejected).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import scenario as scn
from .errors import InputError, ScenarioError
from .scheduler import CONVERGED, MAX_TICKS, STALLED, TickTrace, replay as replay_run

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STALLED = 2
EXIT_MAX_TICKS = 3
EXIT_USAGE = 64
EXIT_DATA = 65

click.UsageError.exit_code = EXIT_USAGE

_OUTCOME_CODES = {CONVERGED: EXIT_OK, STALLED: EXIT_STALLED, MAX_TICKS: EXIT_MAX_TICKS}


def _load_or_die(source: str) -> scn.ScenarioFile:
    try:
        return scn.load(source)
    except ScenarioError as exc:
        click.echo(f"scenario {source!r} rejected:", err=True)
        for e in exc.errors:
            click.echo(f"  - {e}", err=True)
        sys.exit(EXIT_DATA)


def _parse_target_override(values: tuple[str, ...]) -> list[scn.TargetEvent]:
    events = []
    for v in values:
        try:
            tick_s, rest = v.split(":", 1)
            tick = int(tick_s)
            if rest.strip().lower() == "clear":
                events.append(scn.TargetEvent(tick=tick, point=None))
            else:
                x, y, z = (float(c) for c in rest.split(","))
                events.append(scn.TargetEvent(tick=tick, point=(x, y, z)))
        except (ValueError, IndexError):
            raise click.UsageError(
                f"bad --intermediate-target {v!r}; use TICK:X,Y,Z or TICK:clear")
    return events


def _apply_overrides(
    sf: scn.ScenarioFile,
    rate: tuple[str, ...],
    pause: tuple[str, ...],
    work: tuple[str, ...],
    delta_pos: float | None,
    delta_or_deg: float | None,
    max_ticks: int | None,
    operator_script: str | None,
    targets: tuple[str, ...],
) -> scn.ScenarioFile:
    """Flag overrides mirror the master-window controls; they replace
    fields of the loaded scenario before the session is built."""
    from dataclasses import replace

    agents = list(sf.agents)
    known = {a.id for a in agents}

    def agent_index(name: str) -> int:
        if name not in known:
            raise click.UsageError(f"unknown agent {name!r}; scenario has {sorted(known)}")
        return next(i for i, a in enumerate(agents) if a.id == name)

    for spec in rate:
        try:
            name, value = spec.split("=", 1)
            value = int(value)
        except ValueError:
            raise click.UsageError(f"bad --rate {spec!r}; use AGENT=N")
        if value < 1:
            raise click.UsageError("rate must be >= 1")
        i = agent_index(name)
        agents[i] = replace(agents[i], rate=value)
    for name in pause:
        i = agent_index(name)
        agents[i] = replace(agents[i], active=False)
    for name in work:
        i = agent_index(name)
        agents[i] = replace(agents[i], active=True)
    if operator_script is not None:
        ops = [i for i, a in enumerate(agents) if a.kind == "operator"]
        if not ops:
            raise click.UsageError("scenario has no operator agent to attach a script to")
        path = Path(operator_script)
        if not path.exists():
            bundled = scn.bundled_dir() / operator_script
            if bundled.exists():
                path = bundled
            else:
                raise click.UsageError(f"operator script {operator_script!r} not found")
        # absolute path wins over the scenario's base_dir at build time
        agents[ops[0]] = replace(agents[ops[0]], script=str(path.resolve()))
    run = sf.run
    if delta_pos is not None:
        run = replace(run, delta_pos=delta_pos)
    if delta_or_deg is not None:
        run = replace(run, delta_or_deg=delta_or_deg)
    if max_ticks is not None:
        run = replace(run, max_ticks=max_ticks)
    sf = replace(sf, agents=tuple(agents), run=run)
    if targets:
        sf = replace(sf, intermediate_targets=tuple(_parse_target_override(targets)))
    return sf


_OVERRIDE_OPTIONS = [
    click.option("--rate", multiple=True, metavar="AGENT=N",
                 help="Override an agent's activity rate (repeatable)."),
    click.option("--pause", multiple=True, metavar="AGENT",
                 help="Start an agent paused (repeatable)."),
    click.option("--work", multiple=True, metavar="AGENT",
                 help="Start an agent active (repeatable)."),
    click.option("--delta-pos", type=float, default=None,
                 help="Override the translation step, metres per firing."),
    click.option("--delta-or-deg", type=float, default=None,
                 help="Override the rotation step, degrees per firing."),
    click.option("--max-ticks", type=int, default=None, help="Override the tick budget."),
    click.option("--operator-script", default=None, metavar="PATH",
                 help="Attach a steering script to the operator agent."),
    click.option("--intermediate-target", "targets", multiple=True, metavar="TICK:X,Y,Z",
                 help="Schedule an intermediate target (TICK:clear to clear; repeatable)."),
]


def _with_overrides(fn):
    for opt in reversed(_OVERRIDE_OPTIONS):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(package_name="vantage")
def main():
    """Drive a manikin or camera mast to a placement with a clear view."""


@main.command()
@click.argument("source")
@_with_overrides
@click.option("--trace", "trace_path", default=None, metavar="PATH",
              help="Where to write the tick trace (default: <name>.trace.ndjson).")
@click.option("--metrics", "metrics_path", default=None, metavar="PATH",
              help="Also write run metrics to this file.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              help="Metrics output format.")
@click.option("--workers", type=int, default=1, help="Threads for agent evaluation.")
@click.option("--quiet", is_flag=True, help="Suppress the metrics printout.")
def run(source, rate, pause, work, delta_pos, delta_or_deg, max_ticks, operator_script,
        targets, trace_path, metrics_path, fmt, workers, quiet):
    """Run a scenario headless and write its trace and metrics."""
    sf = _apply_overrides(_load_or_die(source), rate, pause, work, delta_pos,
                          delta_or_deg, max_ticks, operator_script, targets)
    try:
        session = scn.build(sf)
        sched = session.make_scheduler(workers=workers)
        result = sched.run()
        sched.shutdown()
    except (InputError, ScenarioError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    out = Path(trace_path) if trace_path else Path(f"{sf.name}.trace.ndjson")
    result.trace.write(out, name=sf.name)
    m = scn.metrics(result.trace, sf)
    rendered = json.dumps(m.to_obj(), indent=2) if fmt == "json" else m.to_text()
    if metrics_path:
        Path(metrics_path).write_text(rendered + "\n", encoding="utf-8")
    if not quiet:
        click.echo(rendered)
        click.echo(f"trace written to {out}")
    sys.exit(_OUTCOME_CODES.get(result.outcome, EXIT_ERROR))


@main.command()
@click.argument("source")
@click.argument("trace_path", metavar="TRACE")
def replay(source, trace_path):
    """Re-execute a recorded trace and verify every state digest."""
    sf = _load_or_die(source)
    if not Path(trace_path).exists():
        click.echo(f"trace {trace_path!r} not found", err=True)
        sys.exit(EXIT_DATA)
    try:
        trace = TickTrace.read(trace_path)
        session = scn.build(sf)
        sched = session.make_scheduler(with_schedule=False)
        verdict = replay_run(trace, sched)
    except (InputError, ScenarioError, KeyError, TypeError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    click.echo(verdict.message())
    sys.exit(EXIT_OK if verdict.ok else EXIT_ERROR)


@main.command()
@click.argument("source")
@click.argument("trace_path", metavar="TRACE")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def metrics(source, trace_path, fmt):
    """Print metrics extracted from a recorded trace."""
    sf = _load_or_die(source)
    try:
        trace = TickTrace.read(trace_path)
        m = scn.metrics(trace, sf)
    except (FileNotFoundError, ScenarioError, InputError, KeyError,
            json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    click.echo(json.dumps(m.to_obj(), indent=2) if fmt == "json" else m.to_text())


@main.command()
@click.argument("source")
def validate(source):
    """Check a scenario file and report every problem found."""
    sf = _load_or_die(source)
    click.echo(f"scenario {sf.name!r} is valid "
               f"({len(sf.scene.obstacles)} obstacles, {len(sf.agents)} agents)")


@main.command()
@click.argument("source")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8700, show_default=True)
@click.option("--tick-rate", type=float, default=None,
              help="Ticks per second (default: scenario value).")
def serve(source, host, port, tick_rate):
    """Host an interactive session for the browser operator console."""
    sf = _load_or_die(source)
    from .server import serve_session

    try:
        serve_session(sf, host=host, port=port, tick_rate=tick_rate)
    except OSError as exc:
        click.echo(f"cannot serve on {host}:{port}: {exc}", err=True)
        sys.exit(EXIT_ERROR)


@main.command(name="scenarios")
def list_scenarios():
    """List the bundled benchmark scenarios."""
    for name in scn.bundled_names():
        click.echo(name)


if __name__ == "__main__":
    main()
