"""Operator command line: migrations, seeding, export/import, audit,
scripted study runs, and the API server."""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from lexhive import __version__
from lexhive.config import AppConfig, build_backend, build_store, load_config
from lexhive.core.errors import DomainError
from lexhive.core.ops import rank_definitions
from lexhive.provenance.events import from_jsonl, to_jsonl
from lexhive.scenario import load_script, run_scenario
from lexhive.seeds import apply_seeds, load_seed_file
from lexhive.service import VocabService
from lexhive.store import SqliteStore


def _service(config: AppConfig) -> VocabService:
    store = build_store(config)
    return VocabService(store, build_backend(config))


def _fail(error: DomainError) -> None:
    click.echo(f"error [{error.code}]: {error.message}", err=True)
    sys.exit(1)


@click.group()
@click.version_option(version=__version__, prog_name="lexhive")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="YAML settings file; environment variables override it.",
)
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Collaborative vocabulary service with AI-drafted definitions."""
    try:
        ctx.obj = load_config(config_path)
    except DomainError as error:
        _fail(error)


@main.command()
@click.pass_obj
def migrate(config: AppConfig) -> None:
    """Apply pending schema migrations."""
    try:
        with build_store(config) as store:
            applied = store.migrate()
    except DomainError as error:
        _fail(error)
    if applied:
        for name in applied:
            click.echo(f"applied {name}")
    else:
        click.echo("schema already current")


@main.command()
@click.argument("seed_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def seed(config: AppConfig, seed_file: str) -> None:
    """Create terms, definitions, and examples from a YAML seed file."""
    try:
        entries = load_seed_file(seed_file)
        service = _service(config)
        with service.store:
            counts = apply_seeds(service, entries)
    except DomainError as error:
        _fail(error)
    click.echo(
        f"seeded {counts['terms']} terms, {counts['definitions']} definitions, "
        f"{counts['examples']} examples"
    )


def _export_vocabulary(store: SqliteStore) -> str:
    lines = []
    for term_id in store.term_ids_by_label():
        aggregate = store.load_aggregate(term_id)
        state = aggregate.state
        record = {
            "label": state.term.label,
            "tags": sorted(state.term.tags),
            "definitions": [
                {
                    "kind": definition.kind.value,
                    "body": definition.body,
                    "version": definition.version,
                    "tally": tally.to_dict(),
                }
                for definition, tally in rank_definitions(state)
            ],
            "examples": [example.body for example in state.examples],
            "phase": state.negotiation.phase.value,
        }
        lines.append(json.dumps(record, ensure_ascii=False) + "\n")
    return "".join(lines)


@main.command()
@click.option(
    "--format",
    "export_format",
    type=click.Choice(["events", "vocabulary"]),
    required=True,
)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_obj
def export(config: AppConfig, export_format: str, out_path: str) -> None:
    """Write the event log or the vocabulary as JSON lines."""
    try:
        with build_store(config) as store:
            if export_format == "events":
                text = to_jsonl(store.all_events())
            else:
                text = _export_vocabulary(store)
    except DomainError as error:
        _fail(error)
    Path(out_path).write_text(text, encoding="utf-8")
    click.echo(f"wrote {len(text.splitlines())} lines to {out_path}")


@main.command("import-events")
@click.argument("events_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def import_events(config: AppConfig, events_file: str) -> None:
    """Rebuild an empty database from an exported event log."""
    try:
        events = from_jsonl(Path(events_file).read_text(encoding="utf-8"))
        with build_store(config) as store:
            if store.schema_version() == 0:
                store.migrate()
            count = store.import_events(events)
    except DomainError as error:
        _fail(error)
    click.echo(f"imported {count} events")


@main.command()
@click.pass_obj
def audit(config: AppConfig) -> None:
    """Replay every term's history and compare with the stored projection."""
    try:
        with build_store(config) as store:
            report = store.audit()
    except DomainError as error:
        _fail(error)
    click.echo(
        f"checked {report.terms_checked} terms, {report.events_checked} events: "
        f"{len(report.mismatches)} mismatches"
    )
    for mismatch in report.mismatches:
        click.echo(f"  {mismatch.term_id}: {mismatch.reason}")
    if not report.ok:
        sys.exit(1)


def packaged_study_script() -> Path:
    """Path of the scripted eight-week community study shipped in the package."""
    return Path(str(resources.files("lexhive").joinpath("data/study_scenario.yaml")))


@main.command("simulate-study")
@click.argument("script_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option(
    "--log-out",
    "log_out",
    type=click.Path(dir_okay=False),
    default=None,
    help="Also write the run's event log as JSON lines.",
)
def simulate_study(script_file: str | None, log_out: str | None) -> None:
    """Run a scripted multi-user study in memory and print its summary.

    Without SCRIPT_FILE the packaged study script is used.
    """
    path = Path(script_file) if script_file else packaged_study_script()
    try:
        run = run_scenario(load_script(path))
    except DomainError as error:
        _fail(error)
    if log_out:
        Path(log_out).write_text(run.log_jsonl, encoding="utf-8")
    click.echo(json.dumps(run.summary, indent=2, sort_keys=True))


@main.command()
@click.option("--host", default=None, help="Bind address (default from config).")
@click.option("--port", type=int, default=None, help="Bind port (default from config).")
@click.pass_obj
def serve(config: AppConfig, host: str | None, port: int | None) -> None:
    """Run the HTTP API."""
    import uvicorn

    from lexhive.api.app import create_app

    try:
        app = create_app(config)
    except DomainError as error:
        _fail(error)
    uvicorn.run(app, host=host or config.bind_host, port=port or config.bind_port)


if __name__ == "__main__":
    main()
