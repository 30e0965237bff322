"""Command line entry points: serve the API, import datasets, export jobs."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from labelkit import exports
from labelkit.formats import parse_dataset_upload
from labelkit.server import ServerConfig, create_app
from labelkit.store import Store


def _open_store(data_dir: str) -> Store:
    path = Path(data_dir)
    path.mkdir(parents=True, exist_ok=True)
    return Store(path / "labelkit.db")


@click.group()
def main() -> None:
    """Self-hostable collaborative text annotation platform."""


@main.command()
@click.option("--host", default=None, help="Bind address (overrides config).")
@click.option("--port", default=None, type=int, help="Bind port (overrides config).")
@click.option("--data-dir", default=None, help="Directory holding the sqlite store.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="JSON config file with tokens and CORS origins.")
def serve(host: str | None, port: int | None, data_dir: str | None, config_path: str | None):
    """Run the HTTP API server."""
    import uvicorn

    config = ServerConfig.load(Path(config_path) if config_path else None)
    if host is not None:
        config.host = host
    if port is not None:
        config.port = port
    if data_dir is not None:
        config.data_dir = Path(data_dir)
    if not config.tokens:
        click.echo("warning: no auth tokens configured; every request will be rejected", err=True)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


@main.command("import-dataset")
@click.argument("file", type=click.Path(exists=True))
@click.option("--data-dir", default="labelkit-data", show_default=True)
@click.option("--name", default=None, help="Dataset name (defaults to the file stem).")
def import_dataset(file: str, data_dir: str, name: str | None):
    """Load a dataset JSON file into the store."""
    store = _open_store(data_dir)
    payload = json.loads(Path(file).read_text(encoding="utf-8"))
    dataset = parse_dataset_upload(payload, name=name or Path(file).stem, new_id=store.new_id)
    store.insert_dataset(dataset)
    click.echo(f"imported dataset {dataset.id} with {len(dataset.examples)} examples")


@main.command("export-job")
@click.argument("job_id")
@click.option("--data-dir", default="labelkit-data", show_default=True)
@click.option("--mode", default="all", type=click.Choice(["all", "accepted-only"]),
              show_default=True)
def export_job(job_id: str, data_dir: str, mode: str):
    """Write a job's annotations as JSONL to stdout."""
    store = _open_store(data_dir)
    for line in exports.export_lines(store, job_id, mode):
        sys.stdout.write(line + "\n")


if __name__ == "__main__":
    main()
