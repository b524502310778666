"""Operator entry point: serve, replay, record, metrics.

Exit codes: 0 ok, 2 usage/config problems, 3 bind failure, 4 server
unreachable.
"""
from __future__ import annotations

import asyncio
import json
import logging
import os
import signal
import sys
import urllib.error
import urllib.request
from pathlib import Path
from typing import Optional

import click

from .fusion import ConfigError, FusionConfig, load_config
from .pipeline import run_replay
from .preferences import PROFILES_DIR_ENV
from .sessionio import SessionFileError
from .server import CaptionServer

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BIND = 3
EXIT_UNREACHABLE = 4

log = logging.getLogger("capfuse")


def _setup_logging() -> None:
    level = os.environ.get("CAPFUSE_LOG", "INFO").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


def _load_config_or_exit(config_path: Optional[str]) -> FusionConfig:
    if config_path is None:
        return FusionConfig()
    if not Path(config_path).exists():
        click.echo(f"config file not found: {config_path}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_USAGE)


@click.group()
def main() -> None:
    """Caption fusion engine: live serving, replay, recording, metrics."""
    _setup_logging()


@main.command()
@click.option("--ingest-port", default=7001, show_default=True, type=int)
@click.option("--client-port", default=7002, show_default=True, type=int)
@click.option("--metrics-port", default=None, type=int)
@click.option("--config", "config_path", default=None, type=str, help="TOML file with a [fusion] table.")
@click.option("--profiles-dir", default=None, type=str, help="Directory for named preference profiles.")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(ingest_port: int, client_port: int, metrics_port: Optional[int],
          config_path: Optional[str], profiles_dir: Optional[str], host: str) -> None:
    """Run the live server until interrupted; open segments are finalized
    and flushed to clients on shutdown."""
    config = _load_config_or_exit(config_path)
    if profiles_dir is not None:
        os.environ[PROFILES_DIR_ENV] = profiles_dir

    async def _run() -> None:
        server = CaptionServer(
            config=config,
            ingest_port=ingest_port,
            client_port=client_port,
            metrics_port=metrics_port,
            host=host,
        )
        try:
            await server.start()
        except OSError as exc:
            click.echo(f"cannot bind: {exc}", err=True)
            sys.exit(EXIT_BIND)
        click.echo(
            json.dumps(
                {
                    "event": "listening",
                    "ingest_port": server.ingest_port,
                    "client_port": server.client_port,
                    "metrics_port": server.metrics_port,
                }
            ),
            nl=True,
        )
        sys.stdout.flush()
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        await stop.wait()
        log.info("shutting down; flushing open segments")
        await server.stop()

    asyncio.run(_run())


@main.command()
@click.option("--input", "input_path", required=True, type=str, help="Session NDJSON file.")
@click.option("--out", "out_path", default=None, type=str,
              help="Transcript output path (default: <input>.transcript).")
@click.option("--speed", default=0.0, show_default=True, type=float,
              help="Replay speed; 0 means as fast as possible.")
@click.option("--config", "config_path", default=None, type=str)
def replay(input_path: str, out_path: Optional[str], speed: float,
           config_path: Optional[str]) -> None:
    """Replay a session file headlessly; write the golden transcript and
    print the metrics report as JSON."""
    config = _load_config_or_exit(config_path)
    if not Path(input_path).exists():
        click.echo(f"input file not found: {input_path}", err=True)
        sys.exit(EXIT_USAGE)
    if speed < 0:
        click.echo("--speed must be >= 0", err=True)
        sys.exit(EXIT_USAGE)
    try:
        result = asyncio.run(run_replay(input_path, speed=speed, config=config))
    except SessionFileError as exc:
        click.echo(f"malformed input: {exc}", err=True)
        sys.exit(EXIT_USAGE)

    destination = Path(out_path) if out_path else Path(input_path + ".transcript")
    destination.write_text(
        "".join(line + "\n" for line in result.transcript), encoding="utf-8"
    )
    click.echo(json.dumps(result.metrics.to_dict(), indent=2))


@main.command()
@click.option("--ingest-port", default=7001, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=str, help="Recording destination.")
@click.option("--config", "config_path", default=None, type=str)
@click.option("--host", default="127.0.0.1", show_default=True)
def record(ingest_port: int, out_path: str, config_path: Optional[str], host: str) -> None:
    """Accept source connections and record every accepted event verbatim;
    the resulting file replays to the same final transcript."""
    config = _load_config_or_exit(config_path)

    async def _run() -> None:
        server = CaptionServer(
            config=config,
            ingest_port=ingest_port,
            host=host,
            record_to=out_path,
            enable_delivery=False,
        )
        try:
            await server.start()
        except OSError as exc:
            click.echo(f"cannot bind: {exc}", err=True)
            sys.exit(EXIT_BIND)
        click.echo(json.dumps({"event": "recording", "ingest_port": server.ingest_port, "out": out_path}))
        sys.stdout.flush()
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        await stop.wait()
        await server.stop()

    asyncio.run(_run())


@main.command()
@click.option("--metrics-port", required=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
def metrics(metrics_port: int, host: str) -> None:
    """Fetch and print the current metrics report from a running server."""
    url = f"http://{host}:{metrics_port}/metrics"
    try:
        with urllib.request.urlopen(url, timeout=5) as response:
            click.echo(response.read().decode("utf-8"))
    except (urllib.error.URLError, OSError) as exc:
        click.echo(f"server unreachable at {url}: {exc}", err=True)
        sys.exit(EXIT_UNREACHABLE)


if __name__ == "__main__":
    main()
