import logging
import sys
from contextvars import ContextVar
from datetime import datetime
from pathlib import Path

from pythonjsonlogger import jsonlogger

# Run id of the CLI command in progress; every log line carries it as "runid".
_run_id: ContextVar[str] = ContextVar("riskmdp_run_id", default="-")


def set_run_id(run_id: str | None) -> None:
    _run_id.set(run_id or "-")


def _stamp_run_id(record: logging.LogRecord) -> bool:
    record.run_id = _run_id.get()
    return True


def _formatter() -> logging.Formatter:
    return jsonlogger.JsonFormatter(
        "%(asctime)s %(levelname)s %(run_id)s %(name)s %(message)s",
        rename_fields={
            "asctime": "time",
            "levelname": "level",
            "run_id": "runid",
            "message": "msg",
        },
    )


def setup_logging(log_dir: str | None = None, log_level: int | str = logging.WARNING):
    """
    Configure JSON logging to stdout and, optionally, a dated file.

    Args:
        log_dir: Directory for ``riskmdp_YYYYMMDD.log``; no file handler if None.
        log_level: Level name or number, defaults to WARNING.
    """
    if isinstance(log_level, str):
        log_level = getattr(logging, log_level.upper(), logging.INFO)

    formatter = _formatter()
    stream_handler = logging.StreamHandler(sys.stdout)
    stream_handler.setFormatter(formatter)
    stream_handler.addFilter(_stamp_run_id)
    handlers: list[logging.Handler] = [stream_handler]

    if log_dir:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)
        log_file = log_path / f"riskmdp_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        file_handler.addFilter(_stamp_run_id)
        handlers.append(file_handler)

    logging.basicConfig(level=log_level, handlers=handlers, force=True)
