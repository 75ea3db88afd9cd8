"""
Logging for the toric point counter.

Everything goes to stderr so that stdout carries only JSON or CSV reports.
Records may carry `pair_name` and `task` through `extra=`.
"""
import logging
import sys
from pathlib import Path
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(pair_ctx)s%(task_ctx)s%(module)s:%(lineno)d - %(message)s'


class ToricLogFilter(logging.Filter):
    """Fills pair_ctx / task_ctx so the format string never fails"""

    def filter(self, record):
        pair_name = getattr(record, 'pair_name', None)
        task = getattr(record, 'task', None)
        record.pair_ctx = f"[pair:{pair_name}] " if pair_name else ""
        record.task_ctx = f"[{task}] " if task else ""
        return True


class ToricFormatter(logging.Formatter):
    """Level colours on a terminal, plain text otherwise"""

    LEVEL_COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def __init__(self, *args, use_colors: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self.use_colors = use_colors

    def format(self, record):
        record.module = Path(record.pathname).stem
        formatted = super().format(record)
        color = self.LEVEL_COLORS.get(record.levelname) if self.use_colors else None
        return f"{color}{formatted}{self.RESET}" if color else formatted


def setup_logging(level: str = "WARNING", stream=None) -> logging.Logger:
    """
    Configure the root logger with a single stderr handler.

    Args:
        level: DEBUG, INFO, WARNING, ERROR or CRITICAL (case-insensitive)
        stream: Defaults to sys.stderr
    """
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        numeric = logging.WARNING
    stream = stream or sys.stderr

    root = logging.getLogger()
    root.setLevel(numeric)
    root.handlers.clear()

    handler = logging.StreamHandler(stream)
    handler.setFormatter(ToricFormatter(LOG_FORMAT, use_colors=hasattr(stream, "isatty") and stream.isatty()))
    handler.addFilter(ToricLogFilter())
    root.addHandler(handler)

    return root


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


# Layer-specific loggers
def get_service_logger(service_name: str) -> logging.Logger:
    return logging.getLogger(f"toric.service.{service_name}")


def get_repository_logger(repo_name: str) -> logging.Logger:
    return logging.getLogger(f"toric.repository.{repo_name}")


def get_command_logger(command_name: str) -> logging.Logger:
    return logging.getLogger(f"toric.command.{command_name}")


def _context(pair_name: Optional[str], task: Optional[str]) -> dict:
    extra = {}
    if pair_name:
        extra['pair_name'] = pair_name
    if task:
        extra['task'] = task
    return extra


def log_service_call(logger: logging.Logger, service_method: str, args: Optional[dict] = None, pair_name: Optional[str] = None):
    """DEBUG line for an entry into a service operation"""
    args_info = f" with args: {args}" if args else ""
    logger.debug(f"Service call: {service_method}{args_info}", extra=_context(pair_name, service_method))


def log_error_with_context(logger: logging.Logger, error: Exception, context: dict, pair_name: Optional[str] = None):
    """ERROR line with traceback; context keys are prefixed to stay clear of LogRecord attributes"""
    extra = _context(pair_name, None)
    extra.update({f"ctx_{k}": v for k, v in context.items()})
    message = f"Error: {error}"
    if context:
        message += " | Context: " + ", ".join(f"{k}={v}" for k, v in context.items())
    logger.error(message, extra=extra, exc_info=True)


def log_performance(logger: logging.Logger, operation: str, duration_ms: float, pair_name: Optional[str] = None):
    logger.info(f"Performance: {operation} took {duration_ms:.2f}ms", extra=_context(pair_name, operation))
