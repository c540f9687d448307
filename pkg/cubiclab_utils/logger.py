"""
Logging utilities for CubicLab

Everything is written to stderr; stdout carries the JSON reports.
"""

import functools
import logging
import sys
import time
from pathlib import Path
from typing import Dict, Optional

try:
    from loguru import logger as loguru_logger
    LOGURU_AVAILABLE = True
except ImportError:
    LOGURU_AVAILABLE = False

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[name]}</cyan> | "
    "<level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {extra[name]} | {message}"
STD_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"

_configured = False


def _ensure_configured():
    if not _configured:
        configure_logging("WARNING")


class CubicLabLogger:
    """Named logger bound to the shared sink configuration"""

    def __init__(self, name: str):
        self.name = name
        _ensure_configured()
        if LOGURU_AVAILABLE:
            self.logger = loguru_logger.bind(name=name)
        else:
            self.logger = logging.getLogger(name)

    def debug(self, message: str, *args, **kwargs):
        self.logger.debug(message, *args, **kwargs)

    def info(self, message: str, *args, **kwargs):
        self.logger.info(message, *args, **kwargs)

    def warning(self, message: str, *args, **kwargs):
        self.logger.warning(message, *args, **kwargs)

    def error(self, message: str, *args, **kwargs):
        self.logger.error(message, *args, **kwargs)

    def exception(self, message: str, *args, **kwargs):
        """Log exception with traceback"""
        self.logger.exception(message, *args, **kwargs)


_loggers: Dict[str, CubicLabLogger] = {}


def setup_logger(name: str) -> CubicLabLogger:
    """Set up and return a logger instance"""
    if name not in _loggers:
        _loggers[name] = CubicLabLogger(name)
    return _loggers[name]


def get_logger(name: str) -> CubicLabLogger:
    """Get an existing logger instance"""
    if name not in _loggers:
        return setup_logger(name)
    return _loggers[name]


def configure_logging(level: str = "INFO", log_dir: Optional[str] = None):
    """Configure global logging: stderr at `level`, optional rotating file sink"""
    global _configured
    _configured = True

    if LOGURU_AVAILABLE:
        loguru_logger.remove()
        loguru_logger.configure(extra={"name": "cubiclab"})
        loguru_logger.add(sys.stderr, format=CONSOLE_FORMAT, level=level.upper(), colorize=None)
        if log_dir:
            Path(log_dir).mkdir(parents=True, exist_ok=True)
            loguru_logger.add(
                Path(log_dir) / "cubiclab_{time:YYYY-MM-DD}.log",
                format=FILE_FORMAT,
                level="DEBUG",
                rotation="1 day",
                retention="30 days",
            )
    else:
        root = logging.getLogger()
        for handler in list(root.handlers):
            root.removeHandler(handler)
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(STD_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        root.addHandler(handler)
        root.setLevel(getattr(logging, level.upper()))
        if log_dir:
            Path(log_dir).mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(Path(log_dir) / "cubiclab.log")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(logging.Formatter(STD_FORMAT))
            root.addHandler(file_handler)


def log_performance(func):
    """Decorator to log function performance"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger(func.__module__)
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(f"{func.__name__} failed after {time.perf_counter() - start:.3f}s: {e}")
            raise
        logger.debug(f"{func.__name__} completed in {time.perf_counter() - start:.3f}s")
        return result

    return wrapper


class LogContext:
    """Context manager for logging with additional context"""

    def __init__(self, logger: CubicLabLogger, operation: str, **context):
        self.logger = logger
        self.operation = operation
        self.context = context
        self.start_time = None
        self.duration = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        context_str = ", ".join(f"{k}={v}" for k, v in self.context.items())
        self.logger.info(f"Starting {self.operation}" + (f" ({context_str})" if context_str else ""))
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = time.perf_counter() - self.start_time
        if exc_type is None:
            self.logger.info(f"Completed {self.operation} in {self.duration:.3f}s")
        else:
            self.logger.error(f"Failed {self.operation} after {self.duration:.3f}s: {exc_val}")
        return False
