"""Loggers for library modules and handler setup for the CLI"""
import logging
import sys

import coloredlogs

ROOT_LOGGER_NAME = "paritylang"

# terse at INFO, with time and module at DEBUG
LOG_FORMAT = "%(levelname)s: %(message)s"
DEBUG_LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s: %(message)s"


def get_module_logger(name):
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{name}")


def log_format(level: int) -> str:
    return DEBUG_LOG_FORMAT if level <= logging.DEBUG else LOG_FORMAT


def install_colouredlogs(level):
    """Use coloured logs on stderr. Stdout is reserved for results"""
    coloredlogs.install(level=level, fmt=log_format(level), stream=sys.stderr)
