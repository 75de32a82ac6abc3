"""
Configuration module for modalchar

Defines resource budgets, logging layout and the named fragment presets.
"""

import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

logger = logging.getLogger(__name__)

# Defaults for every budgeted construction
SETTINGS: Dict[str, Any] = {
    "max_models": 10**6,
    "max_formulas": 10**6,
    "max_worlds": 10**5,
    "max_pairs": 10**7,
    "log_format": "[%(asctime)s] [%(levelname)s] %(message)s",
    "log_datefmt": "%Y-%m-%d %H:%M:%S",
    "config_paths": [
        Path.home() / ".config/modalchar.cfg",
        Path("/etc/modalchar.cfg"),
    ],
}

LIMIT_KEYS = ("max_models", "max_formulas", "max_worlds", "max_pairs")

# name -> (polarity, connective tokens)
FRAGMENT_PRESETS: Dict[str, str] = {
    "full": "any:&,|,<>,[],T,F",
    "positive": "pos:&,|,<>,[]",
    "conj-diamond": "pos:&,<>",
    "conj": "pos:&",
    "positive-bot": "pos:&,|,<>,[],F",
    "negative": "neg:&,|,<>,[]",
    "uniform": "any:&,|,<>,[]",
}


def load_settings(paths: Optional[Iterable[Path]] = None) -> Dict[str, Any]:
    """
    Load budget overrides from the first existing configuration file.

    Args:
        paths: Candidate INI files (defaults to SETTINGS["config_paths"])

    Returns:
        Dict with the budgets, defaults filled in
    """
    settings = {key: SETTINGS[key] for key in LIMIT_KEYS}
    config = configparser.ConfigParser()
    candidates: List[Path] = list(paths if paths is not None else SETTINGS["config_paths"])

    for config_path in candidates:
        config_path = Path(config_path).expanduser()
        if config_path.exists():
            try:
                config.read(config_path)
                logger.info(f"Loaded config from: {config_path}")
                break
            except configparser.Error as e:
                logger.warning(f"Failed to load config from {config_path}: {e}")

    if config.has_section("limits"):
        for key, value in config.items("limits"):
            if key not in LIMIT_KEYS:
                logger.warning(f"Ignoring unknown limit '{key}'")
                continue
            number = int(value)
            if number <= 0:
                raise ValueError(f"Limit {key} must be positive, got {number}")
            settings[key] = number

    return settings


def get_fragment_preset(name: str, props: Iterable[str]):
    """
    Get a named fragment over the given propositions.

    Args:
        name: One of FRAGMENT_PRESETS
        props: Proposition names of the fragment

    Returns:
        The Fragment

    Raises:
        FragmentError: If the name is not a preset
    """
    from .errors import FragmentError
    from .syntax import parse_fragment

    if name not in FRAGMENT_PRESETS:
        raise FragmentError(f"Unknown fragment preset '{name}'")
    return parse_fragment(FRAGMENT_PRESETS[name], props)


def setup_logging(verbosity: int = 0, log_file: Optional[Path] = None) -> None:
    """Configure root logging for the command-line tool."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(
        level=level,
        format=SETTINGS["log_format"],
        datefmt=SETTINGS["log_datefmt"],
        handlers=handlers,
        force=True,
    )
