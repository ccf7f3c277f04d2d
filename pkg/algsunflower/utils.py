import json
import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from algsunflower.errors import FormatError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def get_cache_dir() -> Path | None:
    try:
        path = Path(os.environ["SUNFLOWER_CACHE_DIR"])
    except KeyError:
        return None
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        logger.warning("cache directory %s unusable: %s", path, e)
        return None
    return path


def get_thread_count() -> int:
    try:
        threads = int(os.environ["SUNFLOWER_THREADS"])
    except (KeyError, ValueError, TypeError):
        return 1
    return max(threads, 1)


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """
    One independent generator per case, derived from a single seed so that a
    case's stream does not depend on how many cases ran before it.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def parallel_map(
    f: Callable[[T], R], items: Iterable[T], *, threads: int = 1
) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [f(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(f, items))


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise FormatError(str(e), path=str(path)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, path=str(path), line=e.lineno, column=e.colno) from e


def write_json(path: str | Path, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def humanize_seconds(seconds: float) -> str:
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    seconds = int(seconds)
    hours = seconds // 3600
    minutes = (seconds // 60) % 60
    seconds = seconds % 60
    if hours:
        return f"{hours}h {minutes}m {seconds}s"
    if minutes:
        return f"{minutes}m {seconds}s"
    else:
        return f"{seconds}s"
