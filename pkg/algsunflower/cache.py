import json
import logging
import os
from pathlib import Path

from algsunflower.errors import FormatError
from algsunflower.sfsearch import SearchBudget, SfAnswer
from algsunflower.utils import get_cache_dir

logger = logging.getLogger(__name__)


def certificate_path(n: int, k: int, cache_dir: Path | None = None) -> Path | None:
    cache_dir = cache_dir or get_cache_dir()
    if cache_dir is None:
        return None
    return cache_dir / f"sf_n{n}_k{k}.json"


def read_certificate(n: int, k: int, cache_dir: Path | None = None) -> tuple[SfAnswer, SearchBudget] | None:
    path = certificate_path(n, k, cache_dir)
    if path is None:
        return None
    try:
        with open(path) as f:
            payload = json.load(f)
        budget = SearchBudget(**payload["budget"])
        return SfAnswer.from_json(payload, path=str(path)), budget
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, FormatError):
        return None


def write_certificate(answer: SfAnswer, budget: SearchBudget, cache_dir: Path | None = None) -> Path | None:
    path = certificate_path(answer.n, answer.k, cache_dir)
    if path is None:
        return None
    payload = answer.to_json() | {
        "budget": {
            "max_universe": budget.max_universe,
            "max_family": budget.max_family,
            "time_hint": budget.time_hint,
        }
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(payload, f)
    except OSError as e:
        logger.warning("failed to cache certificate %s: %s", path, e)
        return None
    return path



def check_certificate(n: int, k: int, budget: SearchBudget, cache_dir: Path | None = None) -> SfAnswer | None:
    """
    A cached answer is reusable when it is exact, or when it is a bound found
    under a budget at least as generous as the one requested now.
    """
    cached = read_certificate(n, k, cache_dir)
    if cached is None:
        return None
    answer, cached_budget = cached
    if answer.n != n or answer.k != k:
        return None
    if answer.exact or cached_budget.covers(budget):
        logger.info("using cached certificate for SF(%d, %d)", n, k)
        return answer
    return None


def delete_certificate(n: int, k: int, cache_dir: Path | None = None) -> None:
    path = certificate_path(n, k, cache_dir)
    if path is None:
        return
    try:
        os.remove(path)
    except OSError:
        pass
