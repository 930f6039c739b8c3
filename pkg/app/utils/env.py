import os
from typing import Optional


def str_env(name: str, default: str = "") -> str:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    return raw.strip()


def int_env(name: str, default: Optional[int] = None) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw.strip())
    except ValueError:
        return default


def get_fft_workers() -> int:
    """
    Thread count for scipy.fft. FRONTLAB_WORKERS overrides; default is single-threaded
    so repeated runs are bit-identical.
    """
    workers = int_env("FRONTLAB_WORKERS", 1)
    if workers is None or workers == 0:
        return 1
    return workers
