from typing import Any

from django.conf import settings

_DEFAULTS = {
    'EXACT_MOMENT_BUDGET': 20_000_000,
    'URN_MAX_K': 64,
    'B1': 0.8,
    'B2': 1.2,
    'INTERVAL_CONSTANTS': {
        'c_high': 0.5,
        'c_low': 0.05,
        'd_high': 2.0,
        'd_low': 0.05,
    },
    'DEFAULT_SEED': 20240917,
    'RNG_ALGORITHM': 'numpy.random.PCG64DXSM seeded by SeedSequence(seed, spawn_key=(stream_id, ...))',
    'ML_BRACKET': (-5.0, 10.0),
    'STAT_CHUNK_ROWS': 65536,
    'API_MAX_N_POP': 5000,
}


def get_setting(name: str) -> Any:
    """
    Return a curie_weiss setting.

    Values come from ``settings.CURIE_WEISS`` when Django is configured and fall
    back to the built-in defaults otherwise, so the numerical modules stay usable
    outside of a Django process.

    Args:
        name (str): Upper-case key, e.g. ``'EXACT_MOMENT_BUDGET'``.

    Returns:
        Any: The configured value.
    """
    if name not in _DEFAULTS:
        raise KeyError(f"Unknown curie_weiss setting: {name}")
    if settings.configured:
        overrides = getattr(settings, 'CURIE_WEISS', {})
        if name in overrides:
            return overrides[name]
    return _DEFAULTS[name]
