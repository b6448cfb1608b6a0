import logging
from django.shortcuts import get_object_or_404
from django.http import JsonResponse
from django.core.cache import cache
from .conf import get_setting
from .core import exact_moments
from .exceptions import CurieWeissError
from .models import ExperimentRun

logger = logging.getLogger('curie_weiss.views')

API_LIMIT = 50
MAX_K_MAX = 6
CACHE_TIMEOUT = 60 * 60 * 24  # 24 hours


def _bad_request(message):
    logger.warning(f"Rejected API request: {message}")
    return JsonResponse({'error': message}, status=400)


def moments_api_view(request):
    """
    Exact moments of one group: /api/moments/?n_pop=&k_obs=&beta=&k_max=
    """
    try:
        n_pop = int(request.GET['n_pop'])
        k_obs = int(request.GET.get('k_obs', n_pop))
        beta = float(request.GET['beta'])
        k_max = int(request.GET.get('k_max', 2))
    except KeyError as exc:
        return _bad_request(f"missing parameter {exc.args[0]}")
    except ValueError as exc:
        return _bad_request(f"invalid parameter: {exc}")
    if not 1 <= k_max <= MAX_K_MAX:
        return _bad_request(f"k_max must lie between 1 and {MAX_K_MAX}")
    max_n_pop = get_setting('API_MAX_N_POP')
    if n_pop > max_n_pop:
        return _bad_request(f"n_pop must not exceed {max_n_pop}")
    logger.info(f"Moments request N={n_pop} K={k_obs} beta={beta} k_max={k_max}")

    cache_key = f"moments_{n_pop}_{k_obs}_{beta!r}_{k_max}"
    cached_data = cache.get(cache_key)
    if cached_data:
        logger.info(f"Found cached moments with key: '{cache_key}'")
        return JsonResponse(cached_data)

    try:
        moments = exact_moments(n_pop, k_obs, beta, k_max)
    except CurieWeissError as exc:
        return _bad_request(str(exc))

    data = {
        'n_pop': n_pop,
        'k_obs': k_obs,
        'beta': beta,
        'log_z': moments.log_z,
        'e_s2k': {str(k): value for k, value in moments.e_s2k.items()},
        'e_sigma2k': {str(k): value for k, value in moments.e_sigma2k.items()},
        'e_pair': moments.e_pair if n_pop > 1 else None,
    }
    cache.set(cache_key, data, timeout=CACHE_TIMEOUT)
    return JsonResponse(data)


def runs_api_view(request):
    """
    Recorded experiment runs, newest first; optional ?kind= filter.
    """
    runs = ExperimentRun.objects.all()
    kind = request.GET.get('kind', '').strip()
    if kind:
        runs = runs.filter(kind=kind)
    runs = list(runs.values('id', 'kind', 'seed', 'version', 'passed', 'created_at')[:API_LIMIT])
    logger.info(f"Runs API returned {len(runs)} runs (kind='{kind}')")
    return JsonResponse({
        'runs': runs,
        'limit_reached': len(runs) == API_LIMIT,
    })


def run_detail_api_view(request, run_id):
    logger.info(f"Run detail request for run_id: {run_id}")
    run = get_object_or_404(ExperimentRun, id=run_id)
    return JsonResponse({
        'id': run.id,
        'kind': run.kind,
        'seed': run.seed,
        'version': run.version,
        'config': run.config,
        'config_digest': run.config_digest,
        'summary': run.summary,
        'checks': run.checks,
        'failed_checks': run.failed_checks,
        'passed': run.passed,
        'output_dir': run.output_dir,
        'created_at': run.created_at.isoformat(),
    })
