import json
import logging

from django.conf import settings
from django.http import HttpResponse, JsonResponse
from django.shortcuts import get_object_or_404
from django.views.decorators.csrf import csrf_exempt

from .config import COMMANDS, parse_config, with_overrides
from .exceptions import ConfigurationError, DynamicsError
from .experiments import run_experiment
from .models import ExperimentRun

logger = logging.getLogger(__name__)

DESCRIPTIONS = {
    'ou_check': 'Pathwise Ornstein-Uhlenbeck values, bounds and ensemble variance',
    'robustness': 'Dichotomy certificates for perturbed discrete and continuous cocycles',
    'hyperbolic': 'Random hyperbolic solutions near a hyperbolic equilibrium',
    'wave': 'Noisy damped wave equation through the Stratonovich transform',
}


def experiment_index(request):
    return JsonResponse({
        'experiments': [{'command': c, 'description': DESCRIPTIONS[c]} for c in COMMANDS],
        'runs': '/api/runs/',
        'launch': '/api/runs/launch/',
    })


def run_list(request):
    runs = ExperimentRun.objects.all()
    command = request.GET.get('command')
    status = request.GET.get('status')
    if command:
        runs = runs.filter(command=command)
    if status:
        runs = runs.filter(status=status)
    try:
        limit = min(max(int(request.GET.get('limit', 50)), 1), 500)
    except ValueError:
        return JsonResponse({'error': 'limit must be an integer'}, status=400)
    return JsonResponse({'runs': [run.summary() for run in runs[:limit]]})


def run_detail(request, run_id):
    run = get_object_or_404(ExperimentRun, id=run_id)
    return JsonResponse({**run.summary(), 'config': run.config_text, 'report': run.report})


def run_table(request, run_id):
    run = get_object_or_404(ExperimentRun, id=run_id)
    response = HttpResponse(run.table_csv, content_type='text/csv; charset=utf-8')
    response['Content-Disposition'] = f'attachment; filename="{run.command}-{run.id}.csv"'
    return response


@csrf_exempt
def launch_run(request):
    if request.method != 'POST':
        return JsonResponse({'error': 'Method not allowed'}, status=405)

    try:
        data = json.loads(request.body)
    except json.JSONDecodeError:
        return JsonResponse({'error': 'Invalid JSON'}, status=400)
    if not isinstance(data, dict):
        return JsonResponse({'error': 'Expected a JSON object'}, status=400)

    command = data.get('command')
    if command not in COMMANDS:
        return JsonResponse({'error': f"command must be one of {', '.join(COMMANDS)}"}, status=400)
    config_text = data.get('config', '')
    seed = data.get('seed')
    if not isinstance(config_text, str) or (seed is not None and not isinstance(seed, int)):
        return JsonResponse({'error': 'config must be a string and seed an integer'}, status=400)

    try:
        config = parse_config(config_text, command)
        config = with_overrides(config, seed=seed, workers=settings.DYNAMICS['WORKERS'])
    except ConfigurationError as exc:
        return JsonResponse({'error': str(exc), 'line': exc.line, 'field': exc.field}, status=400)
    limit = settings.DYNAMICS['MAX_HTTP_PATHS']
    if config.paths > limit:
        return JsonResponse({'error': f'paths is limited to {limit} over HTTP', 'field': 'paths'}, status=400)

    try:
        result = run_experiment(config)
    except DynamicsError as exc:
        logger.warning('%s run failed: %s', command, exc)
        run = ExperimentRun.record_error(command, config_text, exc, seed=config.seed)
        return JsonResponse({**run.summary(), 'error': str(exc)}, status=201)

    run = ExperimentRun.record(config, result)
    logger.info('stored %s run #%d (%s)', command, run.id, run.status)
    return JsonResponse({**run.summary(), 'report': run.report}, status=201)
