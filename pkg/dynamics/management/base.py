from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from dynamics.config import load_config, with_overrides
from dynamics.exceptions import DynamicsError
from dynamics.experiments import run_experiment
from dynamics.models import ExperimentRun
from dynamics.reports import write_outputs


class ExperimentCommand(BaseCommand):
    """Shared options and exit codes of the four experiment commands."""
    command_name = None

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Flat key = value experiment config')
        parser.add_argument('--out', help='Output directory for the JSON report and CSV table')
        parser.add_argument('--seed', type=int, help='Override the config seed')
        parser.add_argument('--workers', type=int, help='Thread pool width')
        parser.add_argument('--record', action='store_true', help='Store the run as an ExperimentRun')

    def handle(self, *args, **options):
        try:
            config = load_config(options['config'], self.command_name)
            config = with_overrides(config, seed=options['seed'], workers=options['workers'])
            result = run_experiment(config)
        except DynamicsError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code)

        out_dir = options['out'] or config.output_dir or Path(settings.DYNAMICS['OUTPUT_DIR']) / self.command_name
        json_path, csv_path = write_outputs(out_dir, self.command_name, result.report, result.columns, result.rows)
        self.stdout.write(f'Wrote {json_path} and {csv_path}')
        if options['record']:
            run = ExperimentRun.record(config, result)
            self.stdout.write(f'Recorded run #{run.pk}')

        if not result.passed:
            failed = result.failures()
            detail = f": {', '.join(failed)}" if failed else ''
            raise CommandError(f'{self.command_name} failed{detail}', returncode=1)
        self.stdout.write(self.style.SUCCESS(
            f'{self.command_name} passed in {result.duration:.2f}s (seed {result.seed}).'
        ))
