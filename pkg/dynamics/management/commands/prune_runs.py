from datetime import timedelta

from django.core.management.base import BaseCommand
from django.utils import timezone

from dynamics.config import COMMANDS
from dynamics.models import ExperimentRun


class Command(BaseCommand):
    help = 'Deletes stored experiment runs older than the given number of days'

    def add_arguments(self, parser):
        parser.add_argument('--days', type=int, default=30)
        parser.add_argument('--command', choices=COMMANDS, help='Only prune runs of this experiment')

    def handle(self, *args, **options):
        cutoff = timezone.now() - timedelta(days=options['days'])
        stale_runs = ExperimentRun.objects.filter(created_at__lt=cutoff)
        if options['command']:
            stale_runs = stale_runs.filter(command=options['command'])

        count = stale_runs.count()
        if count > 0:
            stale_runs.delete()
            self.stdout.write(self.style.SUCCESS(f'Successfully deleted {count} stale runs.'))
        else:
            self.stdout.write(self.style.SUCCESS('No stale runs found.'))
