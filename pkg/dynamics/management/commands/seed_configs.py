from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from dynamics.config import COMMANDS, bundled_config, dump_config


class Command(BaseCommand):
    help = 'Writes the bundled default config of every experiment'

    def add_arguments(self, parser):
        parser.add_argument('--dir', help='Target directory (default: DYNAMICS CONFIG_DIR)')
        parser.add_argument('--force', action='store_true', help='Overwrite existing configs')

    def handle(self, *args, **options):
        directory = Path(options['dir'] or settings.DYNAMICS['CONFIG_DIR'])
        directory.mkdir(parents=True, exist_ok=True)

        written = 0
        for command in COMMANDS:
            target = directory / f'{command}.cfg'
            if target.exists() and not options['force']:
                self.stdout.write(f'Kept existing {target}')
                continue
            target.write_text(dump_config(bundled_config(command)), encoding='utf-8')
            written += 1

        self.stdout.write(self.style.SUCCESS(f'Successfully wrote {written} configs to {directory}.'))
