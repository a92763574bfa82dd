import json
import tempfile
from datetime import timedelta
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase
from django.utils import timezone

from dynamics.config import COMMANDS, bundled_config, load_config
from dynamics.models import ExperimentRun


class ExperimentCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write_config(self, name, text):
        path = self.dir / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def test_passing_run_writes_outputs(self):
        """A passing run writes the JSON report and CSV table and exits normally."""
        config = self.write_config('ou.cfg', 'command = ou_check\npath_kind = linear\n')
        out = StringIO()
        call_command('ou_check', config=config, out=str(self.dir / 'out'), stdout=out)
        self.assertIn('ou_check passed', out.getvalue())

        report = json.loads((self.dir / 'out' / 'ou_check.json').read_text(encoding='utf-8'))
        self.assertTrue(report['passed'])
        table = (self.dir / 'out' / 'ou_check.csv').read_text(encoding='utf-8')
        self.assertTrue(table.startswith('check,value,target,passed\n'))
        self.assertEqual(ExperimentRun.objects.count(), 0)

    def test_record_stores_run(self):
        config = self.write_config('ou.cfg', 'path_kind = zero\n')
        call_command('ou_check', config=config, out=str(self.dir), seed=9, record=True, stdout=StringIO())
        run = ExperimentRun.objects.get()
        self.assertEqual((run.command, run.seed, run.status, run.exit_code), ('ou_check', 9, 'passed', 0))
        self.assertIn('seed = 9', run.config_text)
        self.assertTrue(run.table_csv.startswith('check,'))

    def test_configuration_errors_exit_with_two(self):
        cases = {
            'unknown.cfg': 'colour = red\n',
            'mismatch.cfg': 'command = wave\n',
        }
        for name, text in cases.items():
            with self.subTest(config=name):
                with self.assertRaises(CommandError) as caught:
                    call_command('ou_check', config=self.write_config(name, text), out=str(self.dir))
                self.assertEqual(caught.exception.returncode, 2)
        with self.assertRaises(CommandError) as caught:
            call_command('ou_check', config=str(self.dir / 'missing.cfg'))
        self.assertEqual(caught.exception.returncode, 2)

    def test_scientific_error_exits_with_one(self):
        config = self.write_config('short.cfg', 'path_kind = linear\nt_min = -8.0\nt_max = 8.0\n')
        with self.assertRaises(CommandError) as caught:
            call_command('ou_check', config=config, out=str(self.dir))
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn('tail', str(caught.exception))

    def test_resonant_wave_exits_with_one(self):
        # f'(0) = pi^2 puts the first mode on the imaginary axis
        text = ('command = wave\nn_modes = 1\nlinear_coefficient = 9.869604401089358\n'
                't_min = -64.0\nt_max = 64.0\nh = 0.03125\nseeds = 1\n')
        config = self.write_config('resonant.cfg', text)
        with self.assertRaises(CommandError) as caught:
            call_command('wave', config=config, out=str(self.dir), stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn('imaginary axis', str(caught.exception))

    def test_failed_checks_exit_with_one(self):
        config = self.write_config('robust.cfg', 'scalar_perturbed = 0.8\n')
        with self.assertRaises(CommandError) as caught:
            call_command('robustness', config=config, out=str(self.dir), stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn('robustness failed: scalar', str(caught.exception))
        self.assertTrue((self.dir / 'robustness.json').exists())


class SeedConfigsTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name) / 'configs'

    def test_writes_every_bundled_config(self):
        out = StringIO()
        call_command('seed_configs', dir=str(self.dir), stdout=out)
        self.assertIn(f'Successfully wrote {len(COMMANDS)} configs', out.getvalue())
        for command in COMMANDS:
            self.assertEqual(load_config(self.dir / f'{command}.cfg', command), bundled_config(command))

    def test_existing_files_are_kept_unless_forced(self):
        call_command('seed_configs', dir=str(self.dir), stdout=StringIO())
        edited = self.dir / 'wave.cfg'
        edited.write_text('command = wave\nseeds = 2\n', encoding='utf-8')

        out = StringIO()
        call_command('seed_configs', dir=str(self.dir), stdout=out)
        self.assertIn('Successfully wrote 0 configs', out.getvalue())
        self.assertEqual(load_config(edited).seeds, 2)

        call_command('seed_configs', dir=str(self.dir), force=True, stdout=StringIO())
        self.assertEqual(load_config(edited).seeds, 5)


class PruneRunsTests(TestCase):
    def setUp(self):
        self.old = ExperimentRun.objects.create(command='ou_check', config_text='', status='passed')
        self.old_wave = ExperimentRun.objects.create(command='wave', config_text='', status='failed')
        ExperimentRun.objects.filter(pk__in=[self.old.pk, self.old_wave.pk]).update(
            created_at=timezone.now() - timedelta(days=40))
        self.recent = ExperimentRun.objects.create(command='ou_check', config_text='', status='passed')

    def test_prunes_only_stale_runs(self):
        out = StringIO()
        call_command('prune_runs', stdout=out)
        self.assertIn('Successfully deleted 2 stale runs.', out.getvalue())
        self.assertEqual(list(ExperimentRun.objects.values_list('pk', flat=True)), [self.recent.pk])

    def test_command_filter(self):
        call_command('prune_runs', command='wave', stdout=StringIO())
        self.assertFalse(ExperimentRun.objects.filter(pk=self.old_wave.pk).exists())
        self.assertTrue(ExperimentRun.objects.filter(pk=self.old.pk).exists())

    def test_nothing_to_prune(self):
        out = StringIO()
        call_command('prune_runs', days=365, stdout=out)
        self.assertIn('No stale runs found.', out.getvalue())
