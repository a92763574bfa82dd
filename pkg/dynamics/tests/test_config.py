from pathlib import Path

from django.conf import settings
from django.test import SimpleTestCase

from dynamics.config import (COMMANDS, ExperimentConfig, bundled_config, derive_seed, dump_config,
                             load_config, parse_config, with_overrides)
from dynamics.exceptions import ConfigurationError


class ParseConfigTests(SimpleTestCase):
    def test_values_lists_and_matrices(self):
        config = parse_config(
            '# extra discrete instance\n'
            'command = robustness\n'
            'seed = 7   # trailing comment\n'
            'eta_grid = 0.2, 0.1, 0.05\n'
            'matrix = 0.5, 0; 0, 2\n'
            'models = additive, forced_cubic\n'
        )
        self.assertEqual(config.command, 'robustness')
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.eta_grid, (0.2, 0.1, 0.05))
        self.assertEqual(config.matrix, ((0.5, 0.0), (0.0, 2.0)))
        self.assertEqual(config.models, ('additive', 'forced_cubic'))
        self.assertEqual(config.h, ExperimentConfig().h)

    def test_command_fills_in(self):
        self.assertEqual(parse_config('seed = 3\n', 'hyperbolic').command, 'hyperbolic')

    def test_command_must_match(self):
        with self.assertRaises(ConfigurationError) as caught:
            parse_config('seed = 1\ncommand = wave\n', 'ou_check')
        self.assertEqual((caught.exception.line, caught.exception.field), (2, 'command'))
        self.assertEqual(caught.exception.exit_code, 2)

    def test_syntax_errors_name_the_line(self):
        cases = [
            ('seed = 1\nnonsense\n', 2, None),
            ('colour = red\n', 1, 'colour'),
            ('seed = 1\nseed = 2\n', 2, 'seed'),
            ('command = ou_check\nh = fast\n', 2, 'h'),
            ('matrix = 1, 2; 3\n', 1, 'matrix'),
        ]
        for text, line, field in cases:
            with self.subTest(text=text):
                with self.assertRaises(ConfigurationError) as caught:
                    parse_config(text)
                self.assertEqual(caught.exception.line, line)
                self.assertEqual(caught.exception.field, field)

    def test_validation_errors_point_at_their_key(self):
        cases = [
            ('command = ou_check\nh = -0.5\n', 2, 'h'),
            ('eta_grid = 0.05, 0.1\n', 1, 'eta_grid'),
            ('paths = 0\n', 1, 'paths'),
            ('kappa = cubic\n', 1, 'kappa'),
            ('margin = 1.5\n', 1, 'margin'),
            ('matrix = 1, 0; 0, 2\nperturbation = 1\n', 2, 'perturbation'),
        ]
        for text, line, field in cases:
            with self.subTest(text=text):
                with self.assertRaises(ConfigurationError) as caught:
                    parse_config(text)
                self.assertEqual((caught.exception.line, caught.exception.field), (line, field))

    def test_window_must_straddle_zero(self):
        with self.assertRaises(ConfigurationError):
            parse_config('t_min = 1.0\n')

    def test_error_message_carries_location(self):
        with self.assertRaises(ConfigurationError) as caught:
            parse_config('seed = 1\nseed = 2\n')
        self.assertEqual(str(caught.exception), "line 2, field 'seed': duplicate key")


class DumpAndLoadTests(SimpleTestCase):
    def test_canonical_form_parses_back(self):
        config = ExperimentConfig(command='robustness', seed=11, matrix=((0.5, 0.0), (0.0, 2.0)),
                                  perturbation=((0.01, 0.0), (0.0, -0.01)), tol=1e-12).validate()
        self.assertEqual(parse_config(dump_config(config)), config)

    def test_bundled_files_match_bundled_defaults(self):
        directory = Path(settings.BASE_DIR) / 'configs'
        for command in COMMANDS:
            with self.subTest(command=command):
                self.assertEqual(load_config(directory / f'{command}.cfg', command), bundled_config(command))

    def test_bundled_values(self):
        self.assertEqual(bundled_config('ou_check').paths, 10000)
        wave = bundled_config('wave')
        self.assertEqual((wave.t_min, wave.t_max, wave.h), (-64.0, 64.0, 0.03125))
        self.assertEqual(wave.eta_grid[-1], 0.0)
        with self.assertRaises(ConfigurationError):
            bundled_config('weather')

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError) as caught:
            load_config('/nonexistent/ou_check.cfg')
        self.assertIn('cannot read config', str(caught.exception))

    def test_overrides(self):
        config = bundled_config('hyperbolic')
        self.assertEqual(with_overrides(config, seed=None, workers=None), config)
        self.assertEqual(with_overrides(config, seed=4, workers=3).seed, 4)
        with self.assertRaises(ConfigurationError):
            with_overrides(config, workers=0)


class DeriveSeedTests(SimpleTestCase):
    def test_counter_based(self):
        self.assertEqual(derive_seed(5, 1, 2), derive_seed(5, 1, 2))
        seeds = {derive_seed(5, 1, i) for i in range(100)}
        self.assertEqual(len(seeds), 100)
        self.assertNotEqual(derive_seed(5, 1, 0), derive_seed(6, 1, 0))
        self.assertNotEqual(derive_seed(5, 1), derive_seed(5, 2))
