import math

from django.test import SimpleTestCase

from dynamics.config import ExperimentConfig, bundled_config, parse_config, with_overrides
from dynamics.exceptions import ConfigurationError, WindowError
from dynamics.experiments import CHECK_COLUMNS, ExperimentResult, run_experiment

LINEAR_OU = 'command = ou_check\npath_kind = linear\n'
SMALL_ENSEMBLE = 'command = ou_check\npaths = 200\n'
ADDITIVE_ONLY = 'command = hyperbolic\nmodels = additive\neta_grid = 0.1, 0.05\n'
SMALL_WAVE = ('command = wave\nt_min = -64.0\nt_max = 64.0\nh = 0.03125\nn_modes = 1\n'
              'eta_grid = 0.05, 0.0\n')


def checks_by_name(result):
    return {c['check']: c for c in result.report['checks']}


class ExperimentResultTests(SimpleTestCase):
    def test_failures_collect_checks_instances_and_scan(self):
        report = {
            'checks': [{'check': 'a', 'passed': True}, {'check': 'b', 'passed': False}],
            'instances': [{'name': 'scalar', 'status': 'passed'}, {'name': 'lift', 'status': 'rejected'}],
            'constants_scan': {'monotone': False},
        }
        result = ExperimentResult('robustness', 0, False, report, CHECK_COLUMNS, [])
        self.assertEqual(result.failures(), ['b', 'lift', 'constants_scan'])
        self.assertEqual((result.status, result.exit_code), ('failed', 1))

    def test_table_is_csv(self):
        rows = [{'check': 'x', 'value': 0.5, 'target': None, 'passed': True}]
        result = ExperimentResult('ou_check', 0, True, {}, CHECK_COLUMNS, rows)
        self.assertEqual(result.table(), 'check,value,target,passed\nx,0.5,,true\n')
        self.assertEqual(result.exit_code, 0)

    def test_unknown_command(self):
        with self.assertRaises(ConfigurationError):
            run_experiment(ExperimentConfig(command='weather'))


class OUCheckTests(SimpleTestCase):
    def test_linear_path(self):
        result = run_experiment(parse_config(LINEAR_OU))
        self.assertTrue(result.passed, result.failures())
        checks = checks_by_name(result)
        self.assertLessEqual(checks['linear_path_deviation']['value'], 1e-4)
        self.assertNotIn('ensemble_variance', checks)
        self.assertGreaterEqual(result.duration, 0.0)

    def test_zero_path_has_zero_bounds(self):
        result = run_experiment(parse_config('command = ou_check\npath_kind = zero\n'))
        self.assertTrue(result.passed, result.failures())
        self.assertEqual(result.report['bounds'], {'m1': 0.0, 'm2': 0.0})

    def test_ensemble_does_not_depend_on_workers(self):
        config = parse_config(SMALL_ENSEMBLE)
        serial = checks_by_name(run_experiment(config, workers=1))
        threaded = checks_by_name(run_experiment(config, workers=3))
        self.assertEqual(serial['ensemble_variance']['value'], threaded['ensemble_variance']['value'])
        self.assertTrue(serial['ensemble_variance']['passed'])

    def test_bundled_ensemble_variance(self):
        config = bundled_config('ou_check')
        self.assertEqual(config.paths, 10000)
        result = run_experiment(config)
        variance = checks_by_name(result)['ensemble_variance']
        self.assertTrue(variance['passed'])
        self.assertGreaterEqual(variance['value'], 0.47)
        self.assertLessEqual(variance['value'], 0.53)

    def test_short_window_raises(self):
        with self.assertRaises(WindowError):
            run_experiment(parse_config(LINEAR_OU + 't_min = -8.0\nt_max = 8.0\n'))


class RobustnessExperimentTests(SimpleTestCase):
    def test_bundled_instances_pass(self):
        result = run_experiment(parse_config('command = robustness\n'))
        self.assertTrue(result.passed, result.failures())
        names = [i['name'] for i in result.report['instances']]
        self.assertEqual(names, ['scalar', 'saddle', 'lift', 'scalar_continuous', 'ou_noise'])
        self.assertTrue(result.report['constants_scan']['monotone'])
        self.assertEqual([row['instance'] for row in result.rows], names)
        controls = checks_by_name(result)
        self.assertEqual(sorted(controls), ['rejects_doubled_exponent', 'rejects_identity_stable',
                                            'rejects_identity_unstable'])
        self.assertIn('forward_decay', controls['rejects_doubled_exponent']['value'])
        self.assertIn('backward_decay', controls['rejects_identity_unstable']['value'])
        ou_noise = {c['check']: c for c in result.report['instances'][-1]['checks']}
        distance = ou_noise['projection_distance']
        self.assertGreater(distance['value'], 0.0)
        self.assertLessEqual(distance['value'], distance['target'])

    def test_large_perturbation_is_rejected(self):
        result = run_experiment(parse_config('command = robustness\nscalar_perturbed = 0.8\n'))
        self.assertFalse(result.passed)
        scalar = result.report['instances'][0]
        self.assertEqual(scalar['status'], 'rejected')
        self.assertIn('scalar', result.failures())


class HyperbolicExperimentTests(SimpleTestCase):
    def test_additive_model(self):
        result = run_experiment(parse_config(ADDITIVE_ONLY))
        self.assertTrue(result.passed, result.failures())
        self.assertEqual([row['eta'] for row in result.rows], [0.1, 0.05])
        for row in result.rows:
            self.assertEqual(row['status'], 'certified')
            self.assertLessEqual(row['oracle_error'], row['eta'] * 0.015625 ** 2)
        run = result.report['runs'][0]
        self.assertGreater(run['eta_eps'], 0.0)


class WaveExperimentTests(SimpleTestCase):
    def test_zero_intensity_row_is_exact(self):
        result = run_experiment(parse_config(SMALL_WAVE))
        self.assertEqual(len(result.rows), 2)
        self.assertEqual(len(result.report['cutoffs']), 2)
        zero_row = result.rows[-1]
        self.assertEqual(zero_row['eta'], 0.0)
        self.assertEqual(zero_row['sup_dist_v'], 0.0)
        eta0 = [c for c in result.report['checks'] if c['check'].startswith('eta0_')]
        self.assertEqual(len(eta0), 1)
        self.assertTrue(eta0[0]['passed'])
        self.assertFalse(math.isnan(result.rows[0]['sup_dist_v']))

    def test_bundled_four_mode_run(self):
        config = with_overrides(bundled_config('wave'), seeds=1)
        self.assertEqual((config.n_modes, config.eta_grid[-1]), (4, 0.0))
        result = run_experiment(config)
        self.assertTrue(result.passed, result.failures())
        zero_row = result.rows[-1]
        self.assertEqual((zero_row['eta'], zero_row['sup_dist_v'], zero_row['status']), (0.0, 0.0, 'certified'))
        self.assertGreater(zero_row['epsilon'], 0.0)
        checks = checks_by_name(result)
        seed = zero_row['seed']
        self.assertTrue(checks[f'eta0_seed{seed}']['passed'])
        self.assertTrue(checks[f'below_cutoff_seed{seed}_eta0']['passed'])
