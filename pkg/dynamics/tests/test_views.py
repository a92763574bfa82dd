import json

from django.test import Client, TestCase, override_settings
from django.conf import settings

from dynamics.models import ExperimentRun

LINEAR_OU = 'path_kind = linear\n'


class ExperimentApiTests(TestCase):
    def setUp(self):
        self.client = Client()

    def launch(self, payload):
        return self.client.post('/api/runs/launch/', data=json.dumps(payload), content_type='application/json')

    def test_index_lists_experiments(self):
        response = self.client.get('/api/')
        commands = [e['command'] for e in response.json()['experiments']]
        self.assertEqual(commands, ['ou_check', 'robustness', 'hyperbolic', 'wave'])

    def test_launch_stores_run(self):
        """A launched run is stored and served by the list, detail and table endpoints."""
        response = self.launch({'command': 'ou_check', 'config': LINEAR_OU, 'seed': 4})
        self.assertEqual(response.status_code, 201)
        data = response.json()
        self.assertEqual((data['command'], data['seed'], data['status']), ('ou_check', 4, 'passed'))
        self.assertTrue(data['report']['passed'])

        detail = self.client.get(f"/api/runs/{data['id']}/").json()
        self.assertIn('path_kind = linear', detail['config'])
        self.assertEqual(detail['report'], data['report'])

        table = self.client.get(f"/api/runs/{data['id']}/table/")
        self.assertEqual(table['Content-Type'], 'text/csv; charset=utf-8')
        self.assertIn(f'ou_check-{data["id"]}.csv', table['Content-Disposition'])
        self.assertTrue(table.content.decode().startswith('check,value,target,passed\n'))

    def test_scientific_error_is_stored(self):
        response = self.launch({'command': 'ou_check', 'config': LINEAR_OU + 't_min = -8.0\nt_max = 8.0\n'})
        self.assertEqual(response.status_code, 201)
        data = response.json()
        self.assertEqual((data['status'], data['exit_code']), ('error', 1))
        self.assertIn('tail', data['error'])
        self.assertEqual(ExperimentRun.objects.get().report, {'error': data['error']})

    def test_launch_rejects_bad_requests(self):
        self.assertEqual(self.client.get('/api/runs/launch/').status_code, 405)
        response = self.client.post('/api/runs/launch/', data='{not json', content_type='application/json')
        self.assertEqual(response.status_code, 400)
        self.assertEqual(self.launch(['ou_check']).status_code, 400)
        self.assertEqual(self.launch({'command': 'weather'}).status_code, 400)
        self.assertEqual(self.launch({'command': 'ou_check', 'seed': 'seven'}).status_code, 400)
        self.assertEqual(ExperimentRun.objects.count(), 0)

    def test_config_errors_name_line_and_field(self):
        response = self.launch({'command': 'ou_check', 'config': 'seed = 1\nh = -1\n'})
        self.assertEqual(response.status_code, 400)
        self.assertEqual((response.json()['line'], response.json()['field']), (2, 'h'))

    @override_settings(DYNAMICS={**settings.DYNAMICS, 'MAX_HTTP_PATHS': 100})
    def test_path_limit(self):
        response = self.launch({'command': 'ou_check', 'config': 'paths = 500\n'})
        self.assertEqual(response.status_code, 400)
        self.assertEqual(response.json()['field'], 'paths')


class RunListTests(TestCase):
    def setUp(self):
        self.client = Client()
        for command, status in [('ou_check', 'passed'), ('wave', 'failed'), ('wave', 'passed')]:
            ExperimentRun.objects.create(command=command, status=status, config_text='', report={'passed': True})

    def test_filters(self):
        runs = self.client.get('/api/runs/?command=wave').json()['runs']
        self.assertEqual(len(runs), 2)
        runs = self.client.get('/api/runs/?command=wave&status=failed').json()['runs']
        self.assertEqual([(r['command'], r['status']) for r in runs], [('wave', 'failed')])

    def test_newest_first_and_limit(self):
        runs = self.client.get('/api/runs/?limit=2').json()['runs']
        self.assertEqual(len(runs), 2)
        self.assertGreater(runs[0]['id'], runs[1]['id'])
        self.assertEqual(self.client.get('/api/runs/?limit=many').status_code, 400)

    def test_missing_run(self):
        self.assertEqual(self.client.get('/api/runs/999/').status_code, 404)
        self.assertEqual(self.client.get('/api/runs/999/table/').status_code, 404)


@override_settings(CORS_ALLOW_ALL_ORIGINS=True)
class CorsTests(TestCase):
    def test_api_allows_any_origin_without_credentials(self):
        response = Client().get('/api/', HTTP_ORIGIN='http://example.org')
        self.assertEqual(response['Access-Control-Allow-Origin'], '*')
        self.assertFalse(response.has_header('Access-Control-Allow-Credentials'))

    def test_only_api_paths_are_cross_origin(self):
        response = Client().get('/', HTTP_ORIGIN='http://example.org')
        self.assertFalse(response.has_header('Access-Control-Allow-Origin'))
