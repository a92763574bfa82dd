# Generated by Django 5.2.5 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(choices=[('ou_check', 'OU check'), ('robustness', 'Robustness'), ('hyperbolic', 'Hyperbolic solutions'), ('wave', 'Damped wave')], max_length=20)),
                ('seed', models.BigIntegerField(default=0)),
                ('config_text', models.TextField()),
                ('status', models.CharField(choices=[('passed', 'Passed'), ('failed', 'Failed'), ('error', 'Error')], max_length=10)),
                ('exit_code', models.IntegerField(default=0)),
                ('report', models.JSONField(blank=True, default=dict)),
                ('table_csv', models.TextField(blank=True)),
                ('duration_seconds', models.FloatField(default=0.0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
                'indexes': [models.Index(fields=['command', 'status'], name='dynamics_run_cmd_status_idx')],
            },
        ),
    ]
