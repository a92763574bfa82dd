from django.db import models

from .config import dump_config
from .reports import jsonable


class ExperimentRun(models.Model):
    COMMAND_CHOICES = [
        ('ou_check', 'OU check'),
        ('robustness', 'Robustness'),
        ('hyperbolic', 'Hyperbolic solutions'),
        ('wave', 'Damped wave'),
    ]
    STATUS_CHOICES = [
        ('passed', 'Passed'),
        ('failed', 'Failed'),
        ('error', 'Error'),
    ]

    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    seed = models.BigIntegerField(default=0)
    config_text = models.TextField()
    status = models.CharField(max_length=10, choices=STATUS_CHOICES)
    exit_code = models.IntegerField(default=0)
    report = models.JSONField(default=dict, blank=True)
    table_csv = models.TextField(blank=True)
    duration_seconds = models.FloatField(default=0.0)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']
        indexes = [
            models.Index(fields=['command', 'status'], name='dynamics_run_cmd_status_idx'),
        ]

    def __str__(self):
        return f"{self.command} #{self.pk} (seed {self.seed}, {self.status})"

    @classmethod
    def record(cls, config, result):
        return cls.objects.create(
            command=result.command,
            seed=result.seed,
            config_text=dump_config(config),
            status=result.status,
            exit_code=result.exit_code,
            report=jsonable(result.report),
            table_csv=result.table(),
            duration_seconds=result.duration,
        )

    @classmethod
    def record_error(cls, command, config_text, error, seed=0):
        return cls.objects.create(
            command=command,
            seed=seed,
            config_text=config_text,
            status='error',
            exit_code=getattr(error, 'exit_code', 1),
            report={'error': str(error)},
        )

    def summary(self):
        return {
            'id': self.id,
            'command': self.command,
            'seed': self.seed,
            'status': self.status,
            'exit_code': self.exit_code,
            'duration_seconds': self.duration_seconds,
            'created_at': self.created_at.isoformat(),
        }
