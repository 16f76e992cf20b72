from django.db import models
from django.utils import timezone


class SimulationRun(models.Model):
    KIND_CHOICES = [
        ('prepare', 'Prepare'),
        ('evolve', 'Evolve'),
        ('ed', 'Exact diagonalization'),
        ('metts', 'METTS'),
    ]
    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('done', 'Done'),
        ('error', 'Error'),
    ]

    kind = models.CharField(max_length=20, choices=KIND_CHOICES)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    config = models.JSONField(default=dict)
    seed = models.BigIntegerField(default=0)
    output_dir = models.CharField(max_length=500)
    series_path = models.CharField(max_length=500, blank=True)
    beta = models.FloatField(default=0.0)
    t = models.FloatField(default=0.0)
    error_message = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)
    completed_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f'{self.kind} run {self.pk} ({self.status})'

    def mark_running(self):
        self.status = 'running'
        self.error_message = ''
        self.save(update_fields=['status', 'error_message', 'updated_at'])

    def mark_done(self, series_path: str = '', beta: float = 0.0, t: float = 0.0):
        self.status = 'done'
        self.series_path = series_path
        self.beta = beta
        self.t = t
        self.completed_at = timezone.now()
        self.save()

    def mark_error(self, message: str):
        self.status = 'error'
        self.error_message = message
        self.completed_at = timezone.now()
        self.save()


class RunCheckpoint(models.Model):
    run = models.ForeignKey(SimulationRun, on_delete=models.CASCADE, related_name='checkpoints')
    path = models.CharField(max_length=500)
    segment = models.CharField(max_length=20)
    beta = models.FloatField()
    t = models.FloatField(default=0.0)
    step_index = models.IntegerField(default=0)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['beta', 't', 'step_index']

    def __str__(self):
        return f'{self.path} (beta={self.beta:.4f}, t={self.t:.4f})'
