from django.db import models


class RunStatus(models.TextChoices):
    PENDING = 'pending', 'Ожидает'
    SUCCESS = 'success', 'Успешно'
    CERTIFICATION_FAILED = 'certification_failed', 'Сертификация не пройдена'
    CONFIG_ERROR = 'config_error', 'Ошибка конфигурации'
    NUMERICAL_ERROR = 'numerical_error', 'Численная ошибка'


class SimulationRun(models.Model):
    scenario = models.CharField(max_length=255)
    config_path = models.CharField(max_length=1024)
    config_hash = models.CharField(max_length=64, blank=True)
    status = models.CharField(max_length=32, choices=RunStatus.choices, default=RunStatus.PENDING)
    trace_path = models.CharField(max_length=1024, blank=True, null=True)
    sample_count = models.PositiveIntegerField(default=0)
    final_energy = models.FloatField(blank=True, null=True)
    fit_model = models.CharField(max_length=16, blank=True, null=True)
    fit_value = models.FloatField(blank=True, null=True)
    fit_r_squared = models.FloatField(blank=True, null=True)
    error_message = models.TextField(blank=True, null=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(blank=True, null=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"Run {self.scenario}: {self.status}"


class RunCheck(models.Model):
    run = models.ForeignKey(SimulationRun, on_delete=models.CASCADE, related_name='checks')
    name = models.CharField(max_length=64)
    passed = models.BooleanField()
    value = models.FloatField(blank=True, null=True)
    detail = models.TextField(blank=True, null=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        status = "пройдена" if self.passed else "не пройдена"
        return f"{self.name}: {status}"
