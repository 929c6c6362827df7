from django.db import models

RUN_STATUS_CHOICES = [
    ('PENDING', 'Pending'),
    ('RUNNING', 'Running'),
    ('SUCCESS', 'Success'),
    ('FAILURE', 'Failure'),
]

CONTROLLER_CHOICES = [
    ('proposed', 'Robust MPC + real-time correction'),
    ('traditional', 'Equal-split rule'),
]


class ScenarioRun(models.Model):
    """
    One closed-loop day (or several) of the plant under a single controller.
    Tracks execution status, the run request and the headline scores.
    """
    title = models.CharField(max_length=255, blank=True, default='')
    controller = models.CharField(max_length=20, choices=CONTROLLER_CHOICES, default='proposed')
    preset = models.CharField(max_length=20, default='daily', help_text="daily, 10, 20, 30, 50 or 100")
    seed = models.IntegerField(default=0)

    created_at = models.DateTimeField(auto_now_add=True)
    started_at = models.DateTimeField(null=True, blank=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    status = models.CharField(
        max_length=20,
        choices=RUN_STATUS_CHOICES,
        default='PENDING',
        db_index=True
    )
    celery_task_id = models.CharField(max_length=255, blank=True, null=True)

    # {"config_path": "...", "overrides": {"mpc.alpha": 0.1}, "artifact": "..."}
    input_data = models.JSONField(
        default=dict,
        blank=True,
        help_text="Plant file path, dotted overrides and surrogate artifact"
    )
    config_hash = models.CharField(max_length=32, blank=True, default='')

    # {"hours_done": 12, "hours_total": 24}
    progress = models.JSONField(
        null=True,
        blank=True,
        default=dict,
        help_text="Hours simulated so far"
    )
    metrics = models.JSONField(null=True, blank=True, default=dict)
    mode = models.JSONField(null=True, blank=True, default=dict)

    detail = models.TextField(blank=True, default='')
    output_dir = models.CharField(max_length=512, blank=True, default='')
    logs_file = models.FileField(upload_to="scenarioruns/logs/", blank=True, null=True)

    class Meta:
        ordering = ['-id']
        indexes = [
            models.Index(fields=['status'], name='scenariorun_status_idx'),
            models.Index(fields=['controller', 'preset'], name='scenariorun_ctrl_preset_idx'),
            models.Index(fields=['started_at'], name='scenariorun_started_at_idx'),
        ]

    def __str__(self):
        return self.title or f"{self.preset}/{self.controller} run #{self.id}"
