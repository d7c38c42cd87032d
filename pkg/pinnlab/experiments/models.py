import uuid
import logging
from django.db import models

logger = logging.getLogger(__name__)


class Base(models.Model):
    uuid = models.UUIDField(unique=True, default=uuid.uuid4, editable=False)
    create_date = models.DateTimeField(auto_now_add=True)
    modified_date = models.DateTimeField(auto_now=True)

    class Meta:
        abstract = True


class TrainingRun(Base):
    """One `pinn train` invocation; the files in output_dir are the artifacts."""

    STATUS_RUNNING = 'running'
    STATUS_DONE = 'done'
    STATUS_ERROR = 'error'
    STATUS_CHOICES = ((STATUS_RUNNING, 'Running'),
                      (STATUS_ERROR, 'Error'),
                      (STATUS_DONE, 'Done'))

    problem = models.CharField(max_length=20)
    profile = models.CharField(max_length=20, default='paper')
    seed = models.BigIntegerField(default=0)
    layer_sizes = models.CharField(max_length=255)
    activation = models.CharField(max_length=20)
    parameter_count = models.IntegerField(default=0)
    iterations = models.IntegerField(default=0)
    status = models.CharField(choices=STATUS_CHOICES, max_length=20, default=STATUS_RUNNING)
    final_loss = models.FloatField(null=True, blank=True)
    wall_seconds = models.FloatField(null=True, blank=True)
    output_dir = models.CharField(max_length=500)
    config = models.JSONField(default=dict)
    # Filled by `pinn evaluate`
    max_abs_error = models.FloatField(null=True, blank=True)
    # Error handling
    error_message = models.TextField(blank=True, null=True)

    class Meta:
        ordering = ('-create_date',)

    def __str__(self):
        return f"{self.problem} seed {self.seed}: {self.status}"

    def mark_done(self, final_loss, wall_seconds):
        self.status = self.STATUS_DONE
        self.final_loss = final_loss
        self.wall_seconds = wall_seconds
        self.save(update_fields=['status', 'final_loss', 'wall_seconds', 'modified_date'])

    def mark_error(self, message):
        self.status = self.STATUS_ERROR
        self.error_message = message
        self.save(update_fields=['status', 'error_message', 'modified_date'])
        logger.error(f"Run {self.uuid} failed: {message}")
