import hashlib
import json
import logging

from django.db import models


logger = logging.getLogger('curie_weiss.models')


class ExperimentRun(models.Model):
    """One recorded experiment: resolved configuration, summary and check outcomes."""

    KIND_CHOICES = [
        ('sample', 'Sample'),
        ('estimate', 'Estimate'),
        ('consistency', 'Consistency'),
        ('clt', 'CLT'),
        ('coverage', 'Coverage'),
        ('equivalence', 'Equivalence'),
        ('approx_error', 'Approximation error'),
        ('ml_compare', 'ML-condition comparison'),
        ('calibrate_constants', 'Constant calibration'),
    ]

    kind = models.CharField(max_length=32, choices=KIND_CHOICES, db_index=True)
    # unsigned 64-bit seeds do not fit a signed BigIntegerField
    seed = models.CharField(max_length=20)
    version = models.CharField(max_length=32)
    config = models.JSONField(default=dict)
    config_digest = models.CharField(max_length=64, editable=False, db_index=True)
    summary = models.JSONField(default=dict)
    checks = models.JSONField(default=dict)
    passed = models.BooleanField(default=True)
    output_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def save(self, *args, **kwargs):
        canonical = json.dumps(self.config, sort_keys=True)
        self.config_digest = hashlib.sha256(canonical.encode()).hexdigest()
        logger.info(f"Saving {self.kind} run (seed {self.seed}, passed={self.passed})")
        super().save(*args, **kwargs)

    @property
    def failed_checks(self):
        return sorted(name for name, ok in self.checks.items() if not ok)

    def __str__(self):
        status = 'passed' if self.passed else 'failed'
        return f"{self.kind} #{self.pk} ({status})"
