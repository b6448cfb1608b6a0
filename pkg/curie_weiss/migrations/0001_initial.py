# Generated by Django 4.2.7 on 2026-10-18 09:12

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
                ('kind', models.CharField(choices=[('sample', 'Sample'), ('estimate', 'Estimate'), ('consistency', 'Consistency'), ('clt', 'CLT'), ('coverage', 'Coverage'), ('equivalence', 'Equivalence'), ('approx_error', 'Approximation error'), ('ml_compare', 'ML-condition comparison'), ('calibrate_constants', 'Constant calibration')], db_index=True, max_length=32)),
                ('seed', models.CharField(max_length=20)),
                ('version', models.CharField(max_length=32)),
                ('config', models.JSONField(default=dict)),
                ('config_digest', models.CharField(db_index=True, editable=False, max_length=64)),
                ('summary', models.JSONField(default=dict)),
                ('checks', models.JSONField(default=dict)),
                ('passed', models.BooleanField(default=True)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]
