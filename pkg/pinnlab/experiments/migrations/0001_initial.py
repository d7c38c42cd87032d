# Generated by Django 5.2.5 on 2026-10-17 09:12

import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='TrainingRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('uuid', models.UUIDField(default=uuid.uuid4, editable=False, unique=True)),
                ('create_date', models.DateTimeField(auto_now_add=True)),
                ('modified_date', models.DateTimeField(auto_now=True)),
                ('problem', models.CharField(max_length=20)),
                ('profile', models.CharField(default='paper', max_length=20)),
                ('seed', models.BigIntegerField(default=0)),
                ('layer_sizes', models.CharField(max_length=255)),
                ('activation', models.CharField(max_length=20)),
                ('parameter_count', models.IntegerField(default=0)),
                ('iterations', models.IntegerField(default=0)),
                ('status', models.CharField(choices=[('running', 'Running'), ('error', 'Error'), ('done', 'Done')], default='running', max_length=20)),
                ('final_loss', models.FloatField(blank=True, null=True)),
                ('wall_seconds', models.FloatField(blank=True, null=True)),
                ('output_dir', models.CharField(max_length=500)),
                ('config', models.JSONField(default=dict)),
                ('max_abs_error', models.FloatField(blank=True, null=True)),
                ('error_message', models.TextField(blank=True, null=True)),
            ],
            options={
                'ordering': ('-create_date',),
            },
        ),
    ]
