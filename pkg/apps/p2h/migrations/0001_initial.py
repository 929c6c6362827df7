from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ScenarioRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('title', models.CharField(blank=True, default='', max_length=255)),
                ('controller', models.CharField(choices=[('proposed', 'Robust MPC + real-time correction'), ('traditional', 'Equal-split rule')], default='proposed', max_length=20)),
                ('preset', models.CharField(default='daily', help_text='daily, 10, 20, 30, 50 or 100', max_length=20)),
                ('seed', models.IntegerField(default=0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('started_at', models.DateTimeField(blank=True, null=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('status', models.CharField(choices=[('PENDING', 'Pending'), ('RUNNING', 'Running'), ('SUCCESS', 'Success'), ('FAILURE', 'Failure')], db_index=True, default='PENDING', max_length=20)),
                ('celery_task_id', models.CharField(blank=True, max_length=255, null=True)),
                ('input_data', models.JSONField(blank=True, default=dict, help_text='Plant file path, dotted overrides and surrogate artifact')),
                ('config_hash', models.CharField(blank=True, default='', max_length=32)),
                ('progress', models.JSONField(blank=True, default=dict, help_text='Hours simulated so far', null=True)),
                ('metrics', models.JSONField(blank=True, default=dict, null=True)),
                ('mode', models.JSONField(blank=True, default=dict, null=True)),
                ('detail', models.TextField(blank=True, default='')),
                ('output_dir', models.CharField(blank=True, default='', max_length=512)),
                ('logs_file', models.FileField(blank=True, null=True, upload_to='scenarioruns/logs/')),
            ],
            options={
                'ordering': ['-id'],
                'indexes': [models.Index(fields=['status'], name='scenariorun_status_idx'), models.Index(fields=['controller', 'preset'], name='scenariorun_ctrl_preset_idx'), models.Index(fields=['started_at'], name='scenariorun_started_at_idx')],
            },
        ),
    ]
