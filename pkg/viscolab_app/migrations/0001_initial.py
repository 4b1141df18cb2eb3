# Generated by Django 5.2.4 on 2026-10-17 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=255)),
                ('config_path', models.CharField(max_length=1024)),
                ('config_hash', models.CharField(blank=True, max_length=64)),
                ('status', models.CharField(choices=[('pending', 'Ожидает'), ('success', 'Успешно'), ('certification_failed', 'Сертификация не пройдена'), ('config_error', 'Ошибка конфигурации'), ('numerical_error', 'Численная ошибка')], default='pending', max_length=32)),
                ('trace_path', models.CharField(blank=True, max_length=1024, null=True)),
                ('sample_count', models.PositiveIntegerField(default=0)),
                ('final_energy', models.FloatField(blank=True, null=True)),
                ('fit_model', models.CharField(blank=True, max_length=16, null=True)),
                ('fit_value', models.FloatField(blank=True, null=True)),
                ('fit_r_squared', models.FloatField(blank=True, null=True)),
                ('error_message', models.TextField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='RunCheck',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=64)),
                ('passed', models.BooleanField()),
                ('value', models.FloatField(blank=True, null=True)),
                ('detail', models.TextField(blank=True, null=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='checks', to='viscolab_app.simulationrun')),
            ],
        ),
    ]
