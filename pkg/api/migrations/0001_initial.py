import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Sensor',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('sensor_id', models.CharField(max_length=100, unique=True)),
                ('address', models.CharField(blank=True, max_length=64)),
                ('last_seq', models.BigIntegerField(default=0)),
                ('rule_version', models.IntegerField(default=0)),
                ('spool_dropped', models.BigIntegerField(default=0)),
                ('connected', models.BooleanField(default=False)),
                ('first_seen', models.DateTimeField(auto_now_add=True)),
                ('last_seen', models.DateTimeField(auto_now=True)),
            ],
        ),
        migrations.CreateModel(
            name='RulePush',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('version', models.IntegerField(unique=True)),
                ('rules', models.TextField()),
                ('variables', models.JSONField(blank=True, default=dict)),
                ('sha256', models.CharField(max_length=64)),
                ('targets', models.JSONField(blank=True, default=list)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-version'],
            },
        ),
        migrations.CreateModel(
            name='AlertRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('sensor_id', models.CharField(max_length=100)),
                ('seq', models.BigIntegerField()),
                ('ts_us', models.BigIntegerField()),
                ('sid', models.IntegerField()),
                ('gid', models.IntegerField(default=0)),
                ('msg', models.TextField(blank=True)),
                ('src_ip', models.CharField(max_length=45)),
                ('src_port', models.IntegerField()),
                ('dst_ip', models.CharField(max_length=45)),
                ('dst_port', models.IntegerField()),
                ('proto', models.CharField(max_length=8)),
                ('dnp3_fc', models.IntegerField(blank=True, null=True)),
                ('rule_pos', models.IntegerField(blank=True, null=True)),
                ('rule_version', models.IntegerField(default=0)),
                ('received_at', models.BigIntegerField()),
            ],
            options={
                'ordering': ['ts_us', 'sensor_id', 'seq'],
                'indexes': [
                    models.Index(fields=['ts_us', 'sensor_id', 'seq'], name='alert_order_idx'),
                    models.Index(fields=['gid', 'sid'], name='alert_rule_idx'),
                ],
                'constraints': [
                    models.UniqueConstraint(fields=('sensor_id', 'seq'), name='unique_sensor_seq'),
                ],
            },
        ),
        migrations.CreateModel(
            name='RuleDelivery',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('applied', 'Applied'), ('stale', 'Stale'), ('compile_failed', 'Compile failed'), ('checksum_mismatch', 'Checksum mismatch')], default='pending', max_length=20)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('push', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='deliveries', to='api.rulepush')),
                ('sensor', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='deliveries', to='api.sensor')),
            ],
            options={
                'unique_together': {('push', 'sensor')},
            },
        ),
    ]
