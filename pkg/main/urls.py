"""
URL configuration for the DNP3 IDS master.

- /api/v1/master/  alert store queries, sensors and rule pushes
- /health/         liveness, store size and online sensors
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/v1/', include('api.v1.urls')),
    path('health/', include('health.urls')),
]
