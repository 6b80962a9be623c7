from django.urls import path

from . import views

app_name = 'health'

urlpatterns = [
    # GET
    path('', views.health_check, name='health-check'),
]
