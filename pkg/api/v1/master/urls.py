from django.urls import path
from .views import (
    AlertCollectionView,
    SensorCollectionView,
    RulePushCollectionView, RulePushDetailView,
)

app_name = 'master'

urlpatterns = [
    # GET
    path('alerts/', AlertCollectionView.as_view(), name='alert-collection'),

    # GET
    path('sensors/', SensorCollectionView.as_view(), name='sensor-collection'),

    # GET POST
    path('rule-pushes/', RulePushCollectionView.as_view(), name='rule-push-collection'),

    # GET
    path('rule-pushes/<int:version>/', RulePushDetailView.as_view(), name='rule-push-detail'),
]
