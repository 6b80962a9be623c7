from django.urls import path, include

urlpatterns = [
    path('master/', include('api.v1.master.urls')),
]
