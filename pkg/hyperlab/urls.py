"""
URL configuration for the hyperlab project.

``/api/runs/`` serves stored experiment runs and launches new ones;
``/admin/`` browses them.
"""
from django.contrib import admin
from django.urls import path, include

from dynamics.views import experiment_index

urlpatterns = [
    path('', experiment_index, name='experiment_index'),
    path('api/', experiment_index, name='api_index'),
    path('admin/', admin.site.urls),
    path('api/runs/', include('dynamics.urls')),
]
