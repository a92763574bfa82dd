from django.urls import path
from . import views

urlpatterns = [
    path('', views.run_list, name='run_list'),
    path('launch/', views.launch_run, name='launch_run'),
    path('<int:run_id>/', views.run_detail, name='run_detail'),
    path('<int:run_id>/table/', views.run_table, name='run_table'),
]
