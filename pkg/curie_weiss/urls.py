from django.urls import path
from . import views

app_name = 'curie_weiss'

urlpatterns = [
    path('api/moments/', views.moments_api_view, name='moments_api'),
    path('api/runs/', views.runs_api_view, name='runs_api'),
    path('api/runs/<int:run_id>/', views.run_detail_api_view, name='run_detail_api'),
]
