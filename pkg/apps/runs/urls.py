from django.urls import path

from .views import RunDetailView, RunListView, RunSeriesView

urlpatterns = [
    path('runs/', RunListView.as_view(), name='run_list'),
    path('runs/<int:pk>/', RunDetailView.as_view(), name='run_detail'),
    path('runs/<int:pk>/series/', RunSeriesView.as_view(), name='run_series'),
]
