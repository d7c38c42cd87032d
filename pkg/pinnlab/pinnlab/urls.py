"""
URL configuration for pinnlab project.

The admin is the only web surface: it lists the training runs recorded by
`manage.py pinn train`.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
