from django.contrib import admin
from django.urls import path
from django.http import HttpResponse


def health_check(request):
    return HttpResponse("OK", status=200)


urlpatterns = [
    path('admin/', admin.site.urls),
    path('healthy/', health_check, name='healthy'),
]
