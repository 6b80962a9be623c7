from functools import wraps
from typing import Callable
import logging

from django.conf import settings
from django.http import HttpRequest, HttpResponse

from uplink import AuthenticationFailed, issue_token, verify_token

from ..constants import API_TOKEN_SUBJECT
from .responses import json_error

logger = logging.getLogger(__name__)

BEARER_PREFIX = "Bearer "


def issue_api_token(ttl: int = 0) -> str:
    return issue_token(API_TOKEN_SUBJECT, settings.DNP3IDS_SECRET, ttl=ttl)


def token_required(view: Callable[..., HttpResponse]) -> Callable[..., HttpResponse]:
    """Reject requests without a bearer token signed with DNP3IDS_SECRET."""

    @wraps(view)
    def wrapper(request: HttpRequest, *args, **kwargs) -> HttpResponse:
        if not settings.DNP3IDS_SECRET:
            return json_error("API disabled: DNP3IDS_SECRET is not set", status=401)
        header = request.headers.get("Authorization", "")
        if not header.startswith(BEARER_PREFIX):
            return json_error("Bearer token required", status=401)
        try:
            verify_token(header[len(BEARER_PREFIX):].strip(), settings.DNP3IDS_SECRET)
        except AuthenticationFailed as e:
            logger.warning(f"Rejected API request to {request.path}: {e.message}")
            return json_error(e.message, status=401)
        return view(request, *args, **kwargs)

    return wrapper
