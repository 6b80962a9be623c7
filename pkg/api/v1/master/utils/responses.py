from typing import Any, Dict, List, Optional
import logging

from django.db import IntegrityError
from django.http import JsonResponse as DjangoJsonResponse

from api.v1.master.exceptions import APIError, CompileFailedAtMaster

logger = logging.getLogger(__name__)


def json_success(data: Optional[Dict[str, Any]] = None, status: int = 200) -> DjangoJsonResponse:
    """
    Success envelope: ``{"status": "success", "data": ...}``.

    Args:
        data: payload; omitted from the envelope when None
        status: HTTP status code (default: 200)
    """
    response_data: Dict[str, Any] = {"status": "success"}
    if data is not None:
        response_data["data"] = data
    return DjangoJsonResponse(response_data, status=status)


def json_error(message: str, status: int = 400, errors: Optional[List[Dict[str, Any]]] = None) -> DjangoJsonResponse:
    response_data: Dict[str, Any] = {"status": "error", "message": message}
    if errors:
        response_data["errors"] = errors
    return DjangoJsonResponse(response_data, status=status)


def handle_exception(e: Exception) -> DjangoJsonResponse:
    """Map service-layer exceptions onto error envelopes; anything unexpected is a 500."""
    if isinstance(e, CompileFailedAtMaster):
        lines = [{"line": line, "reason": reason} for line, reason in e.errors]
        return json_error(e.message, status=e.status, errors=lines)
    if isinstance(e, APIError):
        return json_error(e.message, status=e.status)
    if isinstance(e, IntegrityError):
        logger.warning(f"Integrity error: {e}")
        return json_error("Conflicting write, retry the request", status=409)
    logger.exception("Unhandled error in master API")
    return json_error(f"Internal server error: {str(e)}", status=500)
