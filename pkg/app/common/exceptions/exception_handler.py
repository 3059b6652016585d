"""Exception handling middleware is defined here."""

import traceback
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from loguru import logger
from starlette.middleware.base import BaseHTTPMiddleware
from starlette.responses import JSONResponse

from .spectral_exceptions import SpectralError


async def _request_info(request: Request) -> dict[str, Any]:

    info: dict[str, Any] = {
        "method": request.method,
        "url": str(request.url),
        "path_params": dict(request.path_params),
        "query_params": dict(request.query_params),
    }
    try:
        info["body"] = await request.json()
    except Exception:
        info["body"] = "Could not read request body"
    return info


def _error_content(e: Exception) -> tuple[int, dict[str, Any]]:

    if isinstance(e, SpectralError):
        logger.warning(f"{e.__class__.__name__}: {e.msg}")
        return e.status_code, e.to_dict() | {"message": e.msg}
    if isinstance(e, HTTPException):
        detail = e.detail if isinstance(e.detail, dict) else {"msg": str(e.detail)}
        return e.status_code, {
            "message": detail.get("msg"),
            "error_type": e.__class__.__name__,
            "input": detail.get("input"),
            "detail": detail.get("detail"),
        }
    logger.exception(e)
    return 500, {
        "message": "Internal server error",
        "error_type": e.__class__.__name__,
        "detail": str(e),
        "traceback": traceback.format_exc().splitlines(),
    }


class ExceptionHandlerMiddleware(
    BaseHTTPMiddleware
):  # pylint: disable=too-few-public-methods
    """
    Solver errors become responses with the status code of their class, HTTPException keeps
    its own and anything else becomes 500 - Internal Server Error.
    Attributes:
           app (FastAPI): The FastAPI application instance.
    """

    def __init__(self, app: FastAPI):

        super().__init__(app)

    async def dispatch(self, request: Request, call_next):
        """
        Dispatch function for sending errors to user from API
        Args:
            request (Request): The incoming request object.
            call_next: function to extract.
        """

        try:
            return await call_next(request)
        except Exception as e:
            status_code, content = _error_content(e)
            content["request"] = await _request_info(request)
            return JSONResponse(status_code=status_code, content=content)
