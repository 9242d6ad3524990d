"""HTTP surface: session auth, error mapping, request/response shapes."""

from lexhive.api.app import create_app

__all__ = ["create_app"]
