from .app import create_app
from .handlers import DataError, UsageError

__all__ = ["create_app", "DataError", "UsageError"]
