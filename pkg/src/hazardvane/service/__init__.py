from .app import create_app, serve
from .sessions import ControlChange, SessionRunner

__all__ = ["ControlChange", "SessionRunner", "create_app", "serve"]
