"""Teach service package."""

from .app import create_app
from .session import SessionError, TeachSession
