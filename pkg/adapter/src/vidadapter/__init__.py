"""Reference perception adapter for the video-QA wire contract."""

from .config import AdapterConfig, AdapterConfigError
from .server import create_app

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "AdapterConfigError", "create_app", "__version__"]
