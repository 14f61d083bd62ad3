from .env import load_env as _load_env

_load_env()

__version__ = "0.1.0"
