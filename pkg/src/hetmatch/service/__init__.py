from .app import create_app
from .state import AppState, TrainingBusy

__all__ = ["AppState", "TrainingBusy", "create_app"]
