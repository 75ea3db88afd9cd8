from .fans import FanRepository

__all__ = [
    'FanRepository',
]
