from reapsnap.core.errors import ReapError

__all__ = ["ReapError"]
