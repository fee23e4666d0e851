from .lab import SixVertexLab

__all__ = ["SixVertexLab"]
