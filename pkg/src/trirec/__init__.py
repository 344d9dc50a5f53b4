"""trirec: self-corrective sparse-view 3D reconstruction on procedural scenes."""

__version__ = "0.1.0"
