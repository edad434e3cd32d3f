"""Figure rendering for the tumor-immune simulator's CSV bundles."""

from .render import FigureSpec, RenderError, build_figure, load_columns, main, render

__all__ = ["FigureSpec", "RenderError", "build_figure", "load_columns", "main", "render"]
__version__ = "0.1.0"
