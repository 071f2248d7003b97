from figure_kit.render import (FIGURES, FigureError, FigureSpec, read_agg_csv,
                               render)

__all__ = ["FIGURES", "FigureError", "FigureSpec", "read_agg_csv", "render"]
