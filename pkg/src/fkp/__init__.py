from .spectral import Field, Grid2D, make_grid

__all__ = ["Field", "Grid2D", "make_grid"]
__version__ = "0.1.0"
