"""Wave maps into S^2 on R^{2+1}: short-pulse evolution and null-cone diagnostics."""

__version__ = "0.1.0"
