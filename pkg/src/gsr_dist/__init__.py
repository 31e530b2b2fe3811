"""Distribution of the Generalized Shiryaev-Roberts stopping time via Whittaker spectral expansions"""

__version__ = "0.1.0"
