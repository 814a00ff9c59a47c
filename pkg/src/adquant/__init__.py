"""Geometric-mean-error quantization of self-similar measures on the line."""

from .measure import (ADProfile, BudgetError, DiscretizedMeasure, IfsMap, IfsSelfSimilar,
                      MeasureError, Mixture, UniformInterval, ad_validate, ball_mass, cantor,
                      conditional, discretize, scale_translate)
from .quantizer import (Codebook, ErrorOrder, QuantizerResult, brute_force_oracle, distortion,
                        dp_optimal_1d, error_curve, lloyd, optimal_point_1d)
from .voronoi import build_partition, cell_stats, mass_band

__version__ = "0.1.0"

__all__ = [
    "ADProfile", "BudgetError", "Codebook", "DiscretizedMeasure", "ErrorOrder", "IfsMap",
    "IfsSelfSimilar", "MeasureError", "Mixture", "QuantizerResult", "UniformInterval",
    "ad_validate", "ball_mass", "brute_force_oracle", "build_partition", "cantor", "cell_stats",
    "conditional", "discretize", "distortion", "dp_optimal_1d", "error_curve", "lloyd",
    "mass_band", "optimal_point_1d", "scale_translate",
]
