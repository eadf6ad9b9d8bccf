from .digits import nonexistence_digit_set, nonexistence_system, stage_scales
from .moran import MoranSpec, discrete_set_from_class, moran_points, moran_scales_from_class
from .prescribed import branching_level, ifs_with_prescribed
from .sharpness import SharpnessParams, SharpnessResult, sharpness_system

__all__ = ["MoranSpec", "SharpnessParams", "SharpnessResult", "branching_level", "discrete_set_from_class",
           "ifs_with_prescribed", "moran_points", "moran_scales_from_class", "nonexistence_digit_set",
           "nonexistence_system", "sharpness_system", "stage_scales"]
