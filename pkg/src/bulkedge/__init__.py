"""Bulk-edge correspondence toolkit: matrix polynomials, configurations, Bun families and indices."""

__version__ = "0.1.0"

from .configspace import Configuration, chart_select, gl_equivalence, mobius_apply, restrict, validate
from .confmap import bun_family, conf_plane, conf_region
from .contours import Contour, Region
from .indices import (HermitianPath, bulk_field, bulk_index, chern_number, edge_field, edge_index,
                      spectral_flow, verify_correspondence)
from .matpoly import MatrixLaurentPoly, MobiusTransform, companion, fejer_approx, winding_number
from .models import ModelSpec, builtin, gap_check, load_model
from .projectors import ProjectorField, riesz_projector
from .toeplitz import coker_dim_estimate, toeplitz_index, truncate

__all__ = [
    "Configuration", "Contour", "HermitianPath", "MatrixLaurentPoly", "MobiusTransform", "ModelSpec",
    "ProjectorField", "Region", "builtin", "bulk_field", "bulk_index", "bun_family", "chart_select",
    "chern_number", "coker_dim_estimate", "companion", "conf_plane", "conf_region", "edge_field",
    "edge_index", "fejer_approx", "gap_check", "gl_equivalence", "load_model", "mobius_apply",
    "restrict", "riesz_projector", "spectral_flow", "toeplitz_index", "truncate", "validate",
    "verify_correspondence", "winding_number",
]
