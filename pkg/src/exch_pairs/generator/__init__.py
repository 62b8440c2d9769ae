"""Exchangeable cause-effect pair generator."""
from .core import (Dataset, Example, ExampleMeta, GenConfig, SampleDraws, all_cells,
                   assemble_dataset, build_example, cell_id, draw_samples, generate_example,
                   noisify, noisify_dataset, parse_cells)
from .mechanisms import (HyperParams, MechanismKind, MechanismParams, brownian_mechanism,
                         interpolate_knots, linear_mechanism, piecewise_mechanism,
                         polynomial_mechanism, sample_mechanism_params, scalar_mechanism)
from .sizes import SizeModel, fit_size_model

__all__ = [
    "Dataset", "Example", "ExampleMeta", "GenConfig", "SampleDraws", "all_cells",
    "assemble_dataset", "build_example", "cell_id", "draw_samples", "generate_example",
    "noisify", "noisify_dataset", "parse_cells", "HyperParams", "MechanismKind",
    "MechanismParams", "brownian_mechanism", "interpolate_knots", "linear_mechanism",
    "piecewise_mechanism", "polynomial_mechanism", "sample_mechanism_params",
    "scalar_mechanism", "SizeModel", "fit_size_model",
]
