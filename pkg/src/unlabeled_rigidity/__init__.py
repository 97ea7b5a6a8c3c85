"""Reconstruction of point configurations from unlabeled length measurements."""

from .errors import AmbiguousResult, NoBaseFound, ReconstructionError, UnsupportedDimension
from .geometry import Configuration, align_congruent, sample_pseudo_generic
from .measurement import (MeasurementEnsemble, UnlabeledDataSet, Walk, build_trilateration_ensemble,
                          evaluate)
from .reconstruction import (ReconstructionOptions, ReconstructionResult, reconstruct,
                             reconstruct_edges_complete)

__all__ = [
    "AmbiguousResult", "Configuration", "MeasurementEnsemble", "NoBaseFound", "ReconstructionError",
    "ReconstructionOptions", "ReconstructionResult", "UnlabeledDataSet", "UnsupportedDimension", "Walk",
    "align_congruent", "build_trilateration_ensemble", "evaluate", "reconstruct",
    "reconstruct_edges_complete", "sample_pseudo_generic",
]
