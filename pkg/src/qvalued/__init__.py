"""Q-valued functions, Almgren's embedding, almost-projections and graph currents."""

from .qspace import InvalidInput, QPoint, metric_g, optimal_matching, wasserstein1
from .embedding import EmbeddingSpec, decode, face_of, retract_rho, xi
from .projections import AlmostProjection, build_rho_star, kirszbraun_extend
from .mesh import Mesh, QField
from .dirichlet import dirichlet_energy, minimize_dirichlet
from .currents import SimplicialCurrent, excess_field, graph_current, slice_current

__version__ = "0.1.0"

__all__ = [
    "InvalidInput",
    "QPoint",
    "metric_g",
    "optimal_matching",
    "wasserstein1",
    "EmbeddingSpec",
    "decode",
    "face_of",
    "retract_rho",
    "xi",
    "AlmostProjection",
    "build_rho_star",
    "kirszbraun_extend",
    "Mesh",
    "QField",
    "dirichlet_energy",
    "minimize_dirichlet",
    "SimplicialCurrent",
    "excess_field",
    "graph_current",
    "slice_current",
]
