"""Simulate graph contact processes and estimate their rates from one trajectory."""
from .dynamics import Model, ModelParams
from .graph import Graph, generate_complete, generate_er, generate_ws, load_edgelist
from .simulate import Trajectory, simulate
from .estimate import estimate_theta

__all__ = [
    "Graph", "Model", "ModelParams", "Trajectory",
    "generate_complete", "generate_er", "generate_ws", "load_edgelist",
    "simulate", "estimate_theta",
]
__version__ = "0.1.0"
