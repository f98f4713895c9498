"""covflow: pseudospectral simulation and inequality verification for
dissipative electromagnetic Schrodinger flows du/dt = (a+ib)(Lap_A u + Vu + F).
"""

from .grid import GridSpec, SampledComplexField, SampledRealVectorField
from .fields import PotentialSpec, hypothesis_report
from .gauge import GaugeTransform, apply_gauge, cronstrom_phase, cronstrom_potential
from .evolve import FlowParams, PotentialSystem, Trajectory
from .transform import AppellParams, appell_forward, appell_map_times
from .monitors import WeightSpec, convexity_check, dissipation_check, weighted_H
from .carleman import CarlemanParams, TestFunctionSpec, carleman_sides, cutoff_factory
from .pipeline import ExperimentConfig, load_config, parse_config, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AppellParams",
    "CarlemanParams",
    "ExperimentConfig",
    "FlowParams",
    "GaugeTransform",
    "GridSpec",
    "PotentialSpec",
    "PotentialSystem",
    "SampledComplexField",
    "SampledRealVectorField",
    "TestFunctionSpec",
    "Trajectory",
    "WeightSpec",
    "apply_gauge",
    "appell_forward",
    "appell_map_times",
    "carleman_sides",
    "convexity_check",
    "cronstrom_phase",
    "cronstrom_potential",
    "cutoff_factory",
    "dissipation_check",
    "hypothesis_report",
    "load_config",
    "parse_config",
    "run_pipeline",
    "weighted_H",
]
