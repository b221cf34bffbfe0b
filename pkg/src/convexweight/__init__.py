"""Convex weight of quantum devices, dual witnesses and exclusion games."""

from .devices import (ChannelChoi, Device, Ensemble, InstrumentSet,
                      MeasurementAssemblage, Povm, State, StateAssemblage,
                      noisy_mix, random_device, validate)
from .dilation import (ComponentCertificate, NaimarkDilation,
                       certificate_for_component, component_from_E,
                       ensemble_component_operators, is_extreme,
                       naimark_dilation, trivial_component_weight_bound,
                       trivial_weight_analytic)
from .freesets import (DeviceShape, FreeSetSpec, deterministic_strategies,
                       membership_check)
from .games import (ExclusionGame, canonicalize, exclusion_povm_filter,
                    game_from_witness, payoff, verify_ratio)
from .jsonio import parse_device, serialize_device
from .solver.program import ConeProgram, SolveResult, SolverFailure
from .weight import WeightResult, compute_weight, optimal_decomposition

__version__ = "0.1.0"

__all__ = [
    "ChannelChoi", "ComponentCertificate", "ConeProgram", "Device",
    "DeviceShape", "Ensemble", "ExclusionGame", "FreeSetSpec",
    "InstrumentSet", "MeasurementAssemblage", "NaimarkDilation", "Povm",
    "SolveResult", "SolverFailure", "State", "StateAssemblage",
    "WeightResult", "canonicalize", "certificate_for_component",
    "component_from_E", "compute_weight", "deterministic_strategies",
    "ensemble_component_operators", "exclusion_povm_filter",
    "game_from_witness", "is_extreme", "membership_check",
    "naimark_dilation", "noisy_mix", "optimal_decomposition", "parse_device",
    "payoff", "random_device", "serialize_device",
    "trivial_component_weight_bound", "trivial_weight_analytic", "validate",
    "verify_ratio",
]
