"""Slave samplers and the pieces they share."""

from samplers.base import Sampler, reset_parameters
from samplers.cem_sampler import CemConfig, CemSampler, CemState
from samplers.context import RoundContext, SurrogateOracle
from samplers.g2anet_sampler import G2ANetConfig, G2ANetSampler, GumbelTopKReinforceSampler, TwoStageAttention
from samplers.gumbel import SubsetDraw, gumbel_topk_sample
from samplers.ip_solver import IpResult, LinearSurrogate, QuadraticSurrogate, solve_ip
from samplers.loader import build_sampler, load_samplers, sampler_streams
from samplers.population_samplers import BestInHistory, RandomSampler, TlboSampler, random_sample
from samplers.replay_buffer import ClusteredReplayBuffer, ReplayEntry
from samplers.solver_sampler import SolverConfig, SolverSampler
from samplers.wolpertinger_sampler import WolpertingerConfig, WolpertingerSampler

__all__ = [
    "Sampler",
    "reset_parameters",
    "RoundContext",
    "SurrogateOracle",
    "SubsetDraw",
    "gumbel_topk_sample",
    "IpResult",
    "LinearSurrogate",
    "QuadraticSurrogate",
    "solve_ip",
    "SolverConfig",
    "SolverSampler",
    "WolpertingerConfig",
    "WolpertingerSampler",
    "ClusteredReplayBuffer",
    "ReplayEntry",
    "G2ANetConfig",
    "G2ANetSampler",
    "GumbelTopKReinforceSampler",
    "TwoStageAttention",
    "CemConfig",
    "CemSampler",
    "CemState",
    "BestInHistory",
    "RandomSampler",
    "TlboSampler",
    "random_sample",
    "build_sampler",
    "load_samplers",
    "sampler_streams",
]
