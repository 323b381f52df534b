"""Shift-ECS: persistent result DAGs with shift nodes, and their enumeration."""

from ._kernels import BOT, EPS
from .arena import (
    EcsArena,
    NodeId,
    children_well_formed,
    eps_condition_holds,
    is_eps_safe,
    is_safe,
    sem_oracle,
    structural_odepth,
)
from .enumerate import DELAY_CONSTANT, EnumerationSession, Walker, enumerate_node, step_counter


def add(arena: EcsArena, symbol) -> NodeId:
    return arena.add(symbol)


def shift(arena: EcsArena, v: NodeId, k: int) -> NodeId:
    return arena.shift(v, k)


def prod(arena: EcsArena, v1: NodeId, v2: NodeId) -> NodeId:
    return arena.prod(v1, v2)


def union(arena: EcsArena, v3: NodeId, v4: NodeId) -> NodeId:
    return arena.union(v3, v4)


enumerate = enumerate_node

__all__ = [
    "BOT",
    "EPS",
    "DELAY_CONSTANT",
    "EcsArena",
    "EnumerationSession",
    "NodeId",
    "Walker",
    "add",
    "children_well_formed",
    "enumerate",
    "enumerate_node",
    "eps_condition_holds",
    "is_eps_safe",
    "is_safe",
    "prod",
    "sem_oracle",
    "shift",
    "step_counter",
    "structural_odepth",
    "union",
]
