"""Query evaluation over grammar-compressed documents.

Annotated automata (and spanners compiled to them) are evaluated directly
on a straight-line program; results live in a Shift-ECS and are enumerated
without decompressing the document.
"""

from ._accel import BACKEND
from .automaton import AnnA, Read, ReadWrite, determinize, is_deterministic, naive_eval, parse_anna
from .ecs import BOT, EPS, EcsArena, EnumerationSession, sem_oracle
from .edits import DocDatabase, EditSession, parse_database
from .evaluation import QueryDataStructure, build_query_structure, evaluate, op_counter
from .slp import Slp, binarize, doc_len, expand, is_cnf, parse_slp
from .spanners import compile_extended_va, compile_va, evaluate_spanner, evaluate_succinct, mapping_of_annotation

__version__ = "0.1.0"
