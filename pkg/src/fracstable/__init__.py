"""Periodic fractional stable motions: kernels, integrability, flows, laws, classification and simulation."""

from .errors import DivergentIntegralError, DomainError, FracStableError, SingularPointError, SpecError
from .kernel import (
    AtomSpec,
    KernelSpec,
    MixedLfsmSpec,
    ProfileFn,
    StableParams,
    dump_spec,
    embed_mixed_lfsm,
    eval_G,
    eval_K,
    frac_part,
    int_part,
    load_spec,
    normalize_speed,
    spec_from_dict,
    spec_to_dict,
)
from .quadrature import QuadratureConfig

__version__ = "0.1.0"
