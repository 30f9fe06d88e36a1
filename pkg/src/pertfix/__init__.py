"""Fixed points and contraction certificates in perturbed metric spaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError, DomainError, DomainEscapeError, DslError, EstimateError, EvaluationError,
    LexError, ParameterError, ParseError, PertfixError, ProbeError, UnknownEntryError,
)
from .expr import Formula, evaluate, free_variables, parse, parse_source, to_source, tokenize  # noqa: E402
from .space import (  # noqa: E402
    PerturbedSpace, SampleSet, SelfMap, build_map, build_space, exact_distance, sample_points,
)
