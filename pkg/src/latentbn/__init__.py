"""Parameter identification for discrete Bayesian networks with one hidden variable."""
from .catalog import TABLE, catalog_ids, get_model
from .causal import EffectReport, causal_effect, effect_ambiguity
from .distribution import (
    DistributionTensor,
    amalgamate,
    condition,
    joint_distribution,
    marginalize,
    observable_distribution,
    tensor_from_json,
)
from .equivalence import (
    covered_edges,
    markov_equivalence_class,
    reverse_covered_edge,
    transfer_parameters,
)
from .errors import IdentificationError, IrrationalResultError, ModelError
from .fiber import (
    FiberReport,
    catalog_report,
    multistart_fiber_search,
    observable_jacobian_rank,
)
from .identify import identify
from .model import (
    Model,
    ParameterSet,
    make_parameters,
    parameter_dimension,
    parameters_from_json,
    row_index,
    sample_generic_parameters,
    validate_model,
)
from .orbits import canonicalize, label_swap_orbit
from .recovery import (
    RecoveryResult,
    kruskal_preconditions,
    kruskal_recover,
    kruskal_row_rank,
    odds_ratio_condition,
    recover_43b,
)
from .reductions import fiber_43e, recover_via_conditioning, recover_via_sink
from .scalar import FLOAT, RATIONAL

__version__ = "0.1.0"
