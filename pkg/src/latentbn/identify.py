"""Pick the recovery procedure that applies to a model and run it."""
import numpy as np

from .distribution import DistributionTensor
from .errors import IdentificationError, ModelError
from .model import parameter_dimension
from .recovery import RecoveryResult, kruskal_recover, recover_43b
from .reductions import (
    _equivalent_form,
    _root_hidden,
    _transfer_back,
    conditioning_structure,
    fiber_43e,
    recover_via_conditioning,
    recover_via_sink,
    sink_structure,
    star_structure,
)
from .scalar import FLOAT, RATIONAL, to_mode

#: procedure names reported by :func:`procedure_for`
KRUSKAL, FOUR_THREE_B, SINK, CONDITIONING, STAR = (
    "kruskal", "odds-ratio", "sink", "conditioning", "star",
)


def _three_zero(model):
    h = model.hidden_node
    return (
        len(model.hidden) == 1
        and len(model.observed) == 3
        and _root_hidden(model)
        and set(model.edges) == {(h, v) for v in model.observed}
    )


def roles_43b(model):
    """Observables (X1, X2, X3, X4) if ``model`` has the 4-3b shape, else None."""
    if len(model.hidden) != 1 or len(model.observed) != 4 or not _root_hidden(model):
        return None
    h = model.hidden_node
    obs_edges = {e for e in model.edges if h not in e}
    for v1 in model.observed:
        kids = [b for a, b in obs_edges if a == v1]
        if len(kids) != 2:
            continue
        for v3 in kids:
            v2 = next(k for k in kids if k != v3)
            rest = [v for v in model.observed if v not in (v1, v2, v3)]
            if obs_edges == {(v1, v2), (v1, v3), (v3, rest[0])}:
                return v1, v2, v3, rest[0]
    return None


def procedure_for(model):
    """Name of the applicable procedure, or None for models without one."""
    if len(model.hidden) != 1 or not _root_hidden(model):
        return None
    if _three_zero(model):
        return KRUSKAL
    if _equivalent_form(model, roles_43b) is not None:
        return FOUR_THREE_B
    if sink_structure(model):
        return SINK
    if _equivalent_form(model, conditioning_structure) is not None:
        return CONDITIONING
    if _equivalent_form(model, star_structure) is not None:
        return STAR
    return None


def _prepare(model, tensor, mode):
    if mode is None:
        return tensor
    if mode == RATIONAL and tensor.mode == FLOAT:
        raise ModelError("rational mode needs exact input; give tensor entries as 'p/q' strings")
    return DistributionTensor(tensor.variables, to_mode(tensor.values, mode), tensor.normalized)


def identify(model, tensor, mode=None):
    """All parameter sets of ``model`` reproducing ``tensor`` (the computed fiber).

    ``mode`` forces the arithmetic; by default it follows the tensor's
    entries.  Models with no procedure raise :class:`IdentificationError`,
    naming the generic dimension count when it rules out a finite fiber.
    """
    tensor = _prepare(model, tensor, mode)
    if sorted(tensor.variables) != sorted(model.observed):
        raise IdentificationError(
            "model shape", f"tensor over {tensor.variables}, model observes {model.observed}"
        )
    proc = procedure_for(model)
    h = model.hidden_node if len(model.hidden) == 1 else None
    if proc == KRUSKAL:
        res = kruskal_recover(tensor.reorder(model.observed), model.n(h), hidden=h, name=model.name)
        return RecoveryResult(model, res.candidates, res.preconditions, res.mode)
    if proc == FOUR_THREE_B:
        form = _equivalent_form(model, roles_43b)
        roles = roles_43b(form)
        res = recover_43b(tensor.reorder(roles), model.n(h), hidden=h, name=model.name)
        res.model = form
        return _transfer_back(res, form, model, tensor)
    if proc == SINK:
        return recover_via_sink(model, tensor)
    if proc == CONDITIONING:
        return recover_via_conditioning(model, tensor)
    if proc == STAR:
        return fiber_43e(tensor, model)
    dim = parameter_dimension(model)
    obs = int(np.prod([model.n(v) for v in model.observed])) - 1
    if dim > obs:
        raise IdentificationError(
            "finite fiber",
            f"dim(Theta)={dim} exceeds the observable dimension {obs}; the model is generically infinite-to-one",
            witness=[dim, obs],
        )
    raise IdentificationError(
        "procedure", f"no constructive identification procedure applies to {model!r}"
    )

