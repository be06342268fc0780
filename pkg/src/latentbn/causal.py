"""Causal effects by adjustment over direct causes, and their spread across a fiber."""
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distribution import joint_distribution, marginalize
from .errors import ModelError
from .identify import identify
from .model import all_states, cpt_array
from .reductions import canonical_classes
from .scalar import FLOAT, RATIONAL, is_exact, serialize_array, serialize_scalar, text_scalar

#: float contrasts this close to zero count as zero for sign agreement
ZERO_TOL = 1e-12


def causal_effect(model, theta, i, j):
    """Table of P(X_j | do(X_i = x)) with rows x (0-based state index).

    Averages X_j's CPT over the joint marginal of its other parents,
    taken from the full joint that ``theta`` defines.
    """
    parents = list(model.parents(j))
    if i not in parents:
        raise ModelError(f"{i} is not a parent of {j}")
    others = [p for p in parents if p != i]
    cpt = cpt_array(model, theta, j)  # axes parents..., j
    exact = is_exact(cpt)
    ni, nj = model.n(i), model.n(j)
    out = np.empty((ni, nj), dtype=object if exact else float)
    out[...] = 0
    if others:
        weights = marginalize(joint_distribution(model, theta), set(others)).reorder(others).values
    axis_i = parents.index(i)
    for x in range(ni):
        block = np.take(cpt, x, axis=axis_i)  # axes others..., j
        if not others:
            out[x] = block
            continue
        for s in all_states([model.n(o) for o in others]):
            idx = tuple(s)
            out[x] = out[x] + weights[idx] * block[idx]
    return out


def contrast(effect):
    """P(X_j = last | do(X_i = last)) - P(X_j = last | do(X_i = first)).

    For binary nodes this is P(X_j=2 | do(X_i=2)) - P(X_j=2 | do(X_i=1)).
    """
    return effect[-1, -1] - effect[0, -1]


def _sign(c, exact):
    if exact:
        return (c > 0) - (c < 0)
    return 0 if abs(c) <= ZERO_TOL else (1 if c > 0 else -1)


def signs_agree(contrasts, exact=False):
    """True unless some contrasts are strictly positive and others strictly negative."""
    signs = {_sign(c, exact) for c in contrasts}
    return not (1 in signs and -1 in signs)


@dataclass
class EffectReport:
    """Effects of X_i on X_j for one representative per label-swap orbit."""

    cause: int
    outcome: int
    candidates: list
    effects: list
    contrasts: list
    signs_agree: bool
    mode: str = FLOAT
    fiber_size: int = 0

    @property
    def ambiguous(self):
        return not self.signs_agree

    def to_json(self):
        return {
            "cause": self.cause,
            "outcome": self.outcome,
            "mode": self.mode,
            "fiber_size": self.fiber_size,
            "effects": [
                {
                    "candidate": cand.to_json(),
                    "do": {str(x + 1): serialize_array(eff[x]) for x in range(eff.shape[0])},
                    "contrast": serialize_scalar(c),
                }
                for cand, eff, c in zip(self.candidates, self.effects, self.contrasts)
            ],
            "signs_agree": self.signs_agree,
            "ambiguous": self.ambiguous,
        }

    def to_text(self):
        lines = [f"effect of X{self.cause} on X{self.outcome} ({self.mode}, fiber size {self.fiber_size})"]
        for k, (eff, c) in enumerate(zip(self.effects, self.contrasts), 1):
            lines.append(f"candidate {k}:")
            for x in range(eff.shape[0]):
                vals = " ".join(text_scalar(v) for v in eff[x])
                lines.append(f"  P(X{self.outcome} | do(X{self.cause}={x + 1})) = [{vals}]")
            lines.append(f"  contrast = {text_scalar(c)}")
        lines.append(f"signs_agree = {str(self.signs_agree).lower()}")
        return "\n".join(lines)


def effect_report(model, candidates, i, j, fiber_size=None):
    """Effects for given candidates, one per label-swap orbit."""
    if not candidates:
        raise ModelError("no candidates")
    exact = is_exact(candidates[0][model.nodes[0]])
    reps = canonical_classes(model, candidates, tol=0 if exact else 1e-9)
    effects = [causal_effect(model, t, i, j) for t in reps]
    contrasts = [contrast(e) for e in effects]
    if not exact:
        contrasts = [float(c) for c in contrasts]
    else:
        contrasts = [Fraction(c) for c in contrasts]
    return EffectReport(
        i, j, reps, effects, contrasts, signs_agree(contrasts, exact),
        RATIONAL if exact else FLOAT, len(candidates) if fiber_size is None else fiber_size,
    )


def effect_ambiguity(model, tensor, i, j, mode=None):
    """Recover the fiber of ``tensor`` and compare the effect of X_i on X_j across it."""
    if i not in model.parents(j):
        raise ModelError(f"{i} is not a parent of {j}")
    res = identify(model, tensor, mode)
    return effect_report(model, res.candidates, i, j, res.k)
