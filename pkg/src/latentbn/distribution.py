"""Joint distribution tensors, marginalization, conditioning and amalgamation."""
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .errors import IdentificationError, ModelError
from .model import cpt_array
from .scalar import is_exact, mode_of, parse_array, serialize_array

FLOAT_MASS_TOL = 1e-12


@dataclass(frozen=True)
class DistributionTensor:
    """A (possibly unnormalized) probability array over named variables.

    Axis ``k`` of ``values`` belongs to ``variables[k]``.
    """

    variables: tuple
    values: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.values.ndim != len(self.variables):
            raise ModelError(
                f"tensor has {self.values.ndim} axes for {len(self.variables)} variables"
            )
        if len(set(self.variables)) != len(self.variables):
            raise ModelError("repeated variable in tensor")
        self.values.flags.writeable = False

    @property
    def shape(self):
        return self.values.shape

    @property
    def mode(self):
        return mode_of(self.values)

    def axis(self, v):
        try:
            return self.variables.index(v)
        except ValueError:
            raise ModelError(f"unknown variable {v}; tensor is over {self.variables}") from None

    def total(self):
        return self.values.sum()

    def reorder(self, variables):
        variables = tuple(variables)
        if sorted(variables) != sorted(self.variables):
            raise ModelError(f"cannot reorder {self.variables} as {variables}")
        perm = [self.axis(v) for v in variables]
        return DistributionTensor(variables, np.transpose(self.values, perm).copy(), self.normalized)

    def rename(self, mapping):
        return DistributionTensor(
            tuple(mapping.get(v, v) for v in self.variables), self.values.copy(), self.normalized
        )

    def matrix(self, rows, cols):
        """Matrix view: states of ``rows`` variables index rows (lexicographic)."""
        rows, cols = tuple(rows), tuple(cols)
        t = self.reorder(rows + cols).values
        nr = prod(t.shape[: len(rows)])
        return t.reshape(nr, -1)

    def to_float(self):
        return DistributionTensor(self.variables, self.values.astype(float), self.normalized)

    def to_json(self):
        return {
            "variables": list(self.variables),
            "shape": list(self.shape),
            "values": serialize_array(self.values.ravel()),
            "normalized": self.normalized,
        }


def tensor_from_json(doc):
    variables = tuple(int(v) for v in doc["variables"])
    shape = tuple(int(s) for s in doc["shape"])
    values = parse_array(doc["values"])
    if values.size != prod(shape):
        raise ModelError(f"{values.size} values do not fill shape {shape}")
    values = values.reshape(shape)
    tensor = DistributionTensor(variables, values, bool(doc.get("normalized", True)))
    check_tensor(tensor)
    return tensor


def check_tensor(tensor):
    vals = tensor.values
    exact = is_exact(vals)
    if any(x < (0 if exact else -FLOAT_MASS_TOL) for x in vals.flat):
        raise ModelError("tensor has negative entries")
    if tensor.normalized:
        total = vals.sum()
        if (total != 1) if exact else abs(total - 1) > FLOAT_MASS_TOL:
            raise ModelError(f"normalized tensor has total mass {total}")
    return tensor


def joint_distribution(model, theta):
    """Full joint over every node: the product of all CPTs."""
    nodes = model.nodes
    full = [model.n(v) for v in nodes]
    exact = theta.mode == "rational"
    out = np.ones(full, dtype=object if exact else float)
    if exact:
        out[...] = Fraction(1)
    for v in nodes:
        table = np.asarray(cpt_array(model, theta, v))
        if table.shape[-1] != model.n(v):
            raise ModelError(f"CPT of node {v} does not match its state size")
        axes = list(model.parents(v)) + [v]
        order = sorted(axes, key=nodes.index)
        table = np.transpose(table, [axes.index(a) for a in order])
        shape = [model.n(w) if w in axes else 1 for w in nodes]
        out = out * table.reshape(shape)
    return DistributionTensor(nodes, out, True)


def marginalize(tensor, keep):
    """Sum out every variable not in ``keep``; result axes follow ``tensor``'s order."""
    keep = set(keep)
    unknown = keep - set(tensor.variables)
    if unknown:
        raise ModelError(f"unknown variables {sorted(unknown)}")
    drop = tuple(k for k, v in enumerate(tensor.variables) if v not in keep)
    values = tensor.values.sum(axis=drop) if drop else tensor.values.copy()
    kept = tuple(v for v in tensor.variables if v in keep)
    if not kept:
        values = np.asarray(values).reshape(())
    return DistributionTensor(kept, np.asarray(values), tensor.normalized)


def observable_distribution(model, theta):
    """The marginal over observable nodes (the observable parameterization map)."""
    return marginalize(joint_distribution(model, theta), model.observed)


def condition(tensor, fixed, normalize=False):
    """Slice at 1-based states ``fixed``; divide by the slice mass iff ``normalize``."""
    index = [slice(None)] * len(tensor.variables)
    for v, s in fixed.items():
        ax = tensor.axis(v)
        if not 1 <= s <= tensor.shape[ax]:
            raise ModelError(f"state {s} out of range for variable {v}")
        index[ax] = s - 1
    values = np.asarray(tensor.values[tuple(index)])
    rest = tuple(v for v in tensor.variables if v not in fixed)
    if normalize:
        mass = values.sum()
        if mass == 0 or (not is_exact(values) and abs(mass) <= FLOAT_MASS_TOL):
            raise IdentificationError(
                "positive slice mass", f"slice {fixed} has zero mass", witness=mass
            )
        values = values / mass
        return DistributionTensor(rest, values, True)
    return DistributionTensor(rest, values.copy(), False)


def amalgamate(tensor, group, name=None):
    """Replace ``group`` by one variable on the product state space.

    States are encoded lexicographically with the first group member most
    significant.  The new variable takes ``name`` (default: the first group
    member's id) and sits at the first group member's axis position.
    """
    group = tuple(group)
    for v in group:
        tensor.axis(v)
    first = min(tensor.axis(v) for v in group)
    others = [v for v in tensor.variables if v not in group]
    order = others[:first] + list(group) + others[first:]
    t = tensor.reorder(order).values
    shape = list(t.shape)
    merged = prod(shape[first:first + len(group)])
    new_shape = shape[:first] + [merged] + shape[first + len(group):]
    new_vars = tuple(others[:first]) + (group[0] if name is None else name,) + tuple(others[first:])
    return DistributionTensor(new_vars, t.reshape(new_shape), tensor.normalized)


def max_abs_difference(a, b):
    """Max-norm distance between two tensors over the same variables."""
    b = b.reorder(a.variables)
    diff = np.asarray(a.values, dtype=object if is_exact(a.values) and is_exact(b.values) else float) - b.values
    return max(abs(x) for x in diff.flat) if diff.size else 0


def reproduces(a, b, rtol=1e-8):
    """Exact equality for two rational tensors, relative max-norm otherwise."""
    b = b.reorder(a.variables)
    if is_exact(a.values) and is_exact(b.values):
        return bool(np.all(a.values == b.values))
    fa = np.asarray(a.values, dtype=float)
    fb = np.asarray(b.values, dtype=float)
    return float(np.max(np.abs(fa - fb))) <= rtol * max(float(np.max(np.abs(fa))), 1e-300)
