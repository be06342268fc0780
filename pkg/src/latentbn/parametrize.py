"""Vectorized float evaluation of the observable map on free coordinates.

Two coordinate systems over the same CPTs:

* ``free``: every row's entries but the last (the last is 1 minus the
  rest); its length is the parameter-space dimension;
* ``logits``: one unconstrained logit per entry, mapped through a row-wise
  softmax, so every point is strictly interior.

Both accept a leading batch shape, and complex inputs (for complex-step
derivatives).
"""
import numpy as np

from .model import ParameterSet


class Coordinates:
    def __init__(self, model):
        self.model = model
        self.nodes = model.nodes
        self.observed_axes = tuple(model.nodes.index(v) for v in model.observed)
        self.hidden_axes = tuple(model.nodes.index(v) for v in sorted(model.hidden))
        self.shapes = {v: model.cpt_shape(v) for v in model.nodes}
        self.free_dim = sum(r * (c - 1) for r, c in self.shapes.values())
        self.logit_dim = sum(r * c for r, c in self.shapes.values())
        self._layout = []
        for v in model.nodes:
            parents = list(model.parents(v))
            axes = parents + [v]
            order = sorted(axes, key=model.nodes.index)
            self._layout.append((
                v,
                tuple(model.n(w) for w in parents) + (model.n(v),),
                [axes.index(a) for a in order],
                [model.n(w) if w in axes else 1 for w in model.nodes],
            ))

    # --- conversions -----------------------------------------------------
    def tables_from_free(self, x):
        x = np.asarray(x)
        batch = x.shape[:-1]
        out, pos = {}, 0
        for v, (r, c) in self.shapes.items():
            k = r * (c - 1)
            head = x[..., pos:pos + k].reshape(batch + (r, c - 1))
            last = 1 - head.sum(axis=-1, keepdims=True)
            out[v] = np.concatenate([head, last], axis=-1)
            pos += k
        return out

    def free_from_parameters(self, theta):
        return np.concatenate(
            [np.asarray(theta[v], dtype=float)[:, :-1].ravel() for v in self.nodes]
        )

    def tables_from_logits(self, z, shift=True):
        """Row-wise softmax; ``shift=False`` skips the overflow guard for bounded logits."""
        z = np.asarray(z)
        batch = z.shape[:-1]
        out, pos = {}, 0
        for v, (r, c) in self.shapes.items():
            k = r * c
            block = z[..., pos:pos + k].reshape(batch + (r, c))
            if shift:
                block = block - block.real.max(axis=-1, keepdims=True)
            e = np.exp(block)
            out[v] = e / e.sum(axis=-1, keepdims=True)
            pos += k
        return out

    def parameters(self, tables, index=()):
        return ParameterSet({v: np.array(tables[v][index], dtype=float) for v in self.nodes})

    # --- the observable map -----------------------------------------------
    def observable(self, tables):
        """Flattened observable distribution, shape (batch..., prod obs sizes)."""
        first = tables[self.nodes[0]]
        batch = first.shape[:-2]
        out = None
        for v, shape, perm, bshape in self._layout:
            t = tables[v].reshape(batch + shape)
            nb = len(batch)
            t = np.transpose(t, list(range(nb)) + [nb + p for p in perm])
            t = t.reshape(batch + tuple(bshape))
            out = t if out is None else out * t
        nb = len(batch)
        if self.hidden_axes:
            out = out.sum(axis=tuple(nb + a for a in self.hidden_axes))
        return out.reshape(batch + (-1,))

    def observable_free(self, x):
        return self.observable(self.tables_from_free(x))

    def observable_logits(self, z, shift=True):
        return self.observable(self.tables_from_logits(z, shift))

    # --- derivatives ------------------------------------------------------
    def complex_step_jacobian(self, f, x, h=1e-20):
        """Exact-to-rounding Jacobian of a real-analytic ``f`` by complex steps.

        ``x`` has shape (batch..., d); the result is (batch..., m, d).
        """
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        pert = x[..., None, :] + 1j * h * np.eye(d)
        vals = f(pert)  # (batch..., d, m)
        return np.swapaxes(vals.imag / h, -1, -2)

    def central_difference_jacobian(self, f, x, h=1e-5):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        step = h * np.eye(d)
        plus = f(x[..., None, :] + step)
        minus = f(x[..., None, :] - step)
        return np.swapaxes((plus - minus) / (2 * h), -1, -2)


def polish(model, theta, target, iterations=6):
    """Gauss-Newton refinement of a float parameter set toward ``target``.

    ``target`` is the observable tensor.  Only improving steps are kept,
    so the result never reproduces the target worse than the input.
    """
    coords = Coordinates(model)
    p = np.asarray(target.reorder(model.observed).values, dtype=float).ravel()
    x = coords.free_from_parameters(theta)
    res = coords.observable_free(x) - p
    cost = float(res @ res)
    for _ in range(iterations):
        if cost == 0:
            break
        jac = coords.complex_step_jacobian(coords.observable_free, x)
        step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        trial = x + step
        tables = coords.tables_from_free(trial)
        if any(np.min(t) < 0 for t in tables.values()):
            break
        r2 = coords.observable_free(trial) - p
        c2 = float(r2 @ r2)
        if not c2 < cost:
            break
        x, res, cost = trial, r2, c2
    return coords.parameters(coords.tables_from_free(x))
