# nnet.py
"""ReLU feedforward networks and their output sets.

Hidden layers are ``relu(W x + v)``; the last layer is ``W x + v`` only.
Exact propagation splits every neuron whose range straddles zero and
returns a union of constrained zonotopes; the relaxed propagation keeps one
set per layer by replacing each such ReLU with its triangle hull.

Both propagations keep the input set's generator columns and constraint rows
as a prefix of every output member, which the closed-loop assembly relies on.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError, validator

from czreach import config
from czreach.czono import ConstrainedZonotope, SetUnion
from czreach.errors import (
    DimensionChainError,
    EmptySet,
    IndexOutOfRange,
    MemberExplosion,
    SchemaError,
)

logger = logging.getLogger(__name__)

RANGE_METHODS = ("lp", "interval")


class LayerSchema(BaseModel):
    W: List[List[float]]
    v: List[float]


class NetworkSchema(BaseModel):
    schema_version: int = config.SCHEMA_VERSION
    layers: List[LayerSchema]

    @validator("schema_version")
    def _known_version(cls, value):
        if value != config.SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value}, expected {config.SCHEMA_VERSION}")
        return value

    @validator("layers")
    def _has_layers(cls, layers):
        if not layers:
            raise ValueError("a network needs at least one layer")
        return layers


@dataclass(frozen=True)
class Layer:
    W: np.ndarray
    v: np.ndarray


class FeedforwardNetwork:
    def __init__(self, layers: Sequence[Tuple[object, object]]):
        if not layers:
            raise DimensionChainError("a network needs at least one layer")
        built = []
        for k, (W, v) in enumerate(layers):
            try:
                W = np.array(W, dtype=float, ndmin=2)
                v = np.atleast_1d(np.array(v, dtype=float))
            except ValueError as e:
                raise SchemaError(f"layer {k}: weights are not a rectangular matrix ({e})")
            if W.ndim != 2 or v.ndim != 1:
                raise SchemaError(f"layer {k}: W must be a matrix and v a vector")
            if v.size != W.shape[0]:
                raise DimensionChainError(
                    f"layer {k}: W has {W.shape[0]} rows but v has {v.size} entries"
                )
            if built and W.shape[1] != built[-1].W.shape[0]:
                raise DimensionChainError(
                    f"layer {k}: W has {W.shape[1]} columns but layer {k - 1} "
                    f"outputs {built[-1].W.shape[0]} values"
                )
            W.setflags(write=False)
            v.setflags(write=False)
            built.append(Layer(W, v))
        self.layers = tuple(built)

    @property
    def input_dim(self):
        return self.layers[0].W.shape[1]

    @property
    def output_dim(self):
        return self.layers[-1].W.shape[0]

    @property
    def hidden_layers(self):
        return self.layers[:-1]

    @property
    def output_layer(self):
        return self.layers[-1]

    def __call__(self, x):
        return eval_network(self, x)

    def __repr__(self):
        widths = [self.input_dim] + [layer.W.shape[0] for layer in self.layers]
        return f"FeedforwardNetwork({'-'.join(str(w) for w in widths)})"

    @classmethod
    def from_dict(cls, data):
        try:
            schema = NetworkSchema.parse_obj(data)
        except ValidationError as e:
            raise SchemaError(f"invalid network: {e}")
        return cls([(layer.W, layer.v) for layer in schema.layers])

    def to_dict(self):
        return {
            "schema_version": config.SCHEMA_VERSION,
            "layers": [{"W": layer.W.tolist(), "v": layer.v.tolist()} for layer in self.layers],
        }


def load_network(path) -> FeedforwardNetwork:
    """Read a network JSON file: ``{"layers": [{"W": [[...]], "v": [...]}, ...]}``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    except OSError as e:
        raise SchemaError(f"{path}: cannot read network file ({e.strerror})")
    try:
        return FeedforwardNetwork.from_dict(data)
    except (SchemaError, DimensionChainError) as e:
        raise type(e)(f"{path}: {e}")


def eval_network(net: FeedforwardNetwork, x):
    """Forward pass for one input vector or a batch of row vectors."""
    h = np.asarray(x, dtype=float)
    for layer in net.hidden_layers:
        h = np.maximum(h @ layer.W.T + layer.v, 0.0)
    return h @ net.output_layer.W.T + net.output_layer.v


def neuron_ranges(I: ConstrainedZonotope, method: str = "lp"):
    """Bounds (lb, ub) on every coordinate of I.

    ``lp`` gives the interval hull; ``interval`` ignores the constraints and
    uses the zonotope box, which is looser but needs no LP.
    """
    if method == "lp":
        if I.is_empty():
            raise EmptySet("cannot bound neurons over an empty set")
        return I.interval_hull()
    if method == "interval":
        return I.zonotope_box()
    raise ValueError(f"unknown range method {method!r}, expected one of {RANGE_METHODS}")


def _projection(n, i):
    E = np.eye(n)
    E[i, i] = 0.0
    return E


def _unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _check_index(n, i):
    if not 0 <= i < n:
        raise IndexOutOfRange(f"neuron index {i} outside 0..{n - 1}")


def step_relu_exact(I: SetUnion, i: int, lb_i: float, ub_i: float) -> SetUnion:
    """Exact image of I under ``x_i -> max(0, x_i)``; empty branches are dropped."""
    if I.dim is not None:
        _check_index(I.dim, i)
    out = []
    for member in I:
        n = member.dim
        E = _projection(n, i)
        if ub_i <= 0:
            out.append(member.linear_map(E))
            continue
        e_i = _unit(n, i)
        positive = member.intersect_halfspace(-e_i, 0.0)
        negative = member.intersect_halfspace(e_i, 0.0)
        if not positive.is_empty():
            out.append(positive)
        if not negative.is_empty():
            out.append(negative.linear_map(E))
    return SetUnion(out, dim=I.dim)


def step_relu_over(I: ConstrainedZonotope, i: int, l_i: float, u_i: float) -> ConstrainedZonotope:
    """Triangle relaxation of the ReLU on coordinate i.

    Adds factors (a, b, p, q) with y_i = u a and the rows
    ``a + b = 1``, ``-x_i + u a + (u - l) p = u - l`` and
    ``-x_i + (u - l)(a + q) = -u`` (shifted by c_i), which carve out
    ``0 <= y <= u``, ``y >= x`` and ``y <= u (x - l) / (u - l)``.
    """
    n = I.dim
    _check_index(n, i)
    if u_i <= 0:
        return I.linear_map(_projection(n, i))
    if l_i >= 0:
        return I

    E = _projection(n, i)
    n_gen, n_con = I.n_gen, I.n_con
    width = u_i - l_i
    g_i = I.G[i]

    G = np.hstack((E @ I.G, np.zeros((n, 4))))
    G[i, n_gen] = u_i
    A = np.zeros((n_con + 3, n_gen + 4))
    A[:n_con, :n_gen] = I.A
    A[n_con, n_gen:] = [1.0, 1.0, 0.0, 0.0]
    A[n_con + 1, :n_gen] = -g_i
    A[n_con + 1, n_gen:] = [u_i, 0.0, width, 0.0]
    A[n_con + 2, :n_gen] = -g_i
    A[n_con + 2, n_gen:] = [width, 0.0, 0.0, width]
    c_i = I.c[i]
    b = np.concatenate((I.b, [1.0, c_i + width, c_i - u_i]))
    return ConstrainedZonotope(E @ I.c, G, A, b)


@dataclass(frozen=True)
class ReduceBudget:
    """Per-member complexity limits for the optional order-reduction hook."""

    max_generators: int
    max_constraints: int


def _reduce_members(members, budget, keep_generators, keep_constraints):
    if budget is None:
        return members
    return [
        m.reduce_order(
            max(budget.max_generators, m.dim),
            budget.max_constraints,
            keep_generators=keep_generators,
            keep_constraints=keep_constraints,
        )
        for m in members
    ]


def _as_union(Z) -> SetUnion:
    if isinstance(Z, SetUnion):
        return Z
    return SetUnion([Z])


def reach_exact_network(
    net: FeedforwardNetwork,
    Z: Union[SetUnion, ConstrainedZonotope],
    range_method: str = "lp",
    max_members: Optional[int] = None,
    reduce_budget: Optional[ReduceBudget] = None,
) -> SetUnion:
    """Exact output set of ``net`` over Z as a union; members are ordered by construction."""
    cap = config.MAX_MEMBERS if max_members is None else max_members
    Z = _as_union(Z)
    done = []
    for k, source in enumerate(Z):
        current = [source]
        for depth, layer in enumerate(net.hidden_layers):
            nxt = []
            for member in current:
                I = member.affine_map(layer.W, layer.v)
                lb, ub = neuron_ranges(I, range_method)
                branches = SetUnion([I])
                for i in np.flatnonzero(lb < 0):
                    branches = step_relu_exact(branches, int(i), lb[i], ub[i])
                nxt.extend(branches)
                if len(done) + len(nxt) > cap:
                    raise MemberExplosion(
                        f"exact network propagation exceeded {cap} members; "
                        f"use the over-approximating method or raise the cap"
                    )
            current = _reduce_members(nxt, reduce_budget, source.n_gen, source.n_con)
            logger.debug("input member %d, layer %d: %d members", k, depth, len(current))
        out = net.output_layer
        done.extend(m.affine_map(out.W, out.v) for m in current)
    return SetUnion(done, dim=net.output_dim)


def reach_over_network(
    net: FeedforwardNetwork,
    Z: ConstrainedZonotope,
    range_method: str = "lp",
    reduce_budget: Optional[ReduceBudget] = None,
) -> ConstrainedZonotope:
    """One constrained zonotope containing the network's output over Z."""
    current = Z
    for depth, layer in enumerate(net.hidden_layers):
        I = current.affine_map(layer.W, layer.v)
        lb, ub = neuron_ranges(I, range_method)
        active = 0
        for i in np.flatnonzero(lb < 0):
            if ub[i] > 0:
                active += 1
            I = step_relu_over(I, int(i), lb[i], ub[i])
        current = _reduce_members([I], reduce_budget, Z.n_gen, Z.n_con)[0]
        logger.debug(
            "layer %d: %d relaxed neurons, %d generators, %d constraints",
            depth, active, current.n_gen, current.n_con,
        )
    out = net.output_layer
    return current.affine_map(out.W, out.v)
