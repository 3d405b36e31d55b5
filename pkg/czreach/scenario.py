# scenario.py
"""Scenario files: schema, loading, and JSON persistence of results.

A scenario names a plant, a controller network (a path relative to the
scenario file, or inline layers), an initial set, a horizon, unsafe sets,
and the reachability method. Sets are written either as
``{"c", "G", "A", "b"}`` or as a box ``{"lo", "hi"}``.
"""
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, conint, root_validator, validator

from czreach import config
from czreach.czono import ConstrainedZonotope
from czreach.errors import CzreachError, ScenarioError
from czreach.exprdyn import NonlinearModel
from czreach.nnet import FeedforwardNetwork, NetworkSchema, ReduceBudget, load_network
from czreach.reach import LinearModel, ReachResult, reach_exact, reach_nonlinear, reach_over
from czreach.verify import UnsafeSet

logger = logging.getLogger(__name__)

METHODS = ("exact", "over", "nonlinear-exact-controller", "nonlinear-over-controller")


class CZModel(BaseModel):
    c: List[float]
    G: List[List[float]] = []
    A: List[List[float]] = []
    b: List[float] = []

    @root_validator(skip_on_failure=True)
    def _shapes(cls, values):
        cls._build(values)
        return values

    @staticmethod
    def _build(values):
        return ConstrainedZonotope(values["c"], values["G"], values["A"], values["b"])

    def to_set(self):
        return self._build(self.dict())


class BoxModel(BaseModel):
    lo: List[float]
    hi: List[float]

    @root_validator(skip_on_failure=True)
    def _ordered(cls, values):
        ConstrainedZonotope.from_box(values["lo"], values["hi"])
        return values

    def to_set(self):
        return ConstrainedZonotope.from_box(self.lo, self.hi)


SetModel = Union[CZModel, BoxModel]


class LinearModelSpec(BaseModel):
    kind: Literal["linear"]
    A_d: List[List[float]]
    B_d: List[List[float]]

    def to_model(self):
        return LinearModel(self.A_d, self.B_d)


class NonlinearModelSpec(BaseModel):
    kind: Literal["nonlinear"]
    f: List[str]
    B_d: List[List[float]]

    def to_model(self):
        return NonlinearModel.from_strings(self.f, self.B_d)


class UnsafeSetSpec(BaseModel):
    label: str = ""
    region: SetModel


class Budgets(BaseModel):
    max_members: Optional[conint(ge=1)] = None
    max_generators: Optional[conint(ge=1)] = None
    max_constraints: Optional[conint(ge=0)] = None

    def reduce_budget(self) -> Optional[ReduceBudget]:
        if self.max_generators is None and self.max_constraints is None:
            return None
        unlimited = 10 ** 9
        return ReduceBudget(
            unlimited if self.max_generators is None else self.max_generators,
            unlimited if self.max_constraints is None else self.max_constraints,
        )


class ScenarioModel(BaseModel):
    schema_version: int = config.SCHEMA_VERSION
    name: str = ""
    model: Union[LinearModelSpec, NonlinearModelSpec] = Field(..., discriminator="kind")
    network: Union[str, NetworkSchema]
    initial_set: SetModel
    horizon: conint(ge=1)
    unsafe_sets: List[UnsafeSetSpec] = []
    method: Literal["exact", "over", "nonlinear-exact-controller", "nonlinear-over-controller"] = "exact"
    seed: int = 0
    budgets: Budgets = Budgets()
    range_method: Literal["lp", "interval"] = "lp"

    @validator("schema_version")
    def _known_version(cls, value):
        if value != config.SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {value}, expected {config.SCHEMA_VERSION}")
        return value

    @root_validator(skip_on_failure=True)
    def _method_matches_model(cls, values):
        linear = values["model"].kind == "linear"
        if linear != (values["method"] in ("exact", "over")):
            raise ValueError(
                f"method {values['method']!r} does not apply to a {values['model'].kind} model"
            )
        return values


@dataclass
class Scenario:
    path: str
    name: str
    model: Union[LinearModel, NonlinearModel]
    network: FeedforwardNetwork
    initial_set: ConstrainedZonotope
    horizon: int
    unsafe_sets: List[UnsafeSet] = field(default_factory=list)
    method: str = "exact"
    seed: int = 0
    budgets: Budgets = field(default_factory=Budgets)
    range_method: str = "lp"

    @property
    def dim(self):
        return self.initial_set.dim


def _check_dimensions(s: Scenario):
    n = s.model.n
    if s.initial_set.dim != n:
        raise ScenarioError(s.path, f"initial set has dimension {s.initial_set.dim}, model state has {n}")
    if s.network.input_dim != n:
        raise ScenarioError(s.path, f"network takes {s.network.input_dim} inputs, model state has {n}")
    if s.network.output_dim != s.model.m:
        raise ScenarioError(
            s.path, f"network gives {s.network.output_dim} outputs, model takes {s.model.m} inputs"
        )
    for u in s.unsafe_sets:
        if u.region.dim != n:
            raise ScenarioError(s.path, f"unsafe set {u.label!r} has dimension {u.region.dim}, expected {n}")


def _confined(net_path, base_dir, path):
    root = Path(base_dir).resolve()
    resolved = Path(net_path).resolve()
    try:
        resolved.relative_to(root)
    except ValueError:
        raise ScenarioError(path, f"network file {str(net_path)!r} is outside {str(root)!r}")
    return resolved


def scenario_from_dict(data, path="<scenario>", base_dir=None, confine=False) -> Scenario:
    """Validate ``data`` and build a runnable Scenario; network paths resolve against ``base_dir``.

    With ``confine`` set, a network path must resolve to a file inside ``base_dir``.
    """
    try:
        spec = ScenarioModel.parse_obj(data)
    except ValidationError as e:
        raise ScenarioError(path, f"invalid scenario: {e}")
    try:
        if isinstance(spec.network, str):
            net_path = Path(spec.network)
            if not net_path.is_absolute() and base_dir is not None:
                net_path = Path(base_dir) / net_path
            if confine:
                net_path = _confined(net_path, base_dir, path)
            if not net_path.exists():
                raise ScenarioError(path, f"network file {str(net_path)!r} does not exist")
            network = load_network(net_path)
        else:
            network = FeedforwardNetwork.from_dict(spec.network.dict())
        scenario = Scenario(
            path=str(path),
            name=spec.name,
            model=spec.model.to_model(),
            network=network,
            initial_set=spec.initial_set.to_set(),
            horizon=spec.horizon,
            unsafe_sets=[UnsafeSet(u.region.to_set(), u.label) for u in spec.unsafe_sets],
            method=spec.method,
            seed=spec.seed,
            budgets=spec.budgets,
            range_method=spec.range_method,
        )
    except ScenarioError:
        raise
    except CzreachError as e:
        raise ScenarioError(path, str(e))
    _check_dimensions(scenario)
    return scenario


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(str(path), f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    except OSError as e:
        raise ScenarioError(str(path), f"cannot read file ({e.strerror})")


def load_scenario(path) -> Scenario:
    path = Path(path)
    return scenario_from_dict(read_json(path), path=str(path), base_dir=path.parent)


def write_atomic(path, payload):
    """Write text or bytes to ``path`` via a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(payload, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, data):
    return write_atomic(path, json.dumps(data, indent=2) + "\n")


def save_result(path, result: ReachResult, include_timings=True):
    return write_json(path, result.to_dict(include_timings))


def load_result(path) -> ReachResult:
    data = read_json(path)
    try:
        return ReachResult.from_dict(data)
    except CzreachError as e:
        raise ScenarioError(str(path), str(e))


def compute_reach(scenario: Scenario, method: Optional[str] = None, max_members: Optional[int] = None) -> ReachResult:
    """Run the reachability method named by the scenario (or ``method``)."""
    method = method or scenario.method
    if method not in METHODS:
        raise ScenarioError(scenario.path, f"unknown method {method!r}")
    if isinstance(scenario.model, LinearModel) != (method in ("exact", "over")):
        raise ScenarioError(scenario.path, f"method {method!r} does not apply to this model")
    max_members = max_members or scenario.budgets.max_members or config.MAX_MEMBERS
    budget = scenario.budgets.reduce_budget()
    common = dict(range_method=scenario.range_method, reduce_budget=budget)
    X0, T, net = scenario.initial_set, scenario.horizon, scenario.network
    if method == "exact":
        return reach_exact(X0, scenario.model, net, T, max_members=max_members, **common)
    if method == "over":
        return reach_over(X0, scenario.model, net, T, **common)
    return reach_nonlinear(
        X0, scenario.model, net, T,
        approx_controller=method == "nonlinear-over-controller",
        max_members=max_members, **common,
    )
