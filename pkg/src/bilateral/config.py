"""YAML documents for robot models, scenarios and controller settings.

Every loader reports problems as ``UsageError("file:line: field: message")``.
A model document may omit anything it does not change; missing pieces come
from the CRANE-X7 model, so a bare ``phi:`` fragment is a valid model file.
"""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import dynamics as dyn
from .controller import ControllerConfig
from .errors import UsageError
from .observer import ObserverConfig
from .robots import crane_x7
from .sim import OperatorProfile, Scenario, Wall


class _Doc:
    """Parsed mapping that remembers the line of every key."""

    def __init__(self, path: str, node: yaml.MappingNode, prefix: str = ""):
        self.path = path
        self.prefix = prefix
        self.data = {}
        self.lines = {}
        for k, v in node.value:
            key = k.value
            self.lines[key] = k.start_mark.line + 1
            self.data[key] = v
        self.line = node.start_mark.line + 1

    def error(self, key: str | None, msg: str) -> UsageError:
        line = self.lines.get(key, self.line)
        where = f"{self.prefix}{key}: " if key else (f"{self.prefix.rstrip('.')}: " if self.prefix else "")
        return UsageError(f"{self.path}:{line}: {where}{msg}")

    def value(self, key: str):
        return yaml.safe_load(yaml.serialize(self.data[key]))

    def sub(self, key: str) -> "_Doc":
        node = self.data[key]
        if not isinstance(node, yaml.MappingNode):
            raise self.error(key, "expected a mapping")
        return _Doc(self.path, node, f"{self.prefix}{key}.")

    def check_keys(self, allowed) -> None:
        for key in self.data:
            if key not in allowed:
                raise self.error(key, f"unknown field (allowed: {', '.join(sorted(allowed))})")


def _parse(path) -> _Doc:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}") from None
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = f":{mark.line + 1}" if mark else ""
        raise UsageError(f"{path}{line}: invalid YAML: {getattr(e, 'problem', e)}") from None
    if node is None:
        node = yaml.MappingNode("tag:yaml.org,2002:map", [])
    if not isinstance(node, yaml.MappingNode):
        raise UsageError(f"{path}:1: top level must be a mapping")
    return _Doc(path, node)


def _array(doc: _Doc, key: str, shape=None):
    try:
        a = np.asarray(doc.value(key), dtype=float)
    except (TypeError, ValueError):
        raise doc.error(key, "expected numbers") from None
    if shape is not None and a.shape != shape:
        raise doc.error(key, f"expected shape {shape}, got {a.shape}")
    if np.isnan(a).any():
        raise doc.error(key, "values must not be NaN")
    return a


def _fill(doc: _Doc, cls, base, skip=()):
    """Overwrite the dataclass fields of ``base`` that appear in ``doc``."""
    names = {f.name for f in fields(cls)} - set(skip)
    updates = {}
    for key in doc.data:
        if key in skip:
            continue
        if key not in names:
            raise doc.error(key, f"unknown field (allowed: {', '.join(sorted(names | set(skip)))})")
        v = doc.value(key)
        if isinstance(v, list):
            v = tuple(tuple(x) if isinstance(x, list) else x for x in v)
        updates[key] = v
    try:
        return replace(base, **updates)
    except (UsageError, TypeError, ValueError) as e:
        msg = str(e) if isinstance(e, UsageError) else f"bad value: {e}"
        raise doc.error(_culprit(base, updates), msg) from None


def _culprit(base, updates):
    """The first key that fails on its own, so the error can name its line."""
    for key, v in updates.items():
        try:
            replace(base, **{key: v})
        except (UsageError, TypeError, ValueError):
            return key
    return None


# --- robot model ---------------------------------------------------------

MODEL_KEYS = ("name", "dh", "gravity", "torque_limit", "joint_range", "phi")


def load_model(path, base: dyn.ChainModel | None = None) -> dyn.ChainModel:
    doc = _parse(path)
    doc.check_keys(MODEL_KEYS)
    base = base or crane_x7()
    links = base.links
    if "dh" in doc.data:
        rows = _array(doc, "dh")
        if rows.ndim != 2 or rows.shape[1] not in (2, 3, 4):
            raise doc.error("dh", "each row is [alpha, d, theta0, r]")
        links = tuple(dyn.DHRow(*r) for r in rows)
    n = len(links)
    kw = {"name": base.name, "gravity": base.gravity}
    if len(links) == base.n_joints:
        kw["torque_limit"] = base.torque_limit
        kw["joint_range"] = base.joint_range
    if "name" in doc.data:
        kw["name"] = str(doc.value("name"))
    if "gravity" in doc.data:
        kw["gravity"] = _array(doc, "gravity", (3,))
    if "torque_limit" in doc.data:
        kw["torque_limit"] = _array(doc, "torque_limit", (n,))
    if "joint_range" in doc.data:
        kw["joint_range"] = _array(doc, "joint_range", (n, 2))
    phi = base.phi
    if "phi" in doc.data:
        raw = doc.value("phi")
        if not isinstance(raw, dict):
            raise doc.error("phi", "expected a mapping of parameter name to value")
        sub = doc.sub("phi")
        for name, v in raw.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise sub.error(name, "expected a number")
            try:
                dyn.parse_param_name(str(name))
            except UsageError as e:
                raise sub.error(name, str(e)) from None
        try:
            phi = dyn.ParamVector.from_mapping({str(k): v for k, v in raw.items()})
        except UsageError as e:
            raise doc.error("phi", str(e)) from None
    try:
        return dyn.ChainModel(links, phi, **kw)
    except UsageError as e:
        raise doc.error(None, str(e)) from None


def model_document(model: dyn.ChainModel) -> dict:
    return {
        "name": model.name,
        "dh": [[l.alpha, l.d, l.theta0, l.r] for l in model.links],
        "gravity": model.gravity.tolist(),
        "torque_limit": model.torque_limit.tolist(),
        "joint_range": model.joint_range.tolist(),
        "phi": model.phi.as_dict(),
    }


def phi_fragment(phi: dyn.ParamVector, header: str | None = None) -> str:
    # PyYAML writes floats with repr, so values round-trip exactly
    text = yaml.safe_dump({"phi": phi.as_dict()}, sort_keys=False)
    return (f"# {header}\n" if header else "") + text


def save_model(model: dyn.ChainModel, path) -> None:
    Path(path).write_text(yaml.safe_dump(model_document(model), sort_keys=False))


# --- scenario ------------------------------------------------------------

SCENARIO_EXTRA = ("operator", "walls", "controller")


def load_scenario(path) -> tuple[Scenario, ControllerConfig]:
    """Scenario plus the base controller settings of the same document."""
    doc = _parse(path)
    scenario = Scenario()
    if "operator" in doc.data:
        op = _fill(doc.sub("operator"), OperatorProfile, OperatorProfile())
        scenario = replace(scenario, operator=op)
    if "walls" in doc.data:
        node = doc.data["walls"]
        if not isinstance(node, yaml.SequenceNode):
            raise doc.error("walls", "expected a list of walls")
        walls = []
        for i, item in enumerate(node.value):
            if not isinstance(item, yaml.MappingNode):
                raise doc.error("walls", f"entry {i} must be a mapping")
            wdoc = _Doc(doc.path, item, f"walls[{i}].")
            for req in ("joint", "position"):
                if req not in wdoc.data:
                    raise wdoc.error(None, f"missing {req}")
            wdoc.check_keys({f.name for f in fields(Wall)})
            try:
                walls.append(Wall(**{k: wdoc.value(k) for k in wdoc.data}))
            except (UsageError, TypeError) as e:
                raise wdoc.error(None, str(e)) from None
        scenario = replace(scenario, walls=tuple(walls))
    scenario = _fill(doc, Scenario, scenario, skip=SCENARIO_EXTRA)
    ctrl = ControllerConfig()
    if "controller" in doc.data:
        cdoc = doc.sub("controller")
        obs_keys = {"omega_c", "zeta"}
        gains = {k for k in ("kp", "kd", "kf")}
        cdoc.check_keys(gains | obs_keys)
        upd = {}
        for k in cdoc.data:
            v = cdoc.value(k)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise cdoc.error(k, "expected a number")
            upd[k] = float(v)
        try:
            obs = ObserverConfig(omega_c=upd.pop("omega_c", ctrl.observer.omega_c),
                                 zeta=upd.pop("zeta", ctrl.observer.zeta), dt=scenario.dt)
            ctrl = replace(ctrl, observer=obs, **upd)
        except UsageError as e:
            raise cdoc.error(None, str(e)) from None
    elif scenario.dt != ctrl.dt:
        ctrl = replace(ctrl, observer=replace(ctrl.observer, dt=scenario.dt))
    return scenario, ctrl


def scenario_document(scenario: Scenario, ctrl: ControllerConfig | None = None) -> dict:
    def plain(x):
        if isinstance(x, (tuple, list)):
            return [plain(v) for v in x]
        if isinstance(x, np.ndarray):
            return x.tolist()
        if isinstance(x, np.generic):
            return x.item()
        return x

    doc = {f.name: plain(getattr(scenario, f.name)) for f in fields(Scenario)
           if f.name not in SCENARIO_EXTRA}
    doc["operator"] = {f.name: plain(getattr(scenario.operator, f.name))
                       for f in fields(OperatorProfile)}
    doc["walls"] = [{f.name: plain(getattr(w, f.name)) for f in fields(Wall)}
                    for w in scenario.walls]
    if ctrl is not None:
        doc["controller"] = {"kp": ctrl.kp, "kd": ctrl.kd, "kf": ctrl.kf,
                             "omega_c": ctrl.observer.omega_c, "zeta": ctrl.observer.zeta}
    return doc


def save_scenario(scenario: Scenario, path, ctrl: ControllerConfig | None = None) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_document(scenario, ctrl), sort_keys=False))
