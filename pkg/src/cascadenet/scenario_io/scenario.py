"""Scenario files: parsing, validation and serialization.

A scenario is a YAML document. Arrays are given either as literal lists or
with one of the shorthand constructors

    constant(rows, cols, value)   constant(len, value)
    identity(n)
    random_uniform(lo, hi, seed)  # shape taken from the field

``random_uniform`` for C leaves the diagonal at zero. Literal numbers are
normalized to 12 significant digits, which makes parse -> serialize -> parse
an identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..dynamics import (
    DEFAULT_CONFIRM_WINDOW,
    DEFAULT_CONV_TOL,
    PriceOverride,
    PriceSignal,
)
from ..errors import ParseError, ValidationFailure
from ..model import FinancialNetwork, network_violations

SCHEMA_VERSION = 1
_NETWORK_FIELDS = ("C", "D", "p", "beta", "v_threshold")


def fmt_num(x: float) -> str:
    """12 significant digits, integers without a trailing '.0'."""
    s = f"{float(x):.12g}"
    return "0" if s == "-0" else s


def _norm(x: float) -> float:
    return float(fmt_num(x))


# -- array specs -----------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    values: tuple  # floats, or tuples of floats for matrices


@dataclass(frozen=True)
class Constant:
    shape: tuple[int, ...]
    value: float


@dataclass(frozen=True)
class Identity:
    n: int


@dataclass(frozen=True)
class RandomUniform:
    lo: float
    hi: float
    seed: int


ArraySpec = Literal | Constant | Identity | RandomUniform

_CALL = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$")


def _spec_to_text(spec: ArraySpec):
    if isinstance(spec, Constant):
        return f"constant({', '.join(str(d) for d in spec.shape)}, {fmt_num(spec.value)})"
    if isinstance(spec, Identity):
        return f"identity({spec.n})"
    if isinstance(spec, RandomUniform):
        return f"random_uniform({fmt_num(spec.lo)}, {fmt_num(spec.hi)}, {spec.seed})"
    return spec.values


def resolve(spec: ArraySpec, shape: tuple[int, ...], zero_diagonal: bool = False) -> np.ndarray:
    """Materialize a spec at the given shape."""
    if isinstance(spec, Literal):
        arr = np.array(spec.values, dtype=float)
    elif isinstance(spec, Constant):
        arr = np.full(spec.shape, spec.value, dtype=float)
    elif isinstance(spec, Identity):
        arr = np.eye(spec.n)
    else:
        rng = np.random.default_rng(spec.seed)
        arr = rng.uniform(spec.lo, spec.hi, size=shape)
        if zero_diagonal and arr.ndim == 2:
            np.fill_diagonal(arr, 0.0)
    return arr


# -- scenario --------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    n: int
    m: int
    network_spec: dict[str, ArraySpec]
    initial_state: ArraySpec
    horizon: int
    overrides: tuple[tuple[int, int, ArraySpec], ...] = ()
    conv_tol: float = DEFAULT_CONV_TOL
    confirm_window: int = DEFAULT_CONFIRM_WINDOW
    labels: tuple[str, ...] | None = None
    description: str = ""
    schema_version: int = SCHEMA_VERSION
    network: FinancialNetwork = field(default=None, compare=False, repr=False)
    price_signal: PriceSignal = field(default=None, compare=False, repr=False)
    V0: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        shapes = self._shapes()
        arrays = {
            k: resolve(self.network_spec[k], shapes[k], zero_diagonal=(k == "C")) for k in _NETWORK_FIELDS
        }
        problems = [f"{k}: expected shape {shapes[k]}, got {arrays[k].shape}" for k in _NETWORK_FIELDS
                    if arrays[k].shape != shapes[k]]
        V0 = resolve(self.initial_state, (self.n,))
        if V0.shape != (self.n,):
            problems.append(f"initial_state: expected length {self.n}, got shape {V0.shape}")
        over = []
        for i, (start, end, spec) in enumerate(self.overrides):
            prices = resolve(spec, (self.m,))
            if prices.shape != (self.m,):
                problems.append(f"price_signal.overrides[{i}].prices: expected length {self.m}")
            over.append(PriceOverride(start, end, tuple(prices.ravel().tolist())))
        if self.horizon < 1:
            problems.append("horizon: must be >= 1")
        if not self.conv_tol > 0:
            problems.append("tolerances.conv_tol: must be > 0")
        if self.confirm_window < 1:
            problems.append("tolerances.confirm_window: must be >= 1")
        if problems:
            raise ValidationFailure(problems)

        net = FinancialNetwork(labels=self.labels, **arrays)
        problems = network_violations(net)
        if problems:
            raise ValidationFailure(problems)
        object.__setattr__(self, "network", net)
        object.__setattr__(self, "price_signal", PriceSignal(tuple(arrays["p"].tolist()), tuple(over)))
        V0.setflags(write=False)
        object.__setattr__(self, "V0", V0)

    def _shapes(self) -> dict[str, tuple[int, ...]]:
        n, m = self.n, self.m
        return {"C": (n, n), "D": (n, m), "p": (m,), "beta": (n,), "v_threshold": (n,)}

    def seeds(self) -> list[int]:
        specs = list(self.network_spec.values()) + [self.initial_state] + [s for _, _, s in self.overrides]
        return [s.seed for s in specs if isinstance(s, RandomUniform)]

    def with_seed(self, seed: int) -> "ScenarioFile":
        """Copy with every random_uniform seed replaced by ``seed``."""

        def swap(s):
            return replace(s, seed=seed) if isinstance(s, RandomUniform) else s

        return replace(
            self,
            network_spec={k: swap(v) for k, v in self.network_spec.items()},
            initial_state=swap(self.initial_state),
            overrides=tuple((a, b, swap(s)) for a, b, s in self.overrides),
            network=None,
            price_signal=None,
            V0=None,
        )


# -- parsing ---------------------------------------------------------------


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[path + (k.value,)] = k.start_mark.line + 1
            _line_map(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, lines: dict[tuple, int]):
        self.lines = lines

    def fail(self, msg: str, path: tuple):
        line = None
        p = path
        while p not in self.lines and p:
            p = p[:-1]
        line = self.lines.get(p)
        raise ParseError(msg, line=line, field=".".join(str(x) for x in path) or None)

    def number(self, v, path) -> float:
        if isinstance(v, bool):
            self.fail("expected a number, got a boolean", path)
        try:
            x = float(v)
        except (TypeError, ValueError):
            self.fail(f"expected a number, got {v!r}", path)
        if not np.isfinite(x):
            self.fail("number must be finite", path)
        return _norm(x)

    def integer(self, v, path) -> int:
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            self.fail(f"expected an integer, got {v!r}", path)
        try:
            return int(v)
        except ValueError:
            self.fail(f"expected an integer, got {v!r}", path)

    def array(self, v, path, shape: tuple[int, ...]) -> ArraySpec:
        if isinstance(v, str):
            return self._call(v, path, shape)
        if not isinstance(v, list):
            self.fail(f"expected a list or a constructor, got {type(v).__name__}", path)
        if len(shape) == 1:
            if len(v) != shape[0]:
                self.fail(f"expected {shape[0]} entries, got {len(v)}", path)
            return Literal(tuple(self.number(x, path + (i,)) for i, x in enumerate(v)))
        rows, cols = shape
        if len(v) != rows:
            self.fail(f"expected {rows} rows, got {len(v)}", path)
        out = []
        for i, row in enumerate(v):
            if not isinstance(row, list):
                self.fail(f"row {i + 1} is not a list", path + (i,))
            if len(row) != cols:
                self.fail(f"row {i + 1} has {len(row)} entries, expected {cols}", path + (i,))
            out.append(tuple(self.number(x, path + (i, j)) for j, x in enumerate(row)))
        return Literal(tuple(out))

    def _call(self, text: str, path, shape) -> ArraySpec:
        m = _CALL.match(text)
        if not m:
            self.fail(f"cannot parse constructor {text!r}", path)
        fn, argtext = m.group(1), m.group(2)
        args = [a.strip() for a in argtext.split(",")] if argtext.strip() else []
        if fn == "constant":
            if len(args) != len(shape) + 1:
                self.fail(f"constant() for this field takes {len(shape) + 1} arguments", path)
            dims = tuple(self.integer(a, path) for a in args[:-1])
            if dims != shape:
                self.fail(f"constant{dims} does not match expected shape {shape}", path)
            return Constant(dims, self.number(args[-1], path))
        if fn == "identity":
            if len(args) != 1:
                self.fail("identity() takes 1 argument", path)
            k = self.integer(args[0], path)
            if len(shape) != 2 or (k, k) != shape:
                self.fail(f"identity({k}) does not match expected shape {shape}", path)
            return Identity(k)
        if fn == "random_uniform":
            if len(args) != 3:
                self.fail("random_uniform() takes (lo, hi, seed)", path)
            lo, hi = self.number(args[0], path), self.number(args[1], path)
            if hi < lo:
                self.fail("random_uniform(): hi < lo", path)
            return RandomUniform(lo, hi, self.integer(args[2], path))
        self.fail(f"unknown constructor {fn!r}", path)


def parse_scenario(document: str) -> ScenarioFile:
    try:
        loader = yaml.SafeLoader(document)
        try:
            node = loader.get_single_node()
            data = loader.construct_document(node) if node is not None else None
        finally:
            loader.dispose()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(exc).splitlines()[0], line=mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ParseError("scenario must be a mapping")
    rd = _Reader(_line_map(node))

    def need(mapping, key, path):
        if key not in mapping:
            rd.fail("missing required field", path + (key,))
        return mapping[key]

    version = rd.integer(need(data, "schema_version", ()), ("schema_version",))
    if version != SCHEMA_VERSION:
        rd.fail(f"unsupported schema_version {version}", ("schema_version",))
    known = {"schema_version", "name", "description", "labels", "network", "price_signal",
             "initial_state", "horizon", "tolerances"}
    for k in data:
        if k not in known:
            rd.fail("unknown field", (k,))

    net = need(data, "network", ())
    if not isinstance(net, dict):
        rd.fail("expected a mapping", ("network",))
    n = rd.integer(need(net, "n", ("network",)), ("network", "n"))
    m = rd.integer(need(net, "m", ("network",)), ("network", "m"))
    if n < 1 or m < 1:
        rd.fail("n and m must be >= 1", ("network",))
    shapes = {"C": (n, n), "D": (n, m), "p": (m,), "beta": (n,), "v_threshold": (n,)}
    for k in net:
        if k not in shapes and k not in ("n", "m"):
            rd.fail("unknown field", ("network", k))
    spec = {k: rd.array(need(net, k, ("network",)), ("network", k), shapes[k]) for k in _NETWORK_FIELDS}

    labels = data.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != n:
            rd.fail(f"expected a list of {n} labels", ("labels",))
        labels = tuple(str(x) for x in labels)

    overrides = []
    ps = data.get("price_signal") or {}
    if not isinstance(ps, dict):
        rd.fail("expected a mapping", ("price_signal",))
    for i, o in enumerate(ps.get("overrides") or []):
        path = ("price_signal", "overrides", i)
        if not isinstance(o, dict):
            rd.fail("expected a mapping with start, end, prices", path)
        start = rd.integer(need(o, "start", path), path + ("start",))
        end = rd.integer(need(o, "end", path), path + ("end",))
        overrides.append((start, end, rd.array(need(o, "prices", path), path + ("prices",), (m,))))

    tol = data.get("tolerances") or {}
    conv_tol = rd.number(tol.get("conv_tol", DEFAULT_CONV_TOL), ("tolerances", "conv_tol"))
    window = rd.integer(tol.get("confirm_window", DEFAULT_CONFIRM_WINDOW), ("tolerances", "confirm_window"))

    return ScenarioFile(
        name=str(data.get("name", "scenario")),
        n=n,
        m=m,
        network_spec=spec,
        initial_state=rd.array(need(data, "initial_state", ()), ("initial_state",), (n,)),
        horizon=rd.integer(need(data, "horizon", ()), ("horizon",)),
        overrides=tuple(overrides),
        conv_tol=conv_tol,
        confirm_window=window,
        labels=labels,
        description=str(data.get("description", "")),
        schema_version=version,
    )


# -- serialization ---------------------------------------------------------


def _emit_value(key: str, value, indent: str) -> list[str]:
    text = _spec_to_text(value)
    if isinstance(text, str):
        return [f"{indent}{key}: {text}"]
    if text and isinstance(text[0], tuple):
        lines = [f"{indent}{key}:"]
        for row in text:
            lines.append(f"{indent}  - [{', '.join(fmt_num(x) for x in row)}]")
        return lines
    return [f"{indent}{key}: [{', '.join(fmt_num(x) for x in text)}]"]


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def serialize_scenario(sc: ScenarioFile) -> str:
    lines = [f"schema_version: {sc.schema_version}", f"name: {_quote(sc.name)}"]
    if sc.description:
        lines.append(f"description: {_quote(sc.description)}")
    if sc.labels is not None:
        lines.append(f"labels: [{', '.join(_quote(s) for s in sc.labels)}]")
    lines += ["network:", f"  n: {sc.n}", f"  m: {sc.m}"]
    for k in _NETWORK_FIELDS:
        lines += _emit_value(k, sc.network_spec[k], "  ")
    if sc.overrides:
        lines += ["price_signal:", "  overrides:"]
        for start, end, spec in sc.overrides:
            lines += [f"    - start: {start}", f"      end: {end}"]
            lines += _emit_value("prices", spec, "      ")
    lines += _emit_value("initial_state", sc.initial_state, "")
    lines.append(f"horizon: {sc.horizon}")
    lines += ["tolerances:", f"  conv_tol: {fmt_num(sc.conv_tol)}", f"  confirm_window: {sc.confirm_window}"]
    return "\n".join(lines) + "\n"


# -- files and bundled scenarios ------------------------------------------


def load_scenario(path: str | Path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text)


def bundled_names() -> list[str]:
    root = resources.files(__package__) / "bundled"
    return sorted(p.name[: -len(".scenario")] for p in root.iterdir() if p.name.endswith(".scenario"))


def bundled_text(name: str) -> str:
    if not name.endswith(".scenario"):
        name += ".scenario"
    res = resources.files(__package__) / "bundled" / name
    if not res.is_file():
        raise ParseError(f"no bundled scenario named {name!r}")
    return res.read_text(encoding="utf-8")


def load_bundled(name: str) -> ScenarioFile:
    return parse_scenario(bundled_text(name))


def resolve_scenario_path(ref: str) -> ScenarioFile:
    """Load from a path, falling back to a bundled scenario of that name."""
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    return load_bundled(p.name)
