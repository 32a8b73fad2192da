"""Scenario files: a small JSON schema describing one solvable problem.

A scenario pins down the domain, grid resolution, speed field, obstacles,
sources, and solver settings.  Parsing is strict: unknown keys are an
error (reported with their full path), and every numeric leaf is
normalized to float so that parse -> emit -> parse is a fixpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .geometry import Grid2D, RectObstacle, ObstacleWorld
from .speed import ConstantSpeed, LinearSpeed, SinusoidalSpeed, speed_eval, FREE_SIDE
from .factors import Cone, MinOfCones, SumOfCones
from .solver import SolverConfig, FanEntry, METHODS, CORNER_STYLES, BALL_MODES
from .analysis import StudyCase

DEFAULT_FAN_RADIUS = 0.18
DEFAULT_BALL_RADIUS = 0.1

SPEED_KINDS = ("constant", "linear", "sinusoidal")
OUTPUT_KINDS = ("field_csv", "heatmap_pgm", "trajectory_csv", "plots")


class ScenarioError(ValueError):
    """Schema violation; the message names the offending key path."""


def _fail(path, msg):
    raise ScenarioError(f"{path}: {msg}")


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        _fail(path, f"expected an object, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            _fail(f"{path}.{k}" if path else k, "unknown key")


def _num(d, key, path, default=None, positive=False):
    if key not in d:
        if default is None:
            _fail(f"{path}.{key}", "missing required key")
        return float(default)
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{path}.{key}", f"expected a number, got {v!r}")
    v = float(v)
    if positive and not v > 0.0:
        _fail(f"{path}.{key}", f"must be positive, got {v}")
    return v


def _pair(d, key, path, default=None):
    if key not in d:
        if default is None:
            _fail(f"{path}.{key}", "missing required key")
        return tuple(float(c) for c in default)
    v = d[key]
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
        _fail(f"{path}.{key}", f"expected [x, y], got {v!r}")
    return (float(v[0]), float(v[1]))


def _str(d, key, path, default, choices):
    v = d.get(key, default)
    if v not in choices:
        _fail(f"{path}.{key}", f"expected one of {choices}, got {v!r}")
    return v


def _parse_grid(d, domain_lo, domain_hi):
    _check_keys(d, ("h", "n"), "grid")
    if ("h" in d) == ("n" in d):
        _fail("grid", "give exactly one of 'h' or 'n'")
    if "h" in d:
        return {"h": _num(d, "h", "grid", positive=True)}
    n = d["n"]
    if isinstance(n, int) and not isinstance(n, bool):
        n = [n, n]
    if (not isinstance(n, (list, tuple)) or len(n) != 2
            or any(isinstance(k, bool) or not isinstance(k, int) for k in n)):
        _fail("grid.n", f"expected an int or [nx, ny], got {d['n']!r}")
    if n[0] < 2 or n[1] < 2:
        _fail("grid.n", "need at least 2 nodes per axis")
    hx = (domain_hi[0] - domain_lo[0]) / (n[0] - 1)
    hy = (domain_hi[1] - domain_lo[1]) / (n[1] - 1)
    if abs(hx - hy) > 1e-12 * hx:
        _fail("grid.n", f"node counts give anisotropic spacing ({hx} vs {hy})")
    return {"n": [int(n[0]), int(n[1])]}


def _parse_speed(d, domain_lo, domain_hi):
    _check_keys(d, ("kind", "value", "s0", "v", "x0", "base", "amplitude"), "speed")
    kind = _str(d, "kind", "speed", None, SPEED_KINDS)
    if kind == "constant":
        for k in ("s0", "v", "x0", "base", "amplitude"):
            if k in d:
                _fail(f"speed.{k}", "not a constant-speed key")
        return {"kind": kind, "value": _num(d, "value", "speed", 1.0, positive=True)}
    if kind == "linear":
        for k in ("value", "base", "amplitude"):
            if k in d:
                _fail(f"speed.{k}", "not a linear-speed key")
        out = {"kind": kind, "s0": _num(d, "s0", "speed", positive=True),
               "v": list(_pair(d, "v", "speed")),
               "x0": list(_pair(d, "x0", "speed", (0.0, 0.0)))}
        # linear F attains its minimum at a domain corner
        lo = min(1.0 / out["s0"]
                 + out["v"][0] * (cx - out["x0"][0])
                 + out["v"][1] * (cy - out["x0"][1])
                 for cx in (domain_lo[0], domain_hi[0])
                 for cy in (domain_lo[1], domain_hi[1]))
        if not lo > 0.0:
            _fail("speed.v", f"speed reaches {lo} inside the domain")
        return out
    for k in ("value", "s0", "v", "x0"):
        if k in d:
            _fail(f"speed.{k}", "not a sinusoidal-speed key")
    out = {"kind": kind, "base": _num(d, "base", "speed", 1.0),
           "amplitude": _num(d, "amplitude", "speed", 0.3)}
    if not out["base"] - abs(out["amplitude"]) > 0.0:
        _fail("speed.amplitude", "speed range includes zero")
    return out


def _parse_obstacle(d, idx):
    path = f"obstacles[{idx}]"
    _check_keys(d, ("lo", "hi", "f_ob"), path)
    out = {"lo": list(_pair(d, "lo", path)), "hi": list(_pair(d, "hi", path))}
    if not (out["lo"][0] < out["hi"][0] and out["lo"][1] < out["hi"][1]):
        _fail(path, f"degenerate rectangle lo={out['lo']} hi={out['hi']}")
    if d.get("f_ob") is not None:
        out["f_ob"] = _num(d, "f_ob", path, positive=True)
    return out


def _parse_factor(d, path):
    _check_keys(d, ("kind", "center", "f", "cones"), path)
    kind = _str(d, "kind", path, None, ("cone", "min_cones", "sum_cones"))
    if kind == "cone":
        if "cones" in d:
            _fail(f"{path}.cones", "a single cone has no cone list")
        out = {"kind": kind, "center": list(_pair(d, "center", path))}
        if "f" in d:
            out["f"] = _num(d, "f", path, positive=True)
        return out
    if "center" in d or "f" in d:
        _fail(path, "cone lists take per-cone centers, not a top-level one")
    cones = d.get("cones")
    if not isinstance(cones, list) or not cones:
        _fail(f"{path}.cones", "expected a non-empty list of cones")
    parsed = []
    for k, c in enumerate(cones):
        sub = _parse_factor(c, f"{path}.cones[{k}]")
        if sub["kind"] != "cone":
            _fail(f"{path}.cones[{k}].kind", "cone lists contain plain cones")
        parsed.append(sub)
    return {"kind": kind, "cones": parsed}


def _parse_solver(d):
    _check_keys(d, ("method", "fan_radius", "corner_style", "ball",
                    "ball_radius", "factor", "fans", "switch_corner"), "solver")
    method = _str(d, "method", "solver", "just_in_time", METHODS)
    out = {
        "method": method,
        "fan_radius": _num(d, "fan_radius", "solver", DEFAULT_FAN_RADIUS,
                           positive=True),
        "corner_style": _str(d, "corner_style", "solver", "auto",
                             tuple(CORNER_STYLES)),
        "ball": _str(d, "ball", "solver", "none", BALL_MODES),
        "ball_radius": _num(d, "ball_radius", "solver", DEFAULT_BALL_RADIUS,
                            positive=True),
    }
    if method == "global_static":
        if "factor" not in d:
            _fail("solver.factor", "global_static needs a factor")
        out["factor"] = _parse_factor(d["factor"], "solver.factor")
    elif "factor" in d:
        _fail("solver.factor", f"{method} takes no factor")
    if method == "localized_static":
        fans = d.get("fans")
        if not isinstance(fans, list) or not fans:
            _fail("solver.fans", "localized_static needs a non-empty fan list")
        out["fans"] = []
        for k, f in enumerate(fans):
            path = f"solver.fans[{k}]"
            _check_keys(f, ("center", "radius", "factor"), path)
            fan = {"center": list(_pair(f, "center", path)),
                   "radius": _num(f, "radius", path, DEFAULT_FAN_RADIUS,
                                  positive=True)}
            if "factor" in f:
                fan["factor"] = _parse_factor(f["factor"], f"{path}.factor")
            out["fans"].append(fan)
    elif "fans" in d:
        _fail("solver.fans", f"{method} takes no fan list")
    if method == "switching_cones":
        out["switch_corner"] = list(_pair(d, "switch_corner", "solver"))
    elif "switch_corner" in d:
        _fail("solver.switch_corner", f"{method} takes no switch corner")
    return out


@dataclass(frozen=True)
class Scenario:
    """Validated, normalized problem description."""

    name: str
    domain_lo: tuple[float, float]
    domain_hi: tuple[float, float]
    grid: dict
    speed: dict
    obstacles: tuple
    sources: tuple
    solver: dict
    outputs: tuple

    def base_h(self) -> float:
        if "h" in self.grid:
            return self.grid["h"]
        return (self.domain_hi[0] - self.domain_lo[0]) / (self.grid["n"][0] - 1)

    def make_speed(self):
        s = self.speed
        if s["kind"] == "constant":
            return ConstantSpeed(s["value"])
        if s["kind"] == "linear":
            return LinearSpeed(s["s0"], tuple(s["v"]), tuple(s["x0"]))
        return SinusoidalSpeed(s["base"], s["amplitude"])

    def build(self, h: float | None = None) -> StudyCase:
        """Instantiate grid, world, speed, and sources at resolution h."""
        if h is None:
            h = self.base_h()
        ex = self.domain_hi[0] - self.domain_lo[0]
        ey = self.domain_hi[1] - self.domain_lo[1]
        nx = round(ex / h) + 1
        ny = round(ey / h) + 1
        if abs((nx - 1) * h - ex) > 1e-9 * ex or abs((ny - 1) * h - ey) > 1e-9 * ey:
            raise ScenarioError(f"grid.h: spacing {h} does not tile the domain")
        grid = Grid2D(nx, ny, h, origin=self.domain_lo)
        obstacles = [RectObstacle(tuple(ob["lo"]), tuple(ob["hi"]),
                                  ob.get("f_ob")) for ob in self.obstacles]
        world = ObstacleWorld(grid, obstacles)
        return StudyCase(grid, world, self.make_speed(), self.sources)

    def _factor_object(self, desc, speed):
        if desc["kind"] == "cone":
            center = tuple(desc["center"])
            f = desc.get("f")
            if f is None:
                f = speed_eval(speed, center, FREE_SIDE)
            return Cone(center, f)
        cones = [self._factor_object(c, speed) for c in desc["cones"]]
        cls = MinOfCones if desc["kind"] == "min_cones" else SumOfCones
        return cls(cones)

    def config(self, case: StudyCase) -> SolverConfig:
        """Solver configuration for one built case (factor speeds may
        depend on the speed field, hence the case argument)."""
        s = self.solver
        common = {"ball": s["ball"], "ball_radius": s["ball_radius"]}
        if s["method"] == "original":
            return SolverConfig.original(**common)
        if s["method"] == "global_static":
            factor = self._factor_object(s["factor"], case.speed)
            return SolverConfig.global_static(factor, **common)
        if s["method"] == "localized_static":
            fans = []
            for f in s["fans"]:
                center = tuple(f["center"])
                desc = f.get("factor", {"kind": "cone", "center": list(center)})
                factor = self._factor_object(desc, case.speed)
                fans.append(FanEntry(factor.center, factor, f["radius"],
                                     origin="config"))
            return SolverConfig.localized_static(fans, **common)
        if s["method"] == "switching_cones":
            return SolverConfig.switching_cones(tuple(s["switch_corner"]),
                                                **common)
        return SolverConfig.just_in_time(s["fan_radius"], s["corner_style"],
                                         **common)


def parse_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"not valid JSON: {e}") from e
    _check_keys(raw, ("name", "domain", "grid", "speed", "obstacles",
                      "sources", "solver", "outputs"), "")
    name = raw.get("name", "")
    if not isinstance(name, str):
        _fail("name", f"expected a string, got {name!r}")

    dom = raw.get("domain")
    if dom is None:
        _fail("domain", "missing required key")
    _check_keys(dom, ("lo", "hi"), "domain")
    lo = _pair(dom, "lo", "domain")
    hi = _pair(dom, "hi", "domain")
    if not (lo[0] < hi[0] and lo[1] < hi[1]):
        _fail("domain", f"empty domain lo={lo} hi={hi}")

    if "grid" not in raw:
        _fail("grid", "missing required key")
    grid = _parse_grid(raw["grid"], lo, hi)
    if "speed" not in raw:
        _fail("speed", "missing required key")
    speed = _parse_speed(raw["speed"], lo, hi)

    obstacles = raw.get("obstacles", [])
    if not isinstance(obstacles, list):
        _fail("obstacles", "expected a list")
    obstacles = tuple(_parse_obstacle(ob, k) for k, ob in enumerate(obstacles))

    srcs = raw.get("sources")
    if not isinstance(srcs, list) or not srcs:
        _fail("sources", "expected a non-empty list of points")
    sources = tuple(_pair({"p": s}, "p", f"sources[{k}]")
                    for k, s in enumerate(srcs))

    solver = _parse_solver(raw.get("solver", {}))

    outputs = raw.get("outputs", ["field_csv", "heatmap_pgm", "plots"])
    if not isinstance(outputs, list):
        _fail("outputs", "expected a list")
    for k, o in enumerate(outputs):
        if o not in OUTPUT_KINDS:
            _fail(f"outputs[{k}]", f"expected one of {OUTPUT_KINDS}, got {o!r}")

    return Scenario(name, lo, hi, grid, speed, obstacles, sources, solver,
                    tuple(outputs))


def emit_scenario(scenario: Scenario) -> str:
    """Canonical JSON form; parse(emit(parse(t))) == parse(t)."""
    doc = {
        "name": scenario.name,
        "domain": {"lo": list(scenario.domain_lo),
                   "hi": list(scenario.domain_hi)},
        "grid": scenario.grid,
        "speed": scenario.speed,
        "obstacles": [dict(ob) for ob in scenario.obstacles],
        "sources": [list(s) for s in scenario.sources],
        "solver": scenario.solver,
        "outputs": list(scenario.outputs),
    }
    return json.dumps(doc, indent=2) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def bundled_names() -> list[str]:
    root = resources.files("eikmarch") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> Scenario:
    root = resources.files("eikmarch") / "scenarios"
    path = root / f"{name}.json"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(
            f"no bundled scenario {name!r}; available: {bundled_names()}")
    return parse_scenario(text)
