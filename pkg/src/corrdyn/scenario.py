"""JSON scenario files.

Matrices are nested row-major lists; each entry is a real number or a
``[re, im]`` pair. A scenario names one model::

    {"model": "jaynes_cummings",
     "jaynes_cummings": {"a": 0.6, "p0": 0.4, "delta": 0.1, "g": 0.1},
     "time_grid": {"t_max": 50, "steps": 500}}

See ``docs/scenario_schema.md`` for the full schema.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import operators as ops
from .dynamics import DEFAULT_COND_THRESHOLD, AssignmentContext, TotalModel, bloch_to_state, decompose_total
from .errors import CorrDynError
from .models import JCParams, SwapParams, jc_model, swap_model

MODEL_TAGS = ("custom", "swap", "jaynes_cummings")


class SchemaError(CorrDynError, ValueError):
    """Malformed or inconsistent scenario file."""


def parse_complex(x):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise SchemaError(f"not a scalar or [re, im] pair: {x!r}")


def parse_matrix(rows, name="matrix"):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SchemaError(f"{name} must be a non-empty list of rows")
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise SchemaError(f"{name} must be square")
    try:
        return np.array([[parse_complex(x) for x in r] for r in rows], dtype=complex)
    except SchemaError as exc:
        raise SchemaError(f"{name}: {exc}") from None


def matrix_to_json(A):
    A = np.asarray(A, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = 10.0
    steps: int = 1000

    @property
    def times(self):
        return np.linspace(0.0, self.t_max, self.steps + 1)


@dataclass(frozen=True)
class Scenario:
    model: str
    params: dict
    time_grid: TimeGrid = TimeGrid()
    tolerances: ops.Tolerances = ops.DEFAULT_TOL
    cond_threshold: float = DEFAULT_COND_THRESHOLD
    initial_state: object = "reference"
    outputs: tuple = ("exact", "linear", "master")
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def digest(self):
        """SHA-256 of the canonical JSON form (after command-line overrides)."""
        payload = dict(self.raw)
        payload["time_grid"] = {"t_max": self.time_grid.t_max, "steps": self.time_grid.steps}
        payload["tolerances"] = {"herm": self.tolerances.herm, "psd": self.tolerances.psd,
                                 "trace": self.tolerances.trace, "cond_threshold": self.cond_threshold}
        payload["seed"] = self.seed
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, t_max=None, steps=None, tol_psd=None, cond_threshold=None, seed=None):
        grid = TimeGrid(self.time_grid.t_max if t_max is None else float(t_max),
                        self.time_grid.steps if steps is None else int(steps))
        if grid.steps < 1 or grid.t_max <= 0:
            raise SchemaError("time grid needs t_max > 0 and steps >= 1")
        tol = self.tolerances if tol_psd is None else replace(self.tolerances, psd=float(tol_psd))
        return replace(self, time_grid=grid, tolerances=tol,
                       cond_threshold=self.cond_threshold if cond_threshold is None else float(cond_threshold),
                       seed=self.seed if seed is None else int(seed))

    def build(self):
        """Return ``(TotalModel, reference reduced state or None)``."""
        try:
            if self.model == "swap":
                return swap_model(SwapParams(**self.params), self.tolerances)
            if self.model == "jaynes_cummings":
                return jc_model(JCParams(**self.params), self.tolerances)
            return _build_custom(self.params, self.tolerances)
        except TypeError as exc:
            raise SchemaError(f"bad parameters for model {self.model!r}: {exc}") from None

    def jc_params(self):
        return JCParams(**self.params) if self.model == "jaynes_cummings" else None

    def initial(self, model, reference):
        init = self.initial_state
        if init is None or init == "reference":
            if reference is None:
                raise SchemaError("scenario has no reference state; give initial_state explicitly")
            return reference
        if isinstance(init, dict) and "bloch" in init:
            v = init["bloch"]
            if model.d_s != 2 or not isinstance(v, list) or len(v) != 3:
                raise SchemaError("bloch initial state needs d_S = 2 and three components")
            return bloch_to_state([float(x) for x in v])
        return parse_matrix(init, "initial_state")


def _sized(p, key, n):
    A = parse_matrix(p[key], key)
    if A.shape != (n, n):
        raise SchemaError(f"{key} must be {n}x{n}, got {A.shape[0]}x{A.shape[1]}")
    return A


def _build_custom(p, tol):
    for key in ("d_s", "d_e"):
        if not isinstance(p.get(key), int) or p[key] < 1:
            raise SchemaError(f"custom model needs a positive integer {key}")
    d_s, d_e = p["d_s"], p["d_e"]
    n = d_s * d_e
    has_chi, has_rse = "chi" in p, "rho_SE" in p
    if has_chi == has_rse:
        raise SchemaError("custom model needs exactly one of chi, rho_SE")
    if has_rse:
        rho_s, ctx = decompose_total(_sized(p, "rho_SE", n), d_s, d_e, tol)
    else:
        if "rho_E" not in p:
            raise SchemaError("custom model with chi also needs rho_E")
        ctx = AssignmentContext(d_s, d_e, _sized(p, "rho_E", d_e), _sized(p, "chi", n), tol)
        rho_s = None
    if "H_total" in p:
        H = _sized(p, "H_total", n)
    elif all(k in p for k in ("H_S", "H_E")):
        H = ops.tensor(_sized(p, "H_S", d_s), np.eye(d_e)) + ops.tensor(np.eye(d_s), _sized(p, "H_E", d_e))
        if "H_I" in p:
            H = H + _sized(p, "H_I", n)
    else:
        raise SchemaError("custom model needs H_total or H_S and H_E (and optionally H_I)")
    return TotalModel(ctx, H), rho_s


def scenario_from_dict(raw):
    if not isinstance(raw, dict):
        raise SchemaError("scenario must be a JSON object")
    tag = raw.get("model")
    if tag not in MODEL_TAGS:
        raise SchemaError(f"model must be one of {MODEL_TAGS}, got {tag!r}")
    params = raw.get(tag, {})
    if not isinstance(params, dict):
        raise SchemaError(f"'{tag}' block must be an object")
    grid = raw.get("time_grid", {})
    tols = raw.get("tolerances", {})
    if not isinstance(grid, dict) or not isinstance(tols, dict):
        raise SchemaError("time_grid and tolerances must be objects")
    unknown = set(tols) - {"herm", "psd", "trace", "cond_threshold"}
    if unknown:
        raise SchemaError(f"unknown tolerance keys {sorted(unknown)}")
    try:
        tg = TimeGrid(float(grid.get("t_max", TimeGrid.t_max)), int(grid.get("steps", TimeGrid.steps)))
        tol = ops.Tolerances(**{k: float(v) for k, v in tols.items() if k != "cond_threshold"})
        cond = float(tols.get("cond_threshold", DEFAULT_COND_THRESHOLD))
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc)) from None
    if tg.steps < 1 or tg.t_max <= 0:
        raise SchemaError("time grid needs t_max > 0 and steps >= 1")
    outputs = raw.get("outputs", ["exact", "linear", "master"])
    if not isinstance(outputs, list) or not set(outputs) <= {"exact", "linear", "master"}:
        raise SchemaError("outputs must be a subset of ['exact', 'linear', 'master']")
    sc = Scenario(tag, dict(params), tg, tol, cond, raw.get("initial_state", "reference"),
                  tuple(outputs), seed, raw)
    try:
        sc.build()
    except SchemaError:
        raise
    except ValueError as exc:  # operator invariants (Hermiticity, traces, positivity, dimensions)
        raise SchemaError(str(exc)) from None
    return sc


def load_scenario(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    return scenario_from_dict(raw)


def builtin_scenario(tag, **params):
    raw = {"model": tag, tag: params}
    return scenario_from_dict(raw)
