"""Declarative scenarios, their execution, and the built-in figure presets."""

from __future__ import annotations

import copy
import hashlib
import io
import csv
import json
import math
import time
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import __version__
from .engine import OpgParams, gpa_state, perturbative_state, validity_report
from .errors import ConvergenceError, NonFiniteError, OpgError, SchemaError
from .grid import GridSpec
from .measures import linear_entropy, negativity_with_uncertainty, quadrature_variance, squeezing_db
from .numerics import QuadratureSpec
from .oracle import evolve_mixture
from .phase import schmidt_decompose
from .pumps import KerrModulated, p_from_husimi, pump_from_descriptor

__all__ = ["Scenario", "RunManifest", "CONFIG_SCHEMA", "PRESETS", "load_config", "parse_config",
           "preset_config", "run_scenario", "config_hash", "list_presets"]

STATE_MEASURES = ("negativity", "negativity_uncertainty", "linear_entropy", "var2dX",
                  "squeezing_db", "tail_bound", "cutoff", "exp_condition")
SPECIAL_MEASURES = {"phase_density": "theta", "schmidt_lambda": "rank"}
SWEEP_VARIABLES = ("gt", "gt_amplitude", "gk", "dtheta", "nbar", "theta", "rank")
ENGINES = ("perturbative", "gpa", "oracle")

_SWEEP = {
    "type": "object",
    "properties": {
        "variable": {"enum": list(SWEEP_VARIABLES)},
        "start": {"type": "number"},
        "stop": {"type": "number"},
        "step": {"type": "number", "exclusiveMinimum": 0},
        "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
    "required": ["variable"],
    "oneOf": [{"required": ["start", "stop", "step"]}, {"required": ["values"]}],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "scenarios": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "pump": {"type": "object", "required": ["kind"]},
                    "engine": {"enum": list(ENGINES)},
                    "gt": {"type": "number", "minimum": 0},
                    "sweep": _SWEEP,
                    "outputs": {"type": "array", "minItems": 1,
                                "items": {"enum": list(STATE_MEASURES) + list(SPECIAL_MEASURES)}},
                    "tolerances": {
                        "type": "object",
                        "properties": {"abs_tol": {"type": "number", "exclusiveMinimum": 0},
                                       "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                                       "max_subdivisions": {"type": "integer", "minimum": 1}},
                        "additionalProperties": False,
                    },
                    "fock_cutoff": {"type": "integer", "minimum": 1},
                    "raster": {
                        "type": "object",
                        "properties": {"n_r": {"type": "integer", "minimum": 2},
                                       "n_theta": {"type": "integer", "minimum": 2},
                                       "r_max": {"type": "number", "exclusiveMinimum": 0},
                                       "smoothing": {"type": "number", "minimum": 0}},
                        "additionalProperties": False,
                    },
                },
                "required": ["name", "pump", "engine", "sweep", "outputs"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["scenarios"],
    "additionalProperties": False,
}


@dataclass
class Scenario:
    name: str
    pump: dict
    engine: str
    sweep: dict
    outputs: list
    gt: float | None = None
    tolerances: dict = field(default_factory=dict)
    fock_cutoff: int | None = None
    raster: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        s = cls(**copy.deepcopy(d))
        s.validate()
        return s

    def to_dict(self) -> dict:
        d = {"name": self.name, "pump": self.pump, "engine": self.engine, "sweep": self.sweep,
             "outputs": self.outputs}
        if self.gt is not None:
            d["gt"] = self.gt
        for key in ("tolerances", "fock_cutoff", "raster"):
            v = getattr(self, key)
            if v:
                d[key] = v
        return d

    def sweep_values(self) -> np.ndarray:
        sw = self.sweep
        if "values" in sw:
            return np.asarray(sw["values"], dtype=float)
        count = int(round((sw["stop"] - sw["start"]) / sw["step"])) + 1
        # rounding keeps 0.005 * k printable as 0.005 * k
        return np.round(sw["start"] + sw["step"] * np.arange(count), 12)

    @property
    def special(self) -> str | None:
        hits = [o for o in self.outputs if o in SPECIAL_MEASURES]
        return hits[0] if hits else None

    def validate(self) -> None:
        sw = self.sweep
        if "values" not in sw:
            for k in ("start", "stop", "step"):
                if not math.isfinite(sw[k]):
                    raise SchemaError(f"{self.name}: sweep {k} is not finite")
            if sw["stop"] < sw["start"]:
                raise SchemaError(f"{self.name}: sweep range is not ordered")
        special = [o for o in self.outputs if o in SPECIAL_MEASURES]
        if special:
            if len(self.outputs) != 1:
                raise SchemaError(f"{self.name}: {special[0]} cannot be mixed with other outputs")
            if sw["variable"] != SPECIAL_MEASURES[special[0]]:
                raise SchemaError(f"{self.name}: {special[0]} needs a '{SPECIAL_MEASURES[special[0]]}' sweep")
        elif sw["variable"] in ("theta", "rank"):
            raise SchemaError(f"{self.name}: sweep over {sw['variable']} needs a matching output")
        needs_gt = sw["variable"] not in ("gt", "gt_amplitude") and not special
        if needs_gt and self.gt is None:
            raise SchemaError(f"{self.name}: a fixed 'gt' is required when sweeping {sw['variable']}")
        try:
            pump = pump_from_descriptor(self.pump)
        except OpgError as exc:
            raise SchemaError(f"{self.name}: {exc}") from None
        if self.engine == "oracle" and pump.signed:
            raise SchemaError(f"{self.name}: the oracle engine rejects signed P-functions")
        if sw["variable"] == "gt_amplitude" and not _amplitude(self.pump):
            raise SchemaError(f"{self.name}: gt_amplitude sweep needs a pump amplitude")


def _amplitude(desc: dict) -> float:
    if desc.get("kind") == "KerrModulated":
        return _amplitude(desc["inner"])
    return float(desc.get("amplitude", 0.0))


def _with_param(desc: dict, key: str, value: float) -> dict:
    d = copy.deepcopy(desc)
    if key == "gk":
        if d["kind"] == "KerrModulated":
            d["gk"] = value
        else:
            d = {"kind": "KerrModulated", "inner": d, "gk": value, "route": "factorized"}
        return d
    target = d["inner"] if d["kind"] == "KerrModulated" else d
    if key not in target:
        raise SchemaError(f"pump {target['kind']} has no parameter {key!r}")
    target[key] = value
    return d


def parse_config(data: dict) -> list[Scenario]:
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"config invalid at {where}: {exc.message}") from None
    scenarios = [Scenario.from_dict(s) for s in data["scenarios"]]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise SchemaError("scenario names must be unique")
    return scenarios


def load_config(path) -> list[Scenario]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from None
    return parse_config(data)


def config_hash(data: dict) -> str:
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# --- execution ---------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _state(pump, engine, gt, cutoff, spec):
    params = OpgParams(gt, cutoff)
    if engine == "perturbative":
        return perturbative_state(pump, params, spec)
    if engine == "oracle":
        return evolve_mixture(pump, params)
    return gpa_state(pump, params, spec)


def _state_row(state, outputs, report):
    n, dn = negativity_with_uncertainty(state)
    row = []
    for o in outputs:
        if o == "negativity":
            row.append(n)
        elif o == "negativity_uncertainty":
            row.append(dn)
        elif o == "linear_entropy":
            row.append(linear_entropy(state))
        elif o == "var2dX":
            row.append(quadrature_variance(state))
        elif o == "squeezing_db":
            row.append(squeezing_db(quadrature_variance(state)))
        elif o == "tail_bound":
            row.append(state.tail_bound)
        elif o == "cutoff":
            row.append(state.cutoff)
        elif o == "exp_condition":
            row.append(report.exp_condition)
    return row


def _guard(state, name, v):
    rho = state.coefficients
    if not np.all(np.isfinite(rho)) or not math.isfinite(state.tail_bound):
        raise NonFiniteError(f"{name}: non-finite coefficients at sweep value {float(v)!r}")
    total = state.trace() + state.tail_bound
    if abs(total - 1) > 1e-6:
        raise NonFiniteError(f"{name}: trace + tail = {total!r} at sweep value {float(v)!r}")
    if state.meta.get("auto_cutoff"):
        lost = max(state.tail_bound, state.meta.get("negativity_tail", 0.0))
        if lost > 1e-6:
            raise ConvergenceError(f"{name}: automatic cutoff {state.cutoff} leaves a tail of "
                                   f"{lost:.3g} at sweep value {float(v)!r}", best=lost)


def _special_rows(sc: Scenario, values):
    pump = pump_from_descriptor(sc.pump)
    if sc.special == "phase_density":
        phase = pump.phase if isinstance(pump, KerrModulated) else None
        if phase is None:
            ring = pump.ring
            if ring is None:
                raise SchemaError(f"{sc.name}: phase_density needs a ring or Kerr-modulated pump")
            phase = ring.phase
        return [[v] for v in np.asarray(phase.evaluate(values), dtype=float)], {}
    raster = dict(sc.raster)
    smoothing = raster.pop("smoothing", 0.0)
    grid = p_from_husimi(pump, GridSpec(**raster), smoothing=smoothing)
    sd = schmidt_decompose(grid)
    lam = sd.weights / np.sum(sd.weights)
    out = []
    for r in values:
        k = int(r)
        if k < 1 or k > lam.size or k != r:
            raise SchemaError(f"{sc.name}: rank {r} outside 1..{lam.size}")
        out.append([lam[k - 1]])
    info = {"r99": sd.rank_for(0.99), "smoothing": smoothing,
            "edge_envelope": grid.meta.get("edge_envelope")}
    return out, info


def run_scenario(sc: Scenario, tol: float | None = None, cutoff: int | None = None):
    """Execute one scenario; returns (csv_text, manifest_entry)."""
    t0 = time.perf_counter()
    values = sc.sweep_values()
    spec_kw = dict(sc.tolerances)
    if tol is not None:
        spec_kw.update(abs_tol=tol, rel_tol=tol)
    spec = QuadratureSpec(**spec_kw)
    fixed_cut = cutoff if cutoff is not None else sc.fock_cutoff
    var = sc.sweep["variable"]
    flags = set()
    info = {}
    if sc.special:
        rows, info = _special_rows(sc, values)
    else:
        rows = []
        base = pump_from_descriptor(sc.pump) if var in ("gt", "gt_amplitude") else None
        amp = _amplitude(sc.pump)
        for v in values:
            if var == "gt":
                pump, gt = base, float(v)
            elif var == "gt_amplitude":
                pump, gt = base, float(v) / amp
            else:
                pump, gt = pump_from_descriptor(_with_param(sc.pump, var, float(v))), float(sc.gt)
            state = _state(pump, sc.engine, gt, fixed_cut, spec)
            _guard(state, sc.name, v)
            report = validity_report(pump, OpgParams(gt), spec)
            flags.update(k for k, ok in report.flags().items() if not ok)
            row = _state_row(state, sc.outputs, report)
            if not all(math.isfinite(x) for x in row):
                raise NonFiniteError(f"{sc.name}: non-finite output at sweep value {float(v)!r}")
            rows.append(row)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep_value", *sc.outputs])
    for v, row in zip(values, rows):
        w.writerow([_fmt(v), *(_fmt(x) for x in row)])
    entry = {"scenario": sc.name, "rows": len(rows), "seconds": round(time.perf_counter() - t0, 3),
             "validity_flags_failed": sorted(flags)}
    entry.update({k: v for k, v in info.items() if v is not None})
    return buf.getvalue(), entry


@dataclass
class RunManifest:
    config_hash: str
    version: str
    scenarios: list

    def to_json(self) -> str:
        return json.dumps({"config_hash": self.config_hash, "version": self.version,
                           "scenarios": self.scenarios}, indent=2, sort_keys=True) + "\n"


# --- presets -----------------------------------------------------------------

GK_VALUES = (0.0, 0.001, 0.003, 0.009)
GT_SWEEP = {"variable": "gt", "start": 0.005, "stop": 0.05, "step": 0.005}
# fig7 family: every member is rasterised with the same smoothing, the
# least one at which all four transforms are resolved (see resolvable_smoothing)
FIG7_SMOOTHING = 0.75
_NE_SL = ["negativity", "linear_entropy"]
_THETA = {"variable": "theta", "start": 0.0, "stop": 6.2709, "step": 2 * math.pi / 512}


def _label(gk):
    return f"gk{gk:g}"


def _fig2():
    sw = {"variable": "gt", "start": 0.0, "stop": 0.05, "step": 0.0025}
    return [
        {"name": "thermal", "pump": {"kind": "Thermal", "nbar": 100.0}, "engine": "gpa",
         "sweep": sw, "outputs": _NE_SL},
        {"name": "displaced_thermal",
         "pump": {"kind": "DisplacedThermal", "amplitude": 9.0, "theta0": 0.0, "nbar": 19.0},
         "engine": "gpa", "sweep": sw, "outputs": _NE_SL},
    ]


def _fig4():
    sw = {"variable": "gt", "start": 0.0, "stop": 0.05, "step": 0.0025}
    out = [{"name": "thermal", "pump": {"kind": "Thermal", "nbar": 100.0}, "engine": "gpa",
            "sweep": sw, "outputs": _NE_SL}]
    for tag, dth in (("a", 0.0), ("b", 0.3), ("c", 0.6)):
        out.append({"name": f"dephased_{tag}",
                    "pump": {"kind": "DephasedCoherent", "amplitude": 10.0, "theta0": 0.0, "dtheta": dth},
                    "engine": "gpa", "sweep": sw, "outputs": _NE_SL})
    return out


def _kerr_dt(amplitude, nbar, gk, route="factorized"):
    return {"kind": "KerrModulated", "gk": gk, "route": route,
            "inner": {"kind": "DisplacedThermal", "amplitude": amplitude, "theta0": 0.0, "nbar": nbar}}


def _phase_preset(amplitude, nbar):
    return [{"name": f"phase_{_label(gk)}", "pump": _kerr_dt(amplitude, nbar, gk), "engine": "gpa",
             "sweep": _THETA, "outputs": ["phase_density"]} for gk in GK_VALUES]


def _fig7():
    return [{"name": f"schmidt_{_label(gk)}", "pump": _kerr_dt(math.sqrt(399), 1.0, gk, "husimi"),
             "engine": "gpa", "sweep": {"variable": "rank", "start": 1, "stop": 40, "step": 1},
             "outputs": ["schmidt_lambda"],
             "raster": {"n_r": 400, "n_theta": 400, "r_max": 25.0, "smoothing": FIG7_SMOOTHING}}
            for gk in GK_VALUES]


def _fig8():
    return [{"name": f"kerr_coherent_{_label(gk)}",
             "pump": {"kind": "KerrModulated", "gk": gk, "route": "factorized",
                      "inner": {"kind": "Coherent", "amplitude": 20.0, "theta0": 0.0}},
             "engine": "gpa", "sweep": GT_SWEEP, "outputs": _NE_SL} for gk in GK_VALUES]


def _fig10(route):
    return [{"name": f"kerr_dt_{_label(gk)}", "pump": _kerr_dt(19.0, 39.0, gk, route),
             "engine": "gpa", "sweep": GT_SWEEP, "outputs": _NE_SL} for gk in GK_VALUES]


def _fig11():
    sw = {"variable": "gt_amplitude", "start": 0.0, "stop": 1.2, "step": 0.01}
    out = ["var2dX", "squeezing_db"]
    half_pi = math.pi / 2
    return [
        {"name": "coherent", "pump": {"kind": "Coherent", "amplitude": 10.0, "theta0": half_pi},
         "engine": "gpa", "sweep": sw, "outputs": out},
        {"name": "displaced_thermal",
         "pump": {"kind": "DisplacedThermal", "amplitude": 10.0, "theta0": half_pi, "nbar": 10.0},
         "engine": "gpa", "sweep": sw, "outputs": out},
        {"name": "dephased",
         "pump": {"kind": "DephasedCoherent", "amplitude": 10.0, "theta0": half_pi, "dtheta": 0.1},
         "engine": "gpa", "sweep": sw, "outputs": out},
    ]


def _oracle_validate():
    sw = {"variable": "gt", "values": [0.01, 0.02, 0.05]}
    pump = {"kind": "Coherent", "amplitude": 0.5, "theta0": 0.0}
    out = ["negativity", "linear_entropy", "var2dX"]
    return [{"name": e, "pump": pump, "engine": e, "sweep": sw, "outputs": out}
            for e in ("oracle", "perturbative", "gpa")]


PRESETS = {
    "fig2": ("thermal vs displaced thermal pump: S_L and N vs gt", _fig2),
    "fig4": ("thermal vs dephased coherent pump (dtheta 0, 0.3, 0.6)", _fig4),
    "fig6": ("Kerr-modulated displaced thermal phase densities, nbar 1, |alpha0|^2 399",
             lambda: _phase_preset(math.sqrt(399), 1.0)),
    "fig7": ("Schmidt spectra of rasterised Kerr-modulated displaced thermal P", _fig7),
    "fig8": ("Kerr-modulated coherent pump |alpha0| 20: N and S_L vs gt", _fig8),
    "fig9": ("Kerr-modulated displaced thermal phase densities, nbar 39, |alpha0| 19",
             lambda: _phase_preset(19.0, 39.0)),
    "fig10a": ("Kerr-modulated displaced thermal pump via the numerical P-function", lambda: _fig10("husimi")),
    "fig10b": ("Kerr-modulated displaced thermal pump via the series phase density", lambda: _fig10("factorized")),
    "fig11": ("combined-quadrature variance vs gt|alpha0| for three pumps", _fig11),
    "oracle-validate": ("exact evolution vs perturbative and GPA states, |alpha0| 0.5", _oracle_validate),
}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise SchemaError(f"unknown preset {name!r}; try 'opg list'")
    return {"scenarios": PRESETS[name][1]()}


def list_presets() -> str:
    return "\n".join(f"{k:16s} {v[0]}" for k, v in PRESETS.items()) + "\n"
