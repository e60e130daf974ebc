"""Declarative experiment configuration (JSON).

A config names exactly one dataset source plus the neuron, plasticity,
clock, seed, output directory and report options::

    {
      "version": 1,
      "dataset": {"synthetic": {...}} | {"weatherlike": {...}}
                 | {"csv": {...}} | {"raster": {...}},
      "neuron": {"v_th": null, "tau_m": 2.0, "v_reset": 0.0},
      "calibration": {"target_rate_hz": 1.5, "sample_steps": 5000},
      "plasticity": {"mode": "fstdp", "kernel": {...}, "fatigue": {...},
                     "initial_weight": 0.5},
      "clock": {"dt": 0.1},
      "seed": 0,
      "output_dir": "out",
      "report": {"trajectory_stride": 1000, "matrices": ["normalized"]}
    }

``neuron.v_th = null`` calibrates the threshold on the first
``calibration.sample_steps`` steps.  Validation failures raise
:class:`ValidationError` naming the offending field, e.g.
``dataset.synthetic.c``.
"""

import copy
import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

from .exceptions import FSTDPError, ValidationError
from .plasticity import FatigueParams, KernelParams, Mode, PlasticityConfig

__all__ = [
    "DATASET_KINDS",
    "MATRIX_KINDS",
    "ExperimentConfig",
    "load_config",
    "list_presets",
    "preset_path",
]

CONFIG_VERSION = 1
DATASET_KINDS = ("synthetic", "weatherlike", "csv", "raster")
MATRIX_KINDS = ("uncentered", "normalized")

_DATASET_KEYS = {
    "synthetic": {"n_channels", "n_steps", "rates", "correlated_set", "c"},
    "weatherlike": {
        "n_scarce_correlated",
        "n_frequent_uncorrelated",
        "p_scarce",
        "p_frequent",
        "c",
        "n_steps",
    },
    "csv": {"path", "threshold", "labels"},
    "raster": {"path", "labels"},
}
_DATASET_REQUIRED = {
    "synthetic": {"n_channels", "n_steps", "rates"},
    "weatherlike": set(),
    "csv": {"path"},
    "raster": {"path"},
}


def _check_keys(d, allowed, path, required=()):
    if not isinstance(d, dict):
        raise ValidationError(path, "must be an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ValidationError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")
    for k in sorted(required):
        if k not in d:
            raise ValidationError(f"{path}.{k}" if path else k, "required field missing")


def _dc_fields(cls):
    return {f.name for f in fields(cls)}


def _build(cls, d, path):
    _check_keys(d, _dc_fields(cls), path)
    try:
        return cls(**d)
    except (FSTDPError, TypeError, ValueError) as exc:
        raise ValidationError(path, str(exc)) from None


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_kind: str
    dataset: dict
    v_th: Optional[float] = None
    tau_m: float = 2.0
    v_reset: float = 0.0
    target_rate_hz: float = 1.5
    sample_steps: int = 5000
    plasticity: PlasticityConfig = field(default_factory=PlasticityConfig)
    dt: float = 0.1
    seed: int = 0
    output_dir: str = "out"
    trajectory_stride: Optional[int] = None
    matrices: Tuple[str, ...] = ()

    # -- parsing -------------------------------------------------------
    @classmethod
    def from_dict(cls, d, base_dir=None):
        """Validate ``d`` and build a config.

        Relative dataset paths are resolved against ``base_dir`` when given.
        """
        top = {"version", "dataset", "neuron", "calibration", "plasticity", "clock", "seed", "output_dir", "report"}
        _check_keys(d, top, "", required={"dataset"})
        if d.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ValidationError("version", f"unsupported config version {d.get('version')!r}")

        ds = d["dataset"]
        if not isinstance(ds, dict) or len(ds) != 1:
            raise ValidationError("dataset", f"must hold exactly one of {', '.join(DATASET_KINDS)}")
        (kind, body), = ds.items()
        if kind not in DATASET_KINDS:
            raise ValidationError(f"dataset.{kind}", "unknown dataset kind")
        _check_keys(body, _DATASET_KEYS[kind], f"dataset.{kind}", _DATASET_REQUIRED[kind])
        body = copy.deepcopy(body)
        if base_dir is not None:
            for key in ("path", "labels"):
                if body.get(key) is not None and not Path(body[key]).is_absolute():
                    body[key] = str(Path(base_dir) / body[key])

        neuron = d.get("neuron", {})
        _check_keys(neuron, {"v_th", "tau_m", "v_reset"}, "neuron")
        cal = d.get("calibration", {})
        _check_keys(cal, {"target_rate_hz", "sample_steps"}, "calibration")
        clock = d.get("clock", {})
        _check_keys(clock, {"dt"}, "clock")
        report = d.get("report", {})
        _check_keys(report, {"trajectory_stride", "matrices"}, "report")

        pl = d.get("plasticity", {})
        _check_keys(pl, {"mode", "kernel", "fatigue", "initial_weight", "post_trace"}, "plasticity")
        kernel = _build(KernelParams, pl.get("kernel", {}), "plasticity.kernel")
        fatigue = _build(FatigueParams, pl.get("fatigue", {}), "plasticity.fatigue")
        mode = pl.get("mode", "fstdp")
        if mode not in [m.value for m in Mode]:
            raise ValidationError("plasticity.mode", f"must be 'stdp' or 'fstdp', got {mode!r}")
        if mode == "stdp" and "fatigue" not in pl:
            fatigue = FatigueParams(jump=0.0)
        plast = {k: pl[k] for k in ("initial_weight", "post_trace") if k in pl}
        try:
            rule = PlasticityConfig(kernel=kernel, fatigue=fatigue, mode=Mode(mode), **plast)
        except FSTDPError as exc:
            raise ValidationError("plasticity", str(exc)) from None

        matrices = report.get("matrices", [])
        if not isinstance(matrices, list) or any(m not in MATRIX_KINDS for m in matrices):
            raise ValidationError("report.matrices", f"entries must be among {', '.join(MATRIX_KINDS)}")

        cfg = cls(
            dataset_kind=kind,
            dataset=body,
            v_th=neuron.get("v_th"),
            tau_m=neuron.get("tau_m", 2.0),
            v_reset=neuron.get("v_reset", 0.0),
            target_rate_hz=cal.get("target_rate_hz", 1.5),
            sample_steps=cal.get("sample_steps", 5000),
            plasticity=rule,
            dt=clock.get("dt", 0.1),
            seed=d.get("seed", 0),
            output_dir=d.get("output_dir", "out"),
            trajectory_stride=report.get("trajectory_stride"),
            matrices=tuple(matrices),
        )
        cfg.validate()
        return cfg

    def validate(self):
        """Check scalar fields and the dataset body; raise ValidationError."""
        from .core import NeuronConfig, SimClock

        def num(path, value, cond, msg):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not cond(value):
                raise ValidationError(path, msg)

        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ValidationError("seed", "must be a non-negative integer")
        num("clock.dt", self.dt, lambda x: x > 0, "must be positive")
        num("neuron.tau_m", self.tau_m, lambda x: x > 0, "must be positive")
        num("neuron.v_reset", self.v_reset, lambda x: True, "must be a number")
        if self.v_th is not None:
            num("neuron.v_th", self.v_th, lambda x: x > self.v_reset, "must exceed v_reset")
        try:
            NeuronConfig(v_th=self.v_reset + 1.0 if self.v_th is None else self.v_th, tau_m=self.tau_m, v_reset=self.v_reset)
            SimClock(dt=self.dt)
        except FSTDPError as exc:
            raise ValidationError("neuron", str(exc)) from None
        num("calibration.target_rate_hz", self.target_rate_hz, lambda x: x > 0, "must be positive")
        num("calibration.sample_steps", self.sample_steps, lambda x: int(x) == x and x >= 1000, "must be an integer >= 1000")
        if self.trajectory_stride is not None:
            num("report.trajectory_stride", self.trajectory_stride, lambda x: int(x) == x and x >= 1, "must be a positive integer")
        if not isinstance(self.output_dir, str) or not self.output_dir:
            raise ValidationError("output_dir", "must be a non-empty string")

        path = f"dataset.{self.dataset_kind}"
        body = self.dataset
        if self.dataset_kind == "synthetic":
            for key in ("n_channels", "n_steps"):
                num(f"{path}.{key}", body[key], lambda x: int(x) == x and x >= 1, "must be a positive integer")
            num(f"{path}.c", body.get("c", 0.0), lambda x: 0 <= x < 1, "must lie in [0, 1)")
            try:
                self.process_spec(self.seed)
            except FSTDPError as exc:
                raise ValidationError(path, str(exc)) from None
        elif self.dataset_kind == "weatherlike":
            num(f"{path}.c", body.get("c", 0.3), lambda x: 0 <= x < 1, "must lie in [0, 1)")
            for key in ("n_scarce_correlated", "n_frequent_uncorrelated", "n_steps"):
                if key in body:
                    num(f"{path}.{key}", body[key], lambda x: int(x) == x and x >= 1, "must be a positive integer")
            for key in ("p_scarce", "p_frequent"):
                if key in body:
                    num(f"{path}.{key}", body[key], lambda x: 0 < x <= 1, "must lie in (0, 1]")
            if body.get("p_scarce", 0.03) >= body.get("p_frequent", 0.12):
                raise ValidationError(f"{path}.p_scarce", "must be below p_frequent")
        elif self.dataset_kind == "csv":
            num(f"{path}.threshold", body.get("threshold", 0.0), lambda x: x >= 0, "must be >= 0")
        for key in ("path", "labels"):
            if key in body and body[key] is not None and not isinstance(body[key], str):
                raise ValidationError(f"{path}.{key}", "must be a string path")

    def process_spec(self, seed):
        from .datagen import ProcessSpec

        b = self.dataset
        return ProcessSpec(
            n_channels=int(b["n_channels"]),
            n_steps=int(b["n_steps"]),
            rates=tuple(b["rates"]) if isinstance(b["rates"], list) else b["rates"],
            dt=self.dt,
            correlated_set=tuple(b.get("correlated_set", ())),
            c=b.get("c", 0.0),
            seed=seed,
        )

    def weatherlike_kwargs(self, seed):
        return {**self.dataset, "seed": seed}

    # -- emission ------------------------------------------------------
    def to_dict(self):
        rule = self.plasticity
        k, f = rule.kernel, rule.fatigue
        return {
            "version": CONFIG_VERSION,
            "dataset": {self.dataset_kind: copy.deepcopy(self.dataset)},
            "neuron": {"v_th": self.v_th, "tau_m": self.tau_m, "v_reset": self.v_reset},
            "calibration": {"target_rate_hz": self.target_rate_hz, "sample_steps": self.sample_steps},
            "plasticity": {
                "mode": rule.mode.value,
                "kernel": {
                    "a_plus": k.a_plus,
                    "a_minus": k.a_minus,
                    "tau_plus": k.tau_plus,
                    "tau_minus": k.tau_minus,
                    "a_post": k.a_post,
                },
                "fatigue": {"jump": f.jump, "tau_f": f.tau_f, "clamp": f.clamp},
                "initial_weight": rule.initial_weight,
                "post_trace": rule.post_trace,
            },
            "clock": {"dt": self.dt},
            "seed": self.seed,
            "output_dir": self.output_dir,
            "report": {"trajectory_stride": self.trajectory_stride, "matrices": list(self.matrices)},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text, base_dir=None):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError("<config>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(d, base_dir)


def list_presets():
    return sorted(p.name[:-5] for p in resources.files("fstdp.presets").iterdir() if p.name.endswith(".json"))


def preset_path(name):
    p = resources.files("fstdp.presets") / f"{name}.json"
    if not p.is_file():
        raise ValidationError("<config>", f"no preset named {name!r} (available: {', '.join(list_presets())})")
    return p


def read_config_text(ref):
    """Text of a config file, or of a bundled preset when ``ref`` is a preset name."""
    path = Path(ref)
    if path.is_file():
        return path.read_text(), path.parent
    if ref in list_presets():
        return preset_path(ref).read_text(), None
    raise ValidationError("<config>", f"config file not found: {ref}")


def load_config(ref):
    """Load an :class:`ExperimentConfig` from a path or preset name."""
    text, base = read_config_text(ref)
    return ExperimentConfig.from_json(text, base)
