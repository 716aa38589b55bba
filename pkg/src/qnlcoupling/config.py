"""YAML run configuration for the command-line driver."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from importlib import resources

import yaml

from .assembly import Arrangement, ArrangementKind, CouplingConfig, Scheme
from .errors import ConfigurationError
from .experiments import Forcing, Problem
from .kernels import KernelKind
from .linalg import DEFAULT_SEED

PRESETS = ("table1", "table2", "direct_vs_compatible", "boundary_layer", "singular", "default")


@dataclass(frozen=True)
class RunConfig:
    x_left: float = -1.0
    x_right: float = 1.0
    levels: tuple[int, ...] = (64,)
    kernel: str = "constant"
    ratio: int | None = 3
    delta: float | None = None
    arrangement: str = "nonlocal_local"
    interfaces: tuple[float, ...] = (0.0,)
    forcing: str = "quartic"
    params: tuple[float, ...] = ()
    scheme: str = "compatible"
    output: str = "out"
    seed: int = DEFAULT_SEED
    trials: int = 20

    def __post_init__(self):
        try:
            KernelKind(self.kernel)
            ArrangementKind(self.arrangement)
            Forcing(self.forcing)
            Scheme(self.scheme)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.kernel == KernelKind.CUSTOM.value:
            raise ConfigurationError("custom kernels cannot be selected from a config file")
        if (self.ratio is None) == (self.delta is None):
            raise ConfigurationError("set exactly one of kernel.ratio and kernel.delta")
        if self.ratio is not None and (int(self.ratio) != self.ratio or self.ratio < 1):
            raise ConfigurationError(f"kernel.ratio must be a positive integer, got {self.ratio!r}")
        if self.delta is not None and not self.delta > 0:
            raise ConfigurationError(f"kernel.delta must be positive, got {self.delta!r}")
        if not self.levels or any(int(n) != n or n < 1 for n in self.levels):
            raise ConfigurationError(f"mesh.N must be positive integers, got {self.levels!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be positive")

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        kernel = {"type": self.kernel}
        if self.ratio is not None:
            kernel["ratio"] = int(self.ratio)
        else:
            kernel["delta"] = float(self.delta)
        return {
            "domain": {"x_left": float(self.x_left), "x_right": float(self.x_right)},
            "mesh": {"N": [int(n) for n in self.levels]},
            "kernel": kernel,
            "arrangement": {"type": self.arrangement, "interfaces": [float(x) for x in self.interfaces]},
            "problem": {"forcing": self.forcing, "params": [float(p) for p in self.params]},
            "scheme": self.scheme,
            "output": self.output,
            "seed": int(self.seed),
            "trials": int(self.trials),
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a mapping")
        known = {"domain", "mesh", "kernel", "arrangement", "problem", "scheme", "output", "seed", "trials"}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        dom = data.get("domain", {}) or {}
        mesh = data.get("mesh", {}) or {}
        ker = data.get("kernel", {}) or {}
        arr = data.get("arrangement", {}) or {}
        prob = data.get("problem", {}) or {}
        levels = mesh.get("N", cls.levels)
        if isinstance(levels, int):
            levels = [levels]
        ratio, delta = ker.get("ratio"), ker.get("delta")
        if ratio is None and delta is None:
            ratio = 3
        try:
            return cls(
                x_left=float(dom.get("x_left", -1.0)),
                x_right=float(dom.get("x_right", 1.0)),
                levels=tuple(int(n) for n in levels),
                kernel=str(ker.get("type", "constant")),
                ratio=None if ratio is None else int(ratio),
                delta=None if delta is None else float(delta),
                arrangement=str(arr.get("type", "nonlocal_local")),
                interfaces=tuple(float(x) for x in arr.get("interfaces", _default_interfaces(arr.get("type")))),
                forcing=str(prob.get("forcing", "quartic")),
                params=tuple(float(p) for p in prob.get("params", ()) or ()),
                scheme=str(data.get("scheme", "compatible")),
                output=str(data.get("output", "out")),
                seed=int(data.get("seed", DEFAULT_SEED)),
                trials=int(data.get("trials", 20)),
            )
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed config: {exc}") from None

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse config: {exc}") from None
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path: str | os.PathLike) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None

    @classmethod
    def preset(cls, name: str) -> "RunConfig":
        if name not in PRESETS:
            raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        text = resources.files("qnlcoupling.presets").joinpath(f"{name}.yaml").read_text(encoding="utf-8")
        return cls.loads(text)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    # -- construction of library objects -------------------------------
    def ratio_for(self, n_half: int) -> int:
        if self.ratio is not None:
            return int(self.ratio)
        h = (self.x_right - self.x_left) / (2 * n_half)
        r = self.delta / h
        k = int(round(r))
        if k < 1 or abs(r - k) > 1e-9 * max(1.0, r):
            raise ConfigurationError(f"kernel.delta = {self.delta!r} is not an integer multiple of h = {h!r}")
        return k

    def arrangement_obj(self) -> Arrangement:
        return Arrangement(ArrangementKind(self.arrangement), self.interfaces)

    def coupling(self, n_half: int, scheme: str | None = None) -> CouplingConfig:
        return CouplingConfig.build(
            n_half,
            self.arrangement_obj(),
            self.kernel,
            self.ratio_for(n_half),
            scheme or self.scheme,
            self.x_left,
            self.x_right,
        )

    def problem(self, h: float | None = None) -> Problem:
        f = Forcing(self.forcing)
        if f is Forcing.SINGULAR:
            # no parameter: s0 = h / 2 keeps the singularity off the grid
            s0 = self.params[0] if self.params else (h / 2 if h is not None else 0.0)
            return Problem.singular(s0)
        if f is Forcing.POLYNOMIAL:
            return Problem.polynomial(self.params, self.x_left, self.x_right)
        return Problem(f, (), self.x_left, self.x_right)

    def validate(self) -> None:
        """Build every level's config so interface and horizon errors surface early."""
        for n in self.levels:
            self.coupling(n)
        check_output_dir(self.output)


def _default_interfaces(kind) -> list[float]:
    if kind == ArrangementKind.LOCAL_NONLOCAL_LOCAL.value:
        return [-0.5, 0.5]
    if kind in (ArrangementKind.PURE_LOCAL.value, ArrangementKind.PURE_NONLOCAL.value):
        return []
    return [0.0]


def check_output_dir(path: str) -> None:
    p = os.path.abspath(path)
    probe = p
    while not os.path.exists(probe):
        parent = os.path.dirname(probe)
        if parent == probe:
            break
        probe = parent
    if not os.path.isdir(probe):
        raise ConfigurationError(f"output path {path!r} is not a directory")
    if not os.access(probe, os.W_OK):
        raise ConfigurationError(f"output directory {probe!r} is not writable")
