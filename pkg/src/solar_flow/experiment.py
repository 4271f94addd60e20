"""
Class to represent an experiment file: family, initial condition, model,
numerical settings, monitors and output location
"""
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
import yaml

from .closed_form import HS_DEMO_ALPHA
from .integration import RunConfig
from .osw import OswRunConfig
from .particle import (
    ForceFunction,
    ParticleState,
    constant_force,
    spiral_force,
)
from .solar_model import ModelParams

LOGGER = logging.getLogger(__name__)

# IO types
PathLike = Union[str, Path]

FAMILIES = ("mu-lambda", "osw", "particle")

SECTION_KEYS = {
    "family": None,
    "initial": {"preset", "constant", "modes", "reflect"},
    "model": {"lam", "lambda_osw"},
    "particle": {"force", "value", "k", "p0"},
    "run": {field.name for field in fields(RunConfig)}
    | {field.name for field in fields(OswRunConfig)},
    "monitors": {
        "reconstruct",
        "newton_iterations",
        "mckean",
        "lemmas",
        "lemma_tol",
        "transport",
        "max_amplification",
        "ermakov",
        "degregorio_bound",
        "bound_tol",
        "snapshots",
        "snapshot_count",
        "plots",
    },
    "output": {"dir"},
    "sweep": {"key", "values"},
}

DEFAULT_MONITORS = {
    "reconstruct": True,
    "newton_iterations": 4,
    "mckean": True,
    "lemmas": True,
    "lemma_tol": 1e-4,
    "transport": True,
    "max_amplification": 1e5,
    "ermakov": True,
    "degregorio_bound": True,
    "bound_tol": 1e-6,
    "snapshots": True,
    "snapshot_count": 5,
    "plots": True,
}

# model defaults per preset, used when the experiment does not set lambda
PRESET_LAMBDA = {
    "constant": 2.0,
    "burgers": 3.0,
    "hunter-saxton": 2.0,
    "mckean-global": 2.0,
    "mckean-breakdown": 2.0,
    "sine": 2.0,
}


@dataclass(frozen=True)
class InitialCondition:
    """
    Finite Fourier series
    u0(theta) = constant + sum a_k sin(2 pi k theta) + b_k cos(2 pi k theta).

    Attributes
    ------------------------
    constant: float
        Mean of u0.
    modes: Tuple[Tuple[int, float, float], ...]
        (k, sine coefficient, cosine coefficient) with k >= 1.
    """

    constant: float = 0.0
    modes: Tuple[Tuple[int, float, float], ...] = ()

    def __post_init__(self) -> None:
        """Validates and normalizes the modes."""
        if not math.isfinite(float(self.constant)):
            raise ValueError("The constant term must be finite")

        normalized = []
        for mode in self.modes:
            if len(mode) != 3:
                raise ValueError(
                    f"Modes are (k, sin, cos) triples. Received: {mode!r}"
                )
            k, a, b = int(mode[0]), float(mode[1]), float(mode[2])
            if k != mode[0] or k < 1:
                raise ValueError(f"Wavenumbers are integers >= 1: {mode!r}")
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError(f"Coefficients must be finite: {mode!r}")
            normalized.append((k, a, b))

        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "modes", tuple(normalized))

    @property
    def max_wavenumber(self) -> int:
        """Largest k present (0 for constant data)."""
        return max((k for k, _, _ in self.modes), default=0)

    def samples(self, n: int) -> np.ndarray:
        """
        Values on the grid theta_j = j / n.

        Parameters
        ------------------------
        n: int
            Grid size.

        Returns
        ------------------------
        np.ndarray
            Samples of u0.

        Raises
        ------------------------
        ValueError:
            If a mode is not resolved (2 k >= n).
        """
        if 2 * self.max_wavenumber >= n:
            raise ValueError(
                f"Mode k = {self.max_wavenumber} is not resolved at n = {n}"
            )
        theta = np.arange(n) / n
        values = np.full(n, self.constant)
        for k, a, b in self.modes:
            values += a * np.sin(2 * np.pi * k * theta)
            values += b * np.cos(2 * np.pi * k * theta)
        return values

    def reflected(self) -> "InitialCondition":
        """
        Series of -u0(1 - theta): the constant and cosine coefficients
        change sign, the sine coefficients do not.
        """
        return InitialCondition(
            constant=-self.constant,
            modes=tuple((k, a, -b) for k, a, b in self.modes),
        )

    @classmethod
    def preset(cls, name: str) -> "InitialCondition":
        """
        Named initial conditions.

        Parameters
        ------------------------
        name: str
            One of constant, burgers, hunter-saxton, mckean-global,
            mckean-breakdown, sine.

        Returns
        ------------------------
        InitialCondition
            The preset series.

        Raises
        ------------------------
        ValueError:
            If the preset does not exist.
        """
        presets = {
            "constant": cls(constant=1.0),
            "burgers": cls(modes=((1, 1.0 / (2.0 * math.pi), 0.0),)),
            "hunter-saxton": cls(modes=((1, HS_DEMO_ALPHA, 0.0),)),
            "mckean-global": cls(constant=1.0, modes=((1, 0.01, 0.0),)),
            "mckean-breakdown": cls(constant=1.0, modes=((1, 0.1, 0.0),)),
            "sine": cls(modes=((1, 1.0, 0.0),)),
        }
        if name not in presets:
            raise ValueError(
                f"Unknown preset {name!r}. Available: {sorted(presets)}"
            )
        return presets[name]


class Experiment:
    """
    Class to represent an experiment file
    """

    def __init__(
        self,
        input_config: dict,
        output_dir: Optional[PathLike] = None,
        verbose: Optional[bool] = False,
    ) -> None:
        """
        Class constructor

        Parameters
        ------------------------
        input_config: dict
            Dictionary with the sections family, initial, model, run,
            monitors, output and optionally particle and sweep.
        output_dir: Optional[PathLike]
            Directory where the artifacts will be written. Overrides the
            output section. Default: the output section, else "out".
        verbose: Optional[bool]
            If true, additional information will be logged. Default False.

        Raises
        ------------------------
        ValueError:
            If a section or key is unknown or a value is invalid.
        """

        self.input_config = input_config if input_config else {}
        self.verbose = verbose
        self.__validate_keys(self.input_config)

        self.family = self.input_config.get("family", "mu-lambda")
        self.initial = self.input_config.get("initial", {"preset": "sine"})
        self.monitors = self.input_config.get("monitors", {})

        if output_dir is None:
            output_dir = self.input_config.get("output", {}).get("dir", "out")
        self.output_dir = Path(output_dir)

        # Numerical sections are validated through their dataclasses
        self.__model = dict(self.input_config.get("model", {}))
        self.__run = dict(self.input_config.get("run", {}))
        self.__particle = dict(self.input_config.get("particle", {}))
        self.sweep = self.input_config.get("sweep")
        self.__validate_numerics()

        if self.verbose:
            LOGGER.info(
                "Experiment %s writing to %s", self.family, self.output_dir
            )

    @classmethod
    def from_yaml(
        cls, path: PathLike, verbose: Optional[bool] = False
    ) -> "Experiment":
        """
        Reads an experiment file.

        Parameters
        ------------------------
        path: PathLike
            Path of the yaml file.
        verbose: Optional[bool]
            Forwarded to the constructor.

        Returns
        ------------------------
        Experiment
            Parsed experiment.

        Raises
        ------------------------
        ValueError:
            If the file is not a yaml mapping.
        """
        with open(path) as yaml_file:
            content = yaml.safe_load(yaml_file)

        if content is None:
            content = {}
        if not isinstance(content, dict):
            raise ValueError(f"{path} does not contain a yaml mapping")
        return cls(content, verbose=verbose)

    def __validate_keys(self, config: dict) -> None:
        """
        Rejects unknown sections and keys.

        Parameters
        ------------------------
        config: dict
            Raw experiment mapping.
        """
        for section, content in config.items():
            if section not in SECTION_KEYS:
                raise ValueError(f"Unknown section: {section!r}")
            allowed = SECTION_KEYS[section]
            if allowed is None:
                continue
            if not isinstance(content, dict):
                raise ValueError(f"Section {section!r} must be a mapping")
            for key in content:
                if key not in allowed:
                    raise ValueError(f"Unknown key: {section}.{key}")

    def __validate_numerics(self) -> None:
        """
        Builds the model and run settings once so that invalid values fail
        at construction time.
        """
        if self.family == "mu-lambda":
            self.model_params
        if self.family != "particle":
            self.run_config
        else:
            self.particle
            self.particle_horizon

    @property
    def family(self) -> str:
        """
        Getter of the family attribute.

        Returns
        ------------------------
        str
            One of mu-lambda, osw, particle.
        """
        return self.__family

    @family.setter
    def family(self, new_family: str) -> None:
        """
        Setter of the family attribute.

        Parameters
        ------------------------
        new_family: str
            One of mu-lambda, osw, particle.
        """
        if new_family not in FAMILIES:
            raise ValueError(
                f"Unknown family {new_family!r}. Available: {FAMILIES}"
            )
        self.__family = new_family

    @property
    def initial(self) -> InitialCondition:
        """
        Getter of the initial condition.

        Returns
        ------------------------
        InitialCondition
            Fourier series of u0, reflected if requested.
        """
        return self.__initial

    @initial.setter
    def initial(self, section: dict) -> None:
        """
        Setter of the initial condition from the initial section.

        Parameters
        ------------------------
        section: dict
            Either a preset name or constant and modes, plus an optional
            reflect flag.
        """
        self.__preset = section.get("preset")
        if self.__preset is not None:
            if "constant" in section or "modes" in section:
                raise ValueError(
                    "initial.preset excludes initial.constant/modes"
                )
            condition = InitialCondition.preset(self.__preset)
        else:
            modes = tuple(tuple(mode) for mode in section.get("modes", ()))
            condition = InitialCondition(
                constant=section.get("constant", 0.0), modes=modes
            )

        if section.get("reflect", False):
            condition = condition.reflected()
        self.__initial = condition

    @property
    def monitors(self) -> dict:
        """
        Getter of the monitor toggles, defaults filled in.

        Returns
        ------------------------
        dict
            Monitor settings.
        """
        return self.__monitors

    @monitors.setter
    def monitors(self, section: dict) -> None:
        """
        Setter of the monitor toggles.

        Parameters
        ------------------------
        section: dict
            Monitors section.
        """
        monitors = dict(DEFAULT_MONITORS)
        monitors.update(section)
        if int(monitors["snapshot_count"]) < 1:
            raise ValueError("monitors.snapshot_count must be >= 1")
        self.__monitors = monitors

    @property
    def model_params(self) -> ModelParams:
        """
        Model parameters of a mu-lambda experiment. sigma is the mean of
        the initial condition.

        Returns
        ------------------------
        ModelParams
            lambda and sigma.
        """
        lam = self.__model.get("lam", PRESET_LAMBDA.get(self.__preset, 2.0))
        return ModelParams(lam=lam, sigma=self.initial.constant)

    @property
    def lambda_osw(self) -> float:
        """
        OSW family parameter (default -1, De Gregorio).

        Returns
        ------------------------
        float
            lambda of the OSW family.
        """
        return float(self.__model.get("lambda_osw", -1.0))

    @property
    def run_config(self) -> Union[RunConfig, OswRunConfig]:
        """
        Numerical settings for the family of the experiment.

        Returns
        ------------------------
        Union[RunConfig, OswRunConfig]
            Run settings with the family defaults filled in.
        """
        target = OswRunConfig if self.family == "osw" else RunConfig
        names = {field.name for field in fields(target)}
        ignored = sorted(set(self.__run) - names)
        if ignored:
            raise ValueError(
                f"run keys {ignored} do not apply to family {self.family}"
            )
        return target(**self.__run)

    @property
    def particle(self) -> Tuple[ForceFunction, ParticleState]:
        """
        Force and initial point of a particle experiment.

        Returns
        ------------------------
        Tuple[ForceFunction, ParticleState]
            Prescribed force and p0.
        """
        force_name = self.__particle.get("force", "constant")
        if force_name == "spiral":
            force = spiral_force(float(self.__particle.get("k", 1.0)))
        elif force_name == "constant":
            force = constant_force(float(self.__particle.get("value", 0.0)))
        else:
            raise ValueError(
                f"Unknown force {force_name!r}. Available: constant, spiral"
            )

        p0 = self.__particle.get("p0", [1.0, 0.0, 0.0, 1.0])
        if len(p0) != 4:
            raise ValueError("particle.p0 is [x, vx, y, vy]")
        return force, ParticleState(*[float(value) for value in p0])

    @property
    def particle_horizon(self) -> Tuple[float, float]:
        """
        t_end and dt of a particle experiment.

        Returns
        ------------------------
        Tuple[float, float]
            Horizon and step.
        """
        t_end = float(self.__run.get("t_end", 1.0))
        dt = float(self.__run.get("dt", 1e-3))
        if t_end <= 0 or dt <= 0:
            raise ValueError("dt and t_end must be positive")
        return t_end, dt

    def u0(self) -> np.ndarray:
        """
        Initial velocity on the configured grid.

        Returns
        ------------------------
        np.ndarray
            Samples of u0.
        """
        return self.initial.samples(self.run_config.n)

    def with_overrides(
        self,
        n: Optional[int] = None,
        dt: Optional[float] = None,
        t_end: Optional[float] = None,
        output_dir: Optional[PathLike] = None,
    ) -> "Experiment":
        """
        Copy with command-line overrides applied.

        Parameters
        ------------------------
        n: Optional[int]
            Grid size.
        dt: Optional[float]
            Time step.
        t_end: Optional[float]
            Horizon.
        output_dir: Optional[PathLike]
            Output directory.

        Returns
        ------------------------
        Experiment
            New experiment.
        """
        config = self.as_dict()
        for key, value in (("n", n), ("dt", dt), ("t_end", t_end)):
            if value is not None:
                config["run"][key] = value
        return Experiment(
            config,
            output_dir=output_dir or self.output_dir,
            verbose=self.verbose,
        )

    def sweep_experiments(self) -> Iterator[Tuple[str, "Experiment"]]:
        """
        Expands the sweep section into one experiment per value, each with
        its own output directory out/<key>=<value>.

        Yields
        ------------------------
        Tuple[str, Experiment]
            Run name and experiment.
        """
        if not self.sweep:
            yield "", self
            return

        key = self.sweep.get("key", "")
        values = self.sweep.get("values", [])
        if key.count(".") != 1 or not isinstance(values, list):
            raise ValueError("sweep needs key: <section>.<name> and values")
        section, name = key.split(".")
        if section not in SECTION_KEYS or section in ("family", "sweep"):
            raise ValueError(f"Cannot sweep {key!r}")

        for value in values:
            config = self.as_dict()
            config.pop("sweep", None)
            config.setdefault(section, {})[name] = value
            run_name = f"{key}={value}"
            yield run_name, Experiment(
                config,
                output_dir=self.output_dir.joinpath(run_name),
                verbose=self.verbose,
            )

    def as_dict(self) -> dict:
        """
        Nested copy of the experiment mapping.

        Returns
        ------------------------
        dict
            Sections as plain dictionaries.
        """
        config = {
            section: (dict(content) if isinstance(content, dict) else content)
            for section, content in self.input_config.items()
        }
        config.setdefault("run", {})
        return config

    def describe(self) -> dict:
        """
        Resolved settings written into report.json.

        Returns
        ------------------------
        dict
            Family, initial condition, model and run settings.
        """
        description = {
            "family": self.family,
            "initial": {
                "preset": self.__preset,
                "constant": self.initial.constant,
                "modes": [list(mode) for mode in self.initial.modes],
            },
        }
        if self.family == "mu-lambda":
            params = self.model_params
            description["model"] = {"lam": params.lam, "sigma": params.sigma}
        elif self.family == "osw":
            description["model"] = {"lambda_osw": self.lambda_osw}
        if self.family != "particle":
            description["run"] = asdict(self.run_config)
        else:
            description["particle"] = dict(self.__particle)
        return description


def preset_names() -> List[str]:
    """Names accepted by initial.preset."""
    return sorted(PRESET_LAMBDA)
