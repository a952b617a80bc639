"""
Solver settings.
Loads grid sizes and tolerances from config/solver.yaml with dataclass defaults
for anything the file leaves out.
"""

import os
from dataclasses import dataclass, asdict, replace
from typing import Optional

import yaml

THREADS_ENV = "CIRCLE_NPD_THREADS"

# (section, key) in solver.yaml -> SolverSettings field
_YAML_FIELDS = {
    ("grid", "n_theta"): "n_theta",
    ("grid", "n_alpha"): "n_alpha",
    ("grid", "branch_n_alpha"): "branch_n_alpha",
    ("grid", "critical_scan"): "critical_scan",
    ("tolerances", "root"): "root_tol",
    ("tolerances", "morse"): "morse_tol",
    ("tolerances", "refine"): "refine_tol",
    ("tolerances", "smooth_threshold"): "smooth_threshold",
    ("tolerances", "zero_distance"): "zero_threshold",
    ("tolerances", "zero_match"): "zero_match_tol",
    ("tolerances", "cluster_coarse"): "cluster_tol_coarse",
    ("tolerances", "cluster_fine"): "cluster_tol_fine",
    ("tolerances", "optimal_value"): "optimal_value_tol",
    ("tolerances", "certificate"): "certificate_tol",
    ("tolerances", "sign"): "sign_tol",
    ("tolerances", "degeneracy"): "degeneracy_tol",
    ("refinement", "max_iterations"): "refine_max_iter",
    ("spline", "lipschitz_safety"): "spline_lipschitz_safety",
}


@dataclass(frozen=True)
class SolverSettings:
    """Numeric options shared by every solver stage."""
    n_theta: int = 4096
    n_alpha: int = 4096
    branch_n_alpha: int = 4096
    critical_scan: int = 4096
    root_tol: float = 1e-12
    morse_tol: float = 1e-8
    refine_tol: float = 1e-10
    smooth_threshold: float = 1e-10
    zero_threshold: float = 1e-9
    zero_match_tol: float = 1e-7
    cluster_tol_coarse: float = 1e-4
    cluster_tol_fine: float = 1e-7
    optimal_value_tol: float = 1e-8
    certificate_tol: float = 1e-6
    sign_tol: float = 1e-9
    degeneracy_tol: float = 1e-8
    refine_max_iter: int = 200
    spline_lipschitz_safety: float = 1.05
    threads: int = 0

    def __post_init__(self):
        for name in ("n_theta", "n_alpha", "critical_scan"):
            if getattr(self, name) < 64:
                raise ValueError(f"{name} must be at least 64, got {getattr(self, name)}")
        if self.branch_n_alpha < 256:
            raise ValueError(f"branch_n_alpha must be at least 256, got {self.branch_n_alpha}")

    @classmethod
    def from_yaml(cls, config_path: Optional[str] = None) -> "SolverSettings":
        """
        Load settings from a YAML file.

        Args:
            config_path: Path to the YAML file (defaults to config/solver.yaml)

        Returns:
            SolverSettings with file values layered over the defaults
        """
        if config_path is None:
            config_path = os.path.join(
                os.path.dirname(__file__),
                "..", "..", "config", "solver.yaml"
            )

        with open(config_path, "r") as f:
            config = yaml.safe_load(f) or {}

        values = {}
        for (section, key), field_name in _YAML_FIELDS.items():
            section_data = config.get(section) or {}
            if key in section_data:
                values[field_name] = section_data[key]
        if "threads" in config:
            values["threads"] = int(config["threads"])

        return cls(**values)

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> "SolverSettings":
        """Load from YAML, then apply the thread cap from the environment."""
        settings = cls.from_yaml(config_path)
        env_threads = os.environ.get(THREADS_ENV)
        if env_threads:
            settings = settings.with_overrides(threads=int(env_threads))
        return settings

    def with_overrides(self, **overrides) -> "SolverSettings":
        """Copy with selected fields replaced; None values are ignored."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def worker_count(self) -> int:
        """Threads to use for grid scans (0 means one per core)."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1

    def to_dict(self) -> dict:
        return asdict(self)
