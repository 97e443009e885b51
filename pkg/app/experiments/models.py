"""
Pydantic models for run configuration and the run manifest.
"""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.core.params import ModelParams, SensitivitySpec, ShadowParams


class ModelSection(BaseModel):
    """model.* keys; phi.p0..p3 are the sensitivity coefficients."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    a1: float = 3.0
    a2: float = 2.0
    b1: float = 2.0
    b2: float = 1.0
    c1: float = 1.0
    c2: float = 2.0
    D1: float = 1.0
    D2: float = 1.0
    chi: float = 0.0
    tau: float = 1.0
    L: float = math.pi
    p0: float = Field(default=1.0, alias="phi.p0")
    p1: float = Field(default=0.0, alias="phi.p1")
    p2: float = Field(default=0.0, alias="phi.p2")
    p3: float = Field(default=0.0, alias="phi.p3")

    def sensitivity(self) -> SensitivitySpec:
        return SensitivitySpec(p0=self.p0, p1=self.p1, p2=self.p2, p3=self.p3)

    def to_params(self) -> ModelParams:
        return ModelParams(
            a1=self.a1, a2=self.a2, b1=self.b1, b2=self.b2, c1=self.c1, c2=self.c2,
            D1=self.D1, D2=self.D2, chi=self.chi, tau=self.tau, L=self.L,
            sensitivity=self.sensitivity(),
        )

    def shadow_params(self, r: float, eps: float) -> ShadowParams:
        return ShadowParams(
            a1=self.a1, a2=self.a2, b1=self.b1, b2=self.b2, c1=self.c1, c2=self.c2,
            r=r, eps=eps, L=self.L, sensitivity=self.sensitivity(),
        )


class GridSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = 512


class TimeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt: float = 1e-3
    t_end: float = 200.0
    snapshot_every: float = 1.0


class SimulateSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    init: Literal["perturbed", "equilibrium", "random"] = "perturbed"
    mode: int = Field(default=0, description="Perturbed mode; 0 selects k0")
    amplitude: float = 1e-4
    modes: List[int] = Field(default_factory=lambda: [1, 2, 3])


class StabilitySection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k_max: int = 64


class ContinueSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = 1
    chi_min: Optional[float] = None
    chi_max: Optional[float] = None
    ds: float = 0.02
    s0: float = 0.01
    max_points: int = 500
    n: int = 128
    tau_stability: float = 1.0
    profile_every: int = 0


class ShadowSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r: float = 6.0
    eps: float = 0.5
    n_mode: int = 1
    eps_min: Optional[float] = None
    eps_max: Optional[float] = None
    ds: float = 0.02
    s0: float = 0.01
    max_points: int = 300
    n: int = 128


class LayerSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r: float = 2.0
    eps: float = 1e-4
    v_bar2: Optional[float] = None
    n: int = 2001
    nz: int = 2001


class LimitSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    r: float = 2.0
    D1_list: List[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4])
    eps: float = 0.1
    n: int = 96
    workers: int = 1
    relax_time: float = 0.0


SECTION_TYPES = {
    "model": ModelSection,
    "grid": GridSection,
    "time": TimeSection,
    "simulate": SimulateSection,
    "stability": StabilitySection,
    "continue": ContinueSection,
    "shadow": ShadowSection,
    "layer": LayerSection,
    "limit": LimitSection,
}


class RunConfig(BaseModel):
    """Fully resolved run configuration."""

    model_config = ConfigDict(populate_by_name=True)

    model: ModelSection = Field(default_factory=ModelSection)
    grid: GridSection = Field(default_factory=GridSection)
    time: TimeSection = Field(default_factory=TimeSection)
    simulate: SimulateSection = Field(default_factory=SimulateSection)
    stability: StabilitySection = Field(default_factory=StabilitySection)
    continuation: ContinueSection = Field(default_factory=ContinueSection, alias="continue")
    shadow: ShadowSection = Field(default_factory=ShadowSection)
    layer: LayerSection = Field(default_factory=LayerSection)
    limit: LimitSection = Field(default_factory=LimitSection)
    seed: int = 0
    warnings: List[str] = Field(default_factory=list, exclude=True)

    def params(self) -> ModelParams:
        return self.model.to_params()

    def echo(self) -> Dict[str, Any]:
        """Resolved config as a plain mapping keyed like the config file."""
        return self.model_dump(mode="json", by_alias=True)


class ManifestFile(BaseModel):
    path: str
    rows: int


class RunManifest(BaseModel):
    """Written last; the only file of a failed run."""

    run_id: str
    version: str
    command: str
    status: Literal["ok", "error"]
    exit_code: int
    seed: Optional[int] = None
    config_fingerprint: Optional[str] = None
    config: Optional[Dict[str, Any]] = None
    wall_time_s: float = 0.0
    files: List[ManifestFile] = Field(default_factory=list)
    invariants: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    summary: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    error: Optional[Dict[str, Any]] = None


def split_key(key: str) -> Tuple[str, str]:
    """'model.phi.p0' -> ('model', 'phi.p0')."""
    section, _, rest = key.partition(".")
    return section, rest
