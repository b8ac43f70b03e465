from enum import Enum
from typing import Dict, List, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationInfo,
    field_validator,
    model_validator,
)


class WaveModel(str, Enum):
    QUADRATIC = "quadratic"
    CUBIC = "cubic"
    PEAKON = "peakon"


class Normalization(str, Enum):
    PHYSICAL = "physical"
    CANONICAL = "canonical"


class Command(str, Enum):
    WAVE = "wave"
    SPECTRUM = "spectrum"
    INDEX = "index"
    PENCIL = "pencil"
    PEAKON = "peakon"
    CERTIFY = "certify"
    VERIFY = "verify"


ELLIPTIC_COMMANDS = (Command.SPECTRUM, Command.INDEX, Command.PENCIL, Command.CERTIFY)


class Verdict(str, Enum):
    HYPOTHESES_FAIL = "HypothesesFail"
    CONCLUSION_HOLDS = "ConclusionHolds"
    CONCLUSION_FAILS = "ConclusionFails"


class RecordStatus(str, Enum):
    OK = "ok"
    WARN = "warn"
    FAIL = "fail"


class Tolerances(BaseModel):
    """
    Numerical tolerances. Every field can be overridden from a config file.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    hill_kernel: float = Field(1e-6, gt=0, description="Zero-mode threshold relative to the operator norm.")
    positivity_kernel: float = Field(1e-8, gt=0, description="Kernel threshold in the positivity checks.")
    kernel_orthogonality: float = Field(1e-8, gt=0, description="Allowed kernel component of a right-hand side.")
    cross_validation: float = Field(1e-6, gt=0)
    small_modulus_cross_validation: float = Field(1e-4, gt=0)
    small_modulus: float = Field(0.05, gt=0, lt=1)
    wronskian_floor: float = Field(1e-12, gt=0)
    imaginary_axis: float = Field(1e-6, gt=0)
    kernel_cluster: float = Field(1e-5, gt=0)
    infinite_eigenvalue: float = Field(1e-10, gt=0)
    pairing: float = Field(1e-8, gt=0)
    constraint: float = Field(1e-6, gt=0)
    conclusion: float = Field(1e-10, gt=0)
    peakon_residual: float = Field(1e-8, gt=0)


class RunConfig(BaseModel):
    """
    A validated command-line run.

    Either `k` or the range (`k_min`, `k_max`, `steps`) selects the moduli.
    """

    model_config = ConfigDict(extra="forbid")

    command: Command
    model: WaveModel = WaveModel.QUADRATIC
    k: Optional[float] = None
    k_min: Optional[float] = None
    k_max: Optional[float] = None
    steps: int = Field(2, ge=2)
    n: int = 128
    n_quad: int = 256
    shift_re: float = 0.3
    shift_im: float = 0.0
    L_domain: float = Field(3.0, gt=0)
    x_max: float = Field(15.0, ge=15.0)
    n_peakon: int = Field(1024, ge=512)
    seed: int = 0
    trials: int = Field(1000, ge=1)
    out: Optional[str] = None
    svg: Optional[str] = None
    json_out: Optional[str] = None
    output_dir: str = "verify-output"
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("k", "k_min", "k_max", mode="before")
    @classmethod
    def validate_modulus(cls, v, info: ValidationInfo):
        """Moduli must lie strictly inside (0, 1)."""
        if v is None:
            return v
        v = float(v)
        if not 0.0 < v < 1.0:
            raise ValueError(f"{info.field_name} must lie in (0, 1), got {v}.")
        return v

    @field_validator("n", "n_quad", "n_peakon", mode="before")
    @classmethod
    def validate_even(cls, v, info: ValidationInfo):
        """Grid sizes must be even and at least 16."""
        v = int(v)
        if v < 16 or v % 2:
            raise ValueError(f"{info.field_name} must be even and >= 16, got {v}.")
        return v

    @model_validator(mode="after")
    def validate_range(self):
        if self.k_min is not None and self.k_max is not None and self.k_min >= self.k_max:
            raise ValueError("k_min must be smaller than k_max.")
        if (self.k_min is None) != (self.k_max is None):
            raise ValueError("k_min and k_max must be given together.")
        return self

    @model_validator(mode="after")
    def validate_model_for_command(self):
        if self.model == WaveModel.PEAKON and self.command in ELLIPTIC_COMMANDS:
            raise ValueError(
                f"Command {self.command.value} needs model quadratic or cubic, not peakon."
            )
        return self

    @property
    def shift(self) -> complex:
        return complex(self.shift_re, self.shift_im)

    def moduli(self, default: Optional[List[float]] = None) -> List[float]:
        """The moduli selected by the config, ascending."""
        if self.k_min is not None:
            step = (self.k_max - self.k_min) / (self.steps - 1)
            return [self.k_min + i * step for i in range(self.steps)]
        if self.k is not None:
            return [self.k]
        return list(default or [0.5])


class SweepRecord(BaseModel):
    """One row of an index or margin sweep. Fail rows are kept."""

    k: float
    values: Dict[str, float] = Field(default_factory=dict)
    status: RecordStatus = RecordStatus.OK
    message: str = ""

    @field_validator("k", mode="before")
    @classmethod
    def validate_k(cls, v):
        v = float(v)
        if not 0.0 < v < 1.0:
            raise ValueError(f"Sweep modulus must lie in (0, 1), got {v}.")
        return v
