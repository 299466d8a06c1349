from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SolverKind(str, Enum):
    PICARD = "picard"
    ALTERNATING = "alternating"
    R_INTERPOLATIVE = "r_interpolative"
    REICH = "reich"
    WEAK = "weak"


class CommandName(str, Enum):
    VERIFY_AXIOMS = "verify-axioms"
    CERTIFY = "certify"
    SOLVE = "solve"
    FIXED_POINTS = "fixed-points"
    DEMO = "demo"


class OutputFormat(str, Enum):
    JSONL = "jsonl"
    CSV = "csv"


class ComparisonMode(str, Enum):
    STRICT = "strict"
    SYMMETRIZED = "symmetrized"


class ReichVariant(str, Enum):
    AS_PROOF = "proof"
    AS_DISPLAYED = "displayed"


class ConditionKind(str, Enum):
    INTERPOLATIVE_KANNAN = "interpolative_kannan"
    TAU_BETA_ETA_KANNAN = "tau_beta_eta_kannan"
    KANNAN_PAIR = "kannan_pair"
    R_INTERPOLATIVE = "r_interpolative"
    REICH_TYPE = "reich_type"
    WEAK_REICH = "weak_reich"
    CLASSICAL_KANNAN = "classical_kannan"
    CLASSICAL_REICH = "classical_reich"


class StopRule(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    step_norm_epsilon: float = Field(1e-10, gt=0)
    max_iterations: int = Field(100_000, ge=1)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: CommandName
    scenario: str | None = None
    parameters: dict[str, Any] = {}
    solver: SolverKind | None = None
    stop: StopRule = StopRule()
    seeds: list[int] = [0]
    samples: int = Field(1000, ge=1)
    starts: int = Field(20, ge=2)
    output_path: Path | None = None
    format: OutputFormat = OutputFormat.JSONL
    mode: ComparisonMode | None = None
    variant: ReichVariant | None = None
    formal: bool | None = None
    start: float | str | None = None

    @model_validator(mode="after")
    def check_command_fields(self):
        if self.command != CommandName.DEMO and not self.scenario:
            raise ValueError(f"command '{self.command.value}' requires a scenario")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        return self


# Catalog parameter schemas, one per entry


class CatalogParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AffineScalarParams(CatalogParams):
    a: float = 0.5
    b: float = 1.0

    @field_validator("a")
    @classmethod
    def slope_is_contractive(cls, value: float) -> float:
        if not abs(value) < 1:
            raise ValueError("affine slope must satisfy |a| < 1")
        return value


class MatrixScaledAffineParams(AffineScalarParams):
    A: list[list[float]] = [[2.0, 1.0], [1.0, 2.0]]


class AffinePairParams(CatalogParams):
    a1: float = 1 / 3
    b1: float = 2.0
    a2: float = 1 / 4
    b2: float = 9 / 4

    @field_validator("a1", "a2")
    @classmethod
    def slopes_are_contractive(cls, value: float) -> float:
        if not abs(value) < 1:
            raise ValueError("affine slopes must satisfy |a| < 1")
        return value


class FiniteRandomParams(CatalogParams):
    seed: int = 0


class PlaneParams(CatalogParams):
    c: float = Field(0.5, gt=0)


class CorollaryLinearParams(CatalogParams):
    k: float = Field(0.5, gt=0, lt=1)
