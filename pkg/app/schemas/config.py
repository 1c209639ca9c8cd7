import math
from enum import StrEnum
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import ParameterError


class GraphKind(StrEnum):
    KNN = "knn"
    MUTUAL = "mutual"


class ExperimentOptions(BaseModel):
    default_seeds: int = Field(default=10, ge=1)
    base_seed: int = Field(default=0, ge=0)
    fig3_left_grid_size: int = Field(default=32, ge=2)
    fig3_left_grid_span: float = Field(
        default=1.5,
        gt=0,
        description="Upper end of the fig3-left sweep, in units of F/sqrt(k).",
    )
    fig3_right_ns: tuple[int, ...] = Field(default=(250, 500, 1000, 2000, 4000))
    fig2_levels: tuple[float, ...] = Field(
        default=(0.9, 1.3),
        min_length=1,
        description=(
            "Diagnostic levels for fig2. The scale is fixed so that the known "
            "mixture mass above the first level equals fig2_first_level_mass."
        ),
    )
    fig2_first_level_mass: float = Field(default=0.144, gt=0, lt=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def ensure_grids(self) -> "ExperimentOptions":
        if not self.fig3_right_ns:
            raise ValueError("fig3_right_ns must not be empty")
        if any(n < 3 for n in self.fig3_right_ns):
            raise ValueError("fig3_right_ns entries must be >= 3")
        if self.fig2_levels[0] <= 0:
            raise ValueError("the first fig2 level must be positive")
        return self


EpsilonKind = Literal["fixed", "fsqrtk", "f4sqrtk", "theory"]


class EpsilonMode(BaseModel):
    """How the pruning parameter is chosen.

    - fixed: a literal value.
    - fsqrtk: F / sqrt(k).
    - f4sqrtk: F / (4 sqrt(k)).
    - theory: 3 * epsilon_k(F, k, n, delta).
    """

    kind: EpsilonKind
    value: float | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_value(self) -> "EpsilonMode":
        if self.kind == "fixed":
            if self.value is None or not math.isfinite(self.value):
                raise ParameterError("fixed epsilon mode needs a finite value.")
            if self.value < 0:
                raise ParameterError(
                    f"Pruning parameter must be >= 0, got {self.value}."
                )
        elif self.kind == "theory":
            if self.value is None or not (0 < self.value < 1):
                raise ParameterError(
                    f"theory epsilon mode needs 0 < delta < 1, got {self.value}."
                )
        return self

    @classmethod
    def fixed(cls, value: float) -> "EpsilonMode":
        return cls(kind="fixed", value=value)

    @classmethod
    def parse(cls, text: str) -> "EpsilonMode":
        """Parse `fixed:V`, `fsqrtk`, `f4sqrtk` or `theory:DELTA`."""
        head, _, tail = text.strip().partition(":")
        head = head.lower()
        if head in ("fsqrtk", "f4sqrtk"):
            if tail:
                raise ParameterError(f"Epsilon mode '{head}' takes no argument.")
            return cls(kind=head)
        if head in ("fixed", "theory"):
            try:
                value = float(tail)
            except ValueError as exc:
                raise ParameterError(
                    f"Epsilon mode '{head}' needs a numeric argument, got '{tail}'."
                ) from exc
            return cls(kind=head, value=value)
        raise ParameterError(
            f"Unknown epsilon mode '{text}'. Available: fixed:V, fsqrtk, f4sqrtk, theory:DELTA",
        )

    def label(self) -> str:
        if self.value is None:
            return self.kind
        return f"{self.kind}:{self.value!r}"


KRule = Literal["logn15", "n04"]


class RunConfig(BaseModel):
    """One end-to-end pipeline run."""

    input_path: Path | None = None
    skip_header: bool = False
    mixture_path: Path | None = None
    n: int | None = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)

    k: int | None = Field(default=None, ge=1)
    k_rule: KRule | None = None
    theta: float = 1.0
    graph: GraphKind = GraphKind.KNN
    epsilon: EpsilonMode = Field(default_factory=lambda: EpsilonMode.fixed(0.0))

    out: Path | None = None
    edges_out: Path | None = None
    leaves_out: Path | None = None

    model_config = ConfigDict(frozen=True)

    @field_validator("theta")
    @classmethod
    def check_theta(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 0):
            raise ParameterError(f"theta must be > 0, got {value}.")
        return value

    @model_validator(mode="after")
    def check_sources(self) -> "RunConfig":
        has_csv = self.input_path is not None
        has_mixture = self.mixture_path is not None
        if has_csv == has_mixture:
            raise ParameterError(
                "Provide exactly one input source: --input PATH or --mixture SPEC.json."
            )
        if has_mixture and self.n is None:
            raise ParameterError("--mixture requires --n.")
        if (self.k is None) == (self.k_rule is None):
            raise ParameterError("Provide exactly one of --k or --k-rule.")
        return self
