import math
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator


class MixtureComponent(BaseModel):
    weight: float = Field(gt=0)
    mean: tuple[float, ...]
    variance: float = Field(gt=0, description="Isotropic variance sigma^2.")

    model_config = ConfigDict(frozen=True)


class MixtureSpec(BaseModel):
    """Isotropic Gaussian mixture sum_c w_c N(mu_c, sigma_c^2 I_d)."""

    d: int = Field(ge=1)
    components: tuple[MixtureComponent, ...] = Field(min_length=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_components(self) -> "MixtureSpec":
        total = math.fsum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Mixture weights must sum to 1, got {total}.")
        for idx, component in enumerate(self.components):
            if len(component.mean) != self.d:
                raise ValueError(
                    f"Component {idx} mean has dimension {len(component.mean)}, expected {self.d}."
                )
        return self

    @classmethod
    def from_json_file(cls, path: Path) -> "MixtureSpec":
        return cls.model_validate_json(path.read_bytes())
