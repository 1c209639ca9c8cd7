from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic_settings.sources import (
    PydanticBaseSettingsSource,
    PyprojectTomlConfigSettingsSource,
)

from app.schemas.config import ExperimentOptions, GraphKind


class Settings(BaseSettings):
    """
    Settings for the application.
    """

    model_config = SettingsConfigDict(
        env_prefix="KNNTREE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        pyproject_toml_depth=1,
        pyproject_toml_table_header=("tool", "knntree", "settings"),
    )

    log_level: str = Field(default="INFO")
    log_folder: Path = Field(default=Path("logs"))

    knn_backend: Literal["brute", "kdtree"] = Field(
        default="brute",
        description="Exact k-NN backend. Both produce bit-identical radii.",
    )
    distance_chunk_size: int = Field(
        default=128,
        ge=1,
        description="Rows per block when computing all-pairs distances.",
    )
    oracle_max_vertices: int = Field(
        default=500,
        ge=1,
        description="Largest graph the brute-force validation oracles accept.",
    )
    max_workers: int = Field(
        default=4,
        ge=1,
        description="Thread pool size for per-seed experiment runs.",
    )

    default_theta: float = Field(default=1.0, gt=0)
    default_delta: float = Field(default=0.05, gt=0, lt=1)
    default_graph_kind: GraphKind = Field(default=GraphKind.KNN)

    experiment_options: ExperimentOptions = Field(
        default_factory=ExperimentOptions,
        description="Grids and seed counts for the experiment harness.",
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            PyprojectTomlConfigSettingsSource(settings_cls),
            file_secret_settings,
        )


@lru_cache
def get_settings() -> Settings:
    return Settings()
