"""Configuration du toolkit (valeurs par défaut + variables d'environnement CA_*)."""

from __future__ import annotations

import os

from pydantic import BaseModel, ConfigDict, Field


_ENV_KEYS = {
    "jobs": "CA_JOBS",
    "log_level": "CA_LOG_LEVEL",
    "solution_cap": "CA_SOLUTION_CAP",
    "profile_bound": "CA_PROFILE_BOUND",
    "fm_variable_bound": "CA_FM_BOUND",
    "api_port": "CA_API_PORT",
}


class Settings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    solution_cap: int = Field(default=64, ge=1)
    profile_bound: int = Field(default=4096, ge=1)
    fm_variable_bound: int = Field(default=32, ge=1)
    tol_analytic: float = 1e-9
    tol_sampled: float = 1e-6
    tie_tol: float = 1e-9
    jobs: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    api_port: int = 5000

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        """
        Construit les réglages depuis l'environnement.

        Args:
            **overrides: valeurs explicites (ex: flags CLI), prioritaires

        Returns:
            Settings validés
        """
        values = {}
        for field, key in _ENV_KEYS.items():
            raw = os.environ.get(key)
            if raw not in (None, ""):
                values[field] = raw
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(values)


DEFAULT_SETTINGS = Settings()
