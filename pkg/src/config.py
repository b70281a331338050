"""Runtime settings for the two-copy toolkit"""
from functools import lru_cache
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv
load_dotenv()

# dense Choi matrices reach 4**n x 4**n, so 6 qubits is the hard ceiling
QUBIT_CAP = 6


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="TWOCOPY_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    max_qubits: int = Field(default=QUBIT_CAP, ge=1)
    psd_tol: float = 1e-9
    hermitian_tol: float = 1e-10
    report_schema_version: str = "1"

    @field_validator("max_qubits")
    @classmethod
    def cap_max_qubits(cls, value: int) -> int:
        """The cap may be lowered but never raised"""
        if value > QUBIT_CAP:
            raise ValueError(f"max_qubits cannot exceed {QUBIT_CAP}")
        return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
