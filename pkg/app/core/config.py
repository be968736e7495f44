from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Настройки вычислений"""
    # Каталог с таблицами, поисками и файлами образующих
    FORMED_DATA_DIR: Path = Path(__file__).resolve().parent.parent / "data"

    # Бюджеты
    MAX_ORBIT: int = 10_000_000
    MAX_POINTS: int = 1_000_000
    MAX_PRIMITIVE: int = 100_000
    MAX_CANDIDATES: int = 2_000_000
    MAX_FIELD_ORDER: int = 2**20

    THREADS: int = 4
    LOG_LEVEL: str = "INFO"
    SEARCH_TRIALS: int = 20_000
    SEED: int = 20240917

    class Config:
        env_file = ".env"


settings = Settings()


@dataclass(frozen=True)
class Budget:
    """Бюджеты одного запуска (флаги CLI поверх настроек)"""
    max_orbit: int = settings.MAX_ORBIT
    max_points: int = settings.MAX_POINTS
    max_primitive: int = settings.MAX_PRIMITIVE
    threads: int = settings.THREADS

    @classmethod
    def from_overrides(
        cls,
        max_orbit: Optional[int] = None,
        max_points: Optional[int] = None,
        threads: Optional[int] = None,
    ) -> "Budget":
        return cls(
            max_orbit=max_orbit or settings.MAX_ORBIT,
            max_points=max_points or settings.MAX_POINTS,
            max_primitive=settings.MAX_PRIMITIVE,
            threads=threads or settings.THREADS,
        )
