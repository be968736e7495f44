import shutil
from pathlib import Path

import pytest

from app.core.config import Budget, settings
from app.services import form_service
from app.models.form import FormKind, FormType

DATA_DIR = Path(__file__).resolve().parent.parent / "app" / "data"


@pytest.fixture
def budget() -> Budget:
    """Небольшой бюджет для быстрых тестов"""
    return Budget(max_orbit=200_000, max_points=200_000, max_primitive=20_000, threads=1)


@pytest.fixture
def data_dir(tmp_path, monkeypatch) -> Path:
    """Копия каталога данных, в которую можно записывать файлы образующих"""
    target = tmp_path / "data"
    shutil.copytree(DATA_DIR, target)
    monkeypatch.setattr(settings, "FORMED_DATA_DIR", target)
    return target


@pytest.fixture
def sp4_2():
    return form_service.standard_space(FormKind.ALTERNATING, 4, 2)


@pytest.fixture
def o6plus_2():
    return form_service.standard_space(FormKind.QUADRATIC, 6, 2, FormType.PLUS)


@pytest.fixture
def u3_2():
    return form_service.standard_space(FormKind.HERMITIAN, 3, 2)
