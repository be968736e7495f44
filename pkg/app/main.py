from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import logging

from app.api.v1 import public
from app.core.config import settings
from app.core.exceptions import DataFileError
from app.services import catalog_service, field_service, search_service

# Настройка логирования
logging.basicConfig(
    level=settings.LOG_LEVEL
)

logger = logging.getLogger(__name__)


async def check_data_files():
    """Проверка каталога, описаний поисков и таблицы многочленов Конвея"""
    try:
        logger.info(f"[INIT] Checking data files under {settings.FORMED_DATA_DIR}")
        entries = catalog_service.load_catalog()
        searches = search_service.load_searches()
        field_service.get_field(2, 1)
        logger.info(f"[INIT] {len(entries)} catalog rows, {len(searches)} searches available")
    except DataFileError as e:
        logger.error(f"[INIT] Data files are unusable: {e.detail}")
        raise


app = FastAPI(
    title="Formed Spaces",
    version="0.1.0",
)


@app.on_event("startup")
async def startup_event():
    """Действия при запуске приложения"""
    logger.info("[INIT] Starting application initialization")
    await check_data_files()
    logger.info("[INIT] Application initialization completed")

# Настройка CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Подключаем роутеры
app.include_router(public.router, prefix="/api/v1/public", tags=["public"])
