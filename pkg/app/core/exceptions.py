"""Иерархия ошибок: каждая ошибка знает свой код выхода CLI и HTTP-статус"""


class FormedSpaceError(Exception):
    """Базовая ошибка вычислений"""
    exit_code = 1
    status_code = 400

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidInputError(FormedSpaceError):
    """Недопустимые параметры"""


class NotIsometryError(InvalidInputError):
    """Элемент не является изометрией формы"""


class DataFileError(FormedSpaceError):
    """Отсутствует или повреждён файл данных"""
    status_code = 500


class MismatchError(FormedSpaceError):
    """Формула и перечисление разошлись"""
    exit_code = 2
    status_code = 409


class IntransitiveError(FormedSpaceError):
    """Группа не транзитивна"""
    exit_code = 3
    status_code = 200


class BudgetExceededError(FormedSpaceError):
    """Превышен бюджет вычислений"""
    exit_code = 4
    status_code = 413
