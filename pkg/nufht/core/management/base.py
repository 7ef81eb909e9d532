"""
管理命令基类
统一把服务层异常映射为退出码：2 = 用法 / 校验错误，3 = 数值不收敛
"""

import logging
from typing import Any, List, Tuple

from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from services.errors import ConvergenceError, GridSizeError

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def one_line(error: Exception) -> str:
    """单行诊断信息"""
    if isinstance(error, ValidationError) and error.errors():
        first = error.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ())) or error.title
        return f"{where}: {first['msg']}"
    return str(error).splitlines()[0] if str(error) else type(error).__name__


def parse_pair(text: str, name: str) -> Tuple[int, int]:
    """'2,0' -> (2, 0)"""
    try:
        first, second = (int(part) for part in text.split(','))
    except ValueError:
        raise CommandError(f"{name} must look like 'j,l', got '{text}'", returncode=EXIT_USAGE) from None
    return first, second


class NufhtCommand(BaseCommand):
    """所有 NUFHT 命令的基类：子类实现 run()"""

    requires_system_checks: List[str] = []

    def run(self, **options: Any) -> None:
        raise NotImplementedError

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            self.run(**options)
        except CommandError:
            raise
        except (ConvergenceError, GridSizeError) as e:
            logger.error("%s failed: %s", self.__module__.rsplit('.', 1)[-1], e)
            raise CommandError(str(e), returncode=EXIT_NUMERICAL) from e
        except (ValueError, OSError) as e:
            logger.error("%s rejected its input: %s", self.__module__.rsplit('.', 1)[-1], e)
            raise CommandError(one_line(e), returncode=EXIT_USAGE) from e
