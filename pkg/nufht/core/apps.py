"""core 应用配置：承载数组文件读写、实验脚本与管理命令"""
from django.apps import AppConfig


class CoreConfig(AppConfig):
    """core 应用"""
    name = 'core'
    verbose_name = 'NUFHT 命令行与实验'
