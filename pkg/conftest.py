"""
pytest 公共配置
把 Django 项目目录加入路径并初始化设置；slow 标记的测试默认跳过，设置 NUFHT_RUN_SLOW=1 运行
"""

import os
import sys

import django
import numpy as np
import pytest

# 添加项目路径
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'nufht'))

# 设置Django环境
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'nufht.settings')
django.setup()


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: large acceptance runs, enabled with NUFHT_RUN_SLOW=1')


def pytest_collection_modifyitems(config, items):
    if os.environ.get('NUFHT_RUN_SLOW', '').lower() in ('1', 'true', 'yes'):
        return
    skip = pytest.mark.skip(reason='set NUFHT_RUN_SLOW=1 to run')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


def rel_err(approx, exact):
    scale = np.linalg.norm(exact)
    diff = np.linalg.norm(np.asarray(approx) - np.asarray(exact))
    return diff / scale if scale > 0 else diff
