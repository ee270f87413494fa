"""
Shared pytest configuration
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))


def pytest_configure(config):
    """Register custom markers"""
    config.addinivalue_line(
        "markers", "slow: full-size statistical runs (deselect with '-m \"not slow\"')"
    )
