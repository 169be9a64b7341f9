import os
import sys

import pytest

# Ensure project root is on sys.path so package imports work
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from torsionzeta.verify_suites import hand_complex  # noqa: E402


@pytest.fixture
def hand():
    """dims (1, 1), d = [[2]], δ = [[3]]"""
    return hand_complex()
