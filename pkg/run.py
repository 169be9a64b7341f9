#!/usr/bin/env python3
"""
Direct runner
This file allows running: python run.py verify --suite all from the project root
"""

import os
import sys

# Ensure project root is on sys.path so package imports work
project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

if __name__ == "__main__":
    from torsionzeta.main import main

    raise SystemExit(main())
