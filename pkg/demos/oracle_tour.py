"""Checks the solver against the closed-form references.

Run:  python demos/oracle_tour.py
"""
from __future__ import annotations

from bowtie.validation import run_validation

for check in run_validation():
    print(check.line())
