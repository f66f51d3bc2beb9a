"""Acceptance suite: one test per criterion, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` or through the CLI as
``chs-lab acceptance``; both execute the same criterion functions at the same
tolerances.
"""

import pytest

from chslab import acceptance


def _run(criterion):
    result = criterion()
    print(f"\n{'PASS' if result.passed else 'FAIL'}  {result.name}  "
          f"[{result.duration_s:.1f}s]  {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_criterion_haar_moment_oracle():
    _run(acceptance.haar_moment_oracle)


def test_criterion_type_split_identity():
    _run(acceptance.type_split_identity)


def test_criterion_permutation_average():
    _run(acceptance.permutation_average)


def test_criterion_hybrid_equivalences():
    _run(acceptance.hybrid_equivalences)


def test_criterion_security_trend():
    _run(acceptance.security_trend)


def test_criterion_multi_key_chain():
    _run(acceptance.multi_key_chain)


def test_criterion_rank_attack():
    _run(acceptance.rank_attack)


def test_criterion_commitment_binding():
    _run(acceptance.commitment_binding)


def test_criterion_hiding_crosscheck():
    _run(acceptance.hiding_crosscheck)


def test_criterion_pgm_bound():
    _run(acceptance.pgm_bound)


def test_criterion_determinism():
    _run(acceptance.determinism)
