"""Resource budgets for exact enumeration and dense linear algebra.

Every operation that could blow up (dense matrices, type enumeration, subset
pair enumeration) checks a budget first and raises ``BudgetExceeded`` with the
offending dimension spelled out, instead of thrashing memory.
"""

from __future__ import annotations

from dataclasses import dataclass


class BudgetExceeded(RuntimeError):
    """Raised when a computation would exceed a configured budget."""


@dataclass(frozen=True)
class Budgets:
    """Safe defaults for a laptop-scale run; override through the runner config."""

    max_dense_dim: int = 4096
    max_type_count: int = 100_000
    max_subset_pairs: int = 1_000_000

    def check_dense_dim(self, dim: int, what: str) -> None:
        if dim > self.max_dense_dim:
            raise BudgetExceeded(
                f"{what}: dense dimension {dim} exceeds budget {self.max_dense_dim}"
            )

    def check_type_count(self, count: int, what: str) -> None:
        if count > self.max_type_count:
            raise BudgetExceeded(
                f"{what}: {count} types exceed enumeration budget {self.max_type_count}"
            )

    def check_subset_pairs(self, count: int, what: str) -> None:
        if count > self.max_subset_pairs:
            raise BudgetExceeded(
                f"{what}: {count} subset pairs exceed budget {self.max_subset_pairs}"
            )


DEFAULT_BUDGETS = Budgets()
