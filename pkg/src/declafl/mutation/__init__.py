"""Mutation operators, equivalence filtering and killing-test generation."""

from declafl.mutation.equivalence import Comparator, Distinction, is_equivalent, relax_for
from declafl.mutation.higher_order import second_order_mutants
from declafl.mutation.killing import GeneratedTest, KillingSuite, generate_killing_tests, valuation_body
from declafl.mutation.operators import (OPERATORS, Mutant, applicable_ops, apply_op, compose,
                                        first_order_mutants)

__all__ = [
    "Comparator", "Distinction", "is_equivalent", "relax_for", "second_order_mutants",
    "GeneratedTest", "KillingSuite", "generate_killing_tests", "valuation_body", "OPERATORS",
    "Mutant", "applicable_ops", "apply_op", "compose", "first_order_mutants",
]
