"""The 17 change labels: Clean plus the 16 single-statement defect patterns."""
from __future__ import annotations

import enum


class DefectLabel(enum.IntEnum):
    CLEAN = 0
    CHANGE_IDENTIFIER_USED = 1
    CHANGE_NUMERIC_LITERAL = 2
    CHANGE_BOOLEAN_LITERAL = 3
    CHANGE_MODIFIER = 4
    WRONG_FUNCTION_NAME = 5
    SAME_FUNCTION_MORE_ARGS = 6
    SAME_FUNCTION_LESS_ARGS = 7
    SAME_FUNCTION_CHANGE_CALLER = 8
    SAME_FUNCTION_SWAP_ARGS = 9
    CHANGE_BINARY_OPERATOR = 10
    CHANGE_UNARY_OPERATOR = 11
    CHANGE_OPERAND = 12
    MORE_SPECIFIC_IF = 13
    LESS_SPECIFIC_IF = 14
    MISSING_THROWS_EXCEPTION = 15
    DELETE_THROWS_EXCEPTION = 16

    @classmethod
    def parse(cls, name: str | int) -> "DefectLabel":
        if isinstance(name, int):
            return cls(name)
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown label {name!r}") from None

    @property
    def is_defective(self) -> bool:
        return self is not DefectLabel.CLEAN


NUM_LABELS = len(DefectLabel)
DEFECT_LABELS = tuple(lbl for lbl in DefectLabel if lbl is not DefectLabel.CLEAN)
