"""
Errors raised by the consensus lab.

Library code raises these; workflow nodes catch them, log them and hand the
message to the router, which turns them into exit codes.
"""
from typing import Optional


class ConsensusLabError(Exception):
    """Base class for every domain error"""

    exit_code = 1


# ==================== INPUT / USAGE ====================

class AdversaryValidationError(ConsensusLabError):
    exit_code = 2


class TooManyCrashes(AdversaryValidationError):
    pass


class DuplicateCrash(AdversaryValidationError):
    pass


class ValueOutOfRange(AdversaryValidationError):
    pass


class SelfDelivery(AdversaryValidationError):
    pass


class InvalidProcess(AdversaryValidationError):
    pass


class ParseError(ConsensusLabError):
    """Malformed adversary or table file"""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)


class InvalidProtocolSpec(ConsensusLabError):
    exit_code = 2


class InvalidTaskSpec(ConsensusLabError):
    exit_code = 2


class HorizonTooShort(ConsensusLabError):
    exit_code = 2


class DomainTooLarge(ConsensusLabError):
    exit_code = 2


# ==================== MODEL / KNOWLEDGE ====================

class InactiveProcess(ConsensusLabError):
    pass


class NonexistentNode(ConsensusLabError):
    pass


class NonBinaryTask(ConsensusLabError):
    exit_code = 2


class MismatchedViews(ConsensusLabError):
    pass


# ==================== ORACLE ====================

class CapacityTooSmall(ConsensusLabError):
    pass


class CrashBudgetExceeded(ConsensusLabError):
    pass


class HiddenVariantError(ConsensusLabError):
    """The constructed variant does not reproduce the owner's view"""


# ==================== SEARCH ====================

class SearchBudgetExceeded(ConsensusLabError):
    pass


class SearchAuditError(ConsensusLabError):
    """A witness or certificate failed its independent re-check"""


# ==================== CODEC ====================

class BudgetViolation(ConsensusLabError):
    pass


class ReconstructionMismatch(ConsensusLabError):
    pass
