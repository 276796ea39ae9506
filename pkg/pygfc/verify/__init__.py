from .suite import Suite, VerifyContext, REFERENCE_EIGS, SWEEP
from . import checks

def default_suite() -> Suite:
    """All acceptance checks in their default order"""
    return Suite(*checks.DEFAULT_CHECKS)
