"""Exception types shared across the package.

Library code raises these instead of bare ValueError/RuntimeError so the
command-line front end can map failures onto its exit-code contract
(2 usage, 3 violated property, 4 resource cap).
"""


class DomainError(ValueError):
    """An input lies outside the documented domain of an operation."""


class ResourceError(RuntimeError):
    """A configured resource cap (term count, bit budget, horizon) was exceeded."""


class PropertyViolation(RuntimeError):
    """A verification-style computation found its claimed inequality violated."""
