"""Exception types shared across the package.

The CLI maps InputError to exit code 1 and NumericError to exit code 2.
"""

from __future__ import annotations


class InputError(ValueError):
    """Rejected input: bad shapes, invalid parameters, malformed config."""


class NumericError(RuntimeError):
    """Numeric failure (non-convergence, divergence).

    Carries an optional ``residual`` diagnostic.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(NumericError):
    """An iterative run blew past the divergence guard.

    ``trajectory`` holds the partial trajectory recorded up to the abort.
    """

    def __init__(self, message, trajectory=None, residual=None):
        super().__init__(message, residual=residual)
        self.trajectory = trajectory
