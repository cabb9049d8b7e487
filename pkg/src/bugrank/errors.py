"""Exception hierarchy shared across the package.

``UserDataError`` marks problems in user-supplied files or configuration
(the CLI exits 2 on these); everything else under ``BugrankError`` is an
internal failure (exit 1).
"""


class BugrankError(Exception):
    pass


class UserDataError(BugrankError):
    pass


class LengthMismatch(BugrankError):
    pass


class ChecksumFailure(UserDataError):
    pass
