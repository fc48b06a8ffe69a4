"""Exception types shared across the package.

Every error carries an ``exit_code`` used by the command line front end:
3 for problems with the input data or configuration, 4 for numeric
degeneracy or instability discovered during a computation.
"""


class SplitsetError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ParseError(SplitsetError):
    """Malformed input file (CSV rows, table files)."""

    exit_code = 3


class ConfigError(SplitsetError):
    """Malformed scenario or configuration object."""

    exit_code = 3


class DegenerateSample(SplitsetError):
    """Sample admits no valid split (all x tied, or too few points)."""

    exit_code = 3


class EmptySide(SplitsetError):
    """A proposed split leaves one side of the sample empty."""

    exit_code = 3


class TooFewPoints(SplitsetError):
    """Not enough observations for the requested smoother."""

    exit_code = 3


class DomainError(SplitsetError):
    """Value outside the domain of the requested link."""

    exit_code = 3


class BlockTooSmall(SplitsetError):
    """Subsample block size too small to fit a split."""

    exit_code = 3


class BlockTooLarge(SplitsetError):
    """Subsample block size must be smaller than the sample."""

    exit_code = 3


class LevelOutOfRange(SplitsetError):
    """Requested probability level outside the tabulated range."""

    exit_code = 3


class DegenerateLevels(SplitsetError):
    """Operation undefined when the two side levels coincide."""

    exit_code = 4


class NonpositiveEstimate(SplitsetError):
    """Density estimate vanished or the bandwidth was degenerate."""

    exit_code = 4


class SingularDesign(SplitsetError):
    """Weighted least squares design is rank deficient."""

    exit_code = 4


class Unstable(SplitsetError):
    """Limit constants do not support the requested procedure (b <= 0)."""

    exit_code = 4


class DegenerateRatio(SplitsetError):
    """Relative risk interval degenerates to a point on the log scale."""

    exit_code = 4
