"""Exception hierarchy shared by every subpackage.

Each class also derives from the closest builtin, so callers that only know about
`ValueError` or `RuntimeError` still catch them.
"""


class SyntaxFusionError(Exception):
    """Base class for all errors raised by this package."""


# --- tensor ---
class ShapeMismatchError(SyntaxFusionError, ValueError):
    """Operands of a tensor operation have incompatible shapes."""


class MaskedRowError(SyntaxFusionError, ValueError):
    """A softmax row has no unmasked entry (isolated node, empty neighborhood)."""


class NumericalOverflowError(SyntaxFusionError, ArithmeticError):
    """A forward operation produced NaN or Inf from finite inputs."""


class TapeError(SyntaxFusionError, RuntimeError):
    """Misuse of the differentiation tape (backward twice, backward before forward)."""


class NondeterminismError(SyntaxFusionError, RuntimeError):
    """Two forward passes over identical inputs disagreed."""


# --- treebank ---
class TreeError(SyntaxFusionError, ValueError):
    """Malformed dependency tree or CoNLL-U block."""

    def __init__(
        self, message: str, *, block_index: int | None = None, line: int | None = None
    ) -> None:
        """Attach the CoNLL-U block index and line number when known."""
        location: list[str] = []
        if block_index is not None:
            location.append(f"block {block_index}")
        if line is not None:
            location.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.block_index = block_index
        self.line = line


class DatasetError(SyntaxFusionError, ValueError):
    """Malformed dataset record."""


class VocabError(SyntaxFusionError, ValueError):
    """Malformed vocabulary file."""


# --- harness / cli ---
class ConfigError(SyntaxFusionError, ValueError):
    """Invalid configuration value."""


class CompatibilityError(SyntaxFusionError, ValueError):
    """Model head, checkpoint and dataset do not fit together."""


class DivergenceError(SyntaxFusionError, RuntimeError):
    """Training produced a NaN loss or gradient."""


class CheckpointError(SyntaxFusionError, ValueError):
    """Unreadable checkpoint file."""


class CheckpointVersionError(CheckpointError):
    """Bad magic bytes or unsupported format version."""


class CheckpointTruncatedError(CheckpointError):
    """The file ended before all declared content was read."""


class CheckpointShapeError(CheckpointError):
    """A stored tensor does not match the shape implied by the stored config."""
