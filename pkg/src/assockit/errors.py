"""Exception taxonomy shared across the package."""


class AssocKitError(Exception):
    """Base class for all package-specific errors."""


class MixedValueVariant(AssocKitError):
    """Numeric and text values mixed where one homogeneous variant is required."""


class IncompatibleCollisionRule(AssocKitError):
    """Collision rule not applicable to the value variant (e.g. SUM on text)."""


class SelectorError(AssocKitError):
    """Base class for selector parsing and matching errors."""


class EmptySelector(SelectorError):
    pass


class MalformedRange(SelectorError):
    pass


class BadPositional(SelectorError):
    pass


class SelfLoop(AssocKitError):
    """Self-loop rejected during strict edge-list normalization."""


class ReservedKeyCollision(AssocKitError):
    """A vertex key collides with a reserved column name or rendering."""


class SchemaMismatch(AssocKitError):
    """Graph bundle schema does not match what the operation requires."""


class ScaleTooLarge(AssocKitError):
    """Requested generator scale exceeds the supported bound."""


class StoreError(AssocKitError):
    """Base class for key-value store failures."""


class InvalidName(StoreError):
    pass


class CorruptManifest(StoreError):
    pass


class IoFailure(StoreError):
    """Wraps OS-level I/O failures and detected on-disk corruption."""


class CorruptRun(IoFailure):
    """Run file failed its length or checksum validation."""


class SinkCollision(StoreError):
    """Multiply sink table collides with an operand or holds prior data."""


class WriterConflict(StoreError):
    """A second writer tried to acquire a table that is already locked."""


class MissingTable(StoreError):
    """A named table does not exist in the store."""


class InvalidCell(AssocKitError):
    """Benchmark cell pairs an algorithm with a schema it cannot run on."""
