"""Exception types raised across the package."""


class DisDictError(Exception):
    """Base class for all package errors."""


class MissingFile(DisDictError):
    pass


class MalformedLine(DisDictError):
    def __init__(self, path, lineno, message=""):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}".rstrip(": "))


class DanglingPointer(DisDictError):
    pass


class UnknownSynset(DisDictError, KeyError):
    pass


class UnknownPairing(DisDictError, KeyError):
    pass


class ZeroMarginal(DisDictError, ZeroDivisionError):
    pass


class IoFailure(DisDictError, OSError):
    pass


class MalformedToken(DisDictError, ValueError):
    pass


class EmptyModel(DisDictError, ValueError):
    pass


class DimensionMismatch(DisDictError, ValueError):
    pass


class UnreadableEmbeddingFile(DisDictError, ValueError):
    pass


class Divergence(DisDictError, FloatingPointError):
    def __init__(self, step, loss):
        self.step = step
        self.loss = loss
        super().__init__(f"loss became non-finite ({loss}) at step {step}")


class NoCandidates(DisDictError, LookupError):
    pass


class MalformedXml(DisDictError, ValueError):
    pass


class MissingGoldKey(DisDictError, KeyError):
    pass


class UnknownSenseKey(DisDictError, KeyError):
    pass


class ConfigError(DisDictError, ValueError):
    pass


class StageError(DisDictError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
