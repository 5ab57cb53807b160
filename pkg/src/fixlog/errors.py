class EgglogError(Exception):
    """Base class for every error raised by the engine."""


class ParseError(EgglogError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class EgglogTypeError(EgglogError):
    pass


class EngineError(EgglogError):
    """Runtime failure: missing default, merge conflict, panic, unextractable class."""


class Panic(EngineError):
    pass


class CheckFailure(EgglogError):
    def __init__(self, fact_text):
        self.fact = fact_text
        super().__init__(f"check failed: {fact_text}")
