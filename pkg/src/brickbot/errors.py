"""Exception types raised across the package."""


class ModelError(ValueError):
    """A model was built from inconsistent parts (undeclared variable, write conflict, ...)."""


class ParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceLimitError(RuntimeError):
    def __init__(self, cap, what="explicit states"):
        self.cap = cap
        super().__init__(f"{what} exceeded cap of {cap}")


class DivergenceError(RuntimeError):
    pass


class ScriptError(RuntimeError):
    def __init__(self, step, event, message="scripted event not enabled"):
        self.step = step
        self.event = event
        super().__init__(f"step {step}: {message}: {event}")
