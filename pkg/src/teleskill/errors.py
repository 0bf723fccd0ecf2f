"""Exception types shared across the package."""


class TeleskillError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateQuaternionError(TeleskillError):
    """Quaternion norm too small to normalize."""


class DivergenceError(TeleskillError):
    """A numerical integration produced non-finite values."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class TooFewSamplesError(TeleskillError):
    """Recording too short for the smoothing differentiator."""


class DegenerateSkillError(TeleskillError):
    """Skill displacement too small for the requested generalization."""


class SkillFormatError(TeleskillError):
    """Skill file missing fields or malformed."""


class UnknownSkillError(TeleskillError):
    """Requested skill name not present in the store."""


class ModeError(TeleskillError):
    """Robot command not valid in the current mode."""


class TwistScriptError(TeleskillError):
    """Twist script file could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
