class RulegenError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class NoDnp3Traffic(RulegenError):
    def __init__(self, message: str = "Capture contains no DNP3 frames"):
        super().__init__(message)
