class BenchError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class RuleSetMismatch(BenchError):
    def __init__(self, message: str = "Orderings do not contain the same rules"):
        super().__init__(message)
