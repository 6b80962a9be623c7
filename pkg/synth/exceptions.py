class SynthError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class IndexNotDnp3(SynthError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"Record {index} does not carry a DNP3 frame")


class UnknownScenario(SynthError):
    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"Unknown scenario '{kind}'")
