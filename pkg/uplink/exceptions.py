from typing import Optional


class UplinkError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class HandshakeMismatch(UplinkError):
    def __init__(self, expected: int, received: Optional[int]):
        self.expected = expected
        self.received = received
        super().__init__(f"Protocol version mismatch: expected {expected}, got {received}")


class MalformedMessage(UplinkError):
    def __init__(self, reason: str):
        super().__init__(f"Malformed message: {reason}")


class AuthenticationFailed(UplinkError):
    def __init__(self, message: str = "Sensor token rejected"):
        super().__init__(message)


class ConnectionClosed(UplinkError):
    def __init__(self, message: str = "Peer closed the connection"):
        super().__init__(message)


class SensorConfigError(UplinkError):
    pass
