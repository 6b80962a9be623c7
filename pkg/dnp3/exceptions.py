class Dnp3Error(Exception):
    def __init__(self, message: str, reason: str = "malformed"):
        self.message = message
        self.reason = reason
        super().__init__(message)


class BadStartBytes(Dnp3Error):
    def __init__(self, message: str = "Frame does not start with 0x05 0x64"):
        super().__init__(message, reason="bad_start")


class Truncated(Dnp3Error):
    def __init__(self, message: str = "Frame is shorter than its length field implies"):
        super().__init__(message, reason="truncated")


class LengthOutOfRange(Dnp3Error):
    def __init__(self, message: str = "Link length field is below 5"):
        super().__init__(message, reason="length_out_of_range")


class PayloadTooLarge(Dnp3Error):
    def __init__(self, message: str = "User data exceeds 250 octets"):
        super().__init__(message, reason="payload_too_large")
