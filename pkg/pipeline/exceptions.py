class CaptureError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class BadMagic(CaptureError):
    def __init__(self, message: str = "Not a pcap capture file"):
        super().__init__(message)


class TruncatedRecord(CaptureError):
    def __init__(self, message: str = "Capture record is shorter than its header declares"):
        super().__init__(message)


class IoFailure(CaptureError):
    def __init__(self, message: str = "Capture file could not be written"):
        super().__init__(message)
