class DeliveryStatus:
    PENDING = "pending"
    APPLIED = "applied"
    STALE = "stale"
    COMPILE_FAILED = "compile_failed"
    CHECKSUM_MISMATCH = "checksum_mismatch"

    # no further offers once a sensor has answered with one of these
    FINAL = (APPLIED, STALE, COMPILE_FAILED, CHECKSUM_MISMATCH)

    @classmethod
    def choices(cls) -> list:
        return [
            (cls.PENDING, "Pending"),
            (cls.APPLIED, "Applied"),
            (cls.STALE, "Stale"),
            (cls.COMPILE_FAILED, "Compile failed"),
            (cls.CHECKSUM_MISMATCH, "Checksum mismatch"),
        ]


class QueryLimits:
    DEFAULT = 1000
    MAX = 10000


class PresenceKeys:
    PREFIX = "dnp3ids:sensor:"
    INDEX = "dnp3ids:sensors"


API_TOKEN_SUBJECT = "operator"
