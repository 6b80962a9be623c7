import time

import jwt

from .exceptions import AuthenticationFailed

TOKEN_ALGORITHM = "HS256"


def issue_token(subject: str, secret: str, ttl: int = 0) -> str:
    """Signed token for ``subject``; ``ttl`` seconds of validity, 0 for no expiry."""
    now = int(time.time())
    claims = {"sub": subject, "iat": now}
    if ttl:
        claims["exp"] = now + ttl
    return jwt.encode(claims, secret, algorithm=TOKEN_ALGORITHM)


def verify_token(token: str, secret: str, subject: str = "") -> str:
    """
    Check signature and expiry, and the subject when one is given.
    Returns the token's subject.

    Raises:
        AuthenticationFailed: bad signature, expired or wrong subject
    """
    try:
        claims = jwt.decode(token, secret, algorithms=[TOKEN_ALGORITHM])
    except jwt.InvalidTokenError as e:
        raise AuthenticationFailed(f"Invalid token: {e}")
    if subject and claims.get("sub") != subject:
        raise AuthenticationFailed(f"Token issued for {claims.get('sub')!r}, not {subject!r}")
    return claims.get("sub", "")
