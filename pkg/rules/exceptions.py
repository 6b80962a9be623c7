from typing import List, Optional, Tuple


class RuleError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class RuleSyntaxError(RuleError):
    def __init__(self, reason: str, position: Optional[int] = None):
        self.reason = reason
        self.position = position
        where = f" at column {position}" if position is not None else ""
        super().__init__(f"Syntax error{where}: {reason}")


class UnknownOption(RuleError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown rule option '{name}'")


class MissingSid(RuleError):
    def __init__(self, message: str = "Rule has no sid option"):
        super().__init__(message)


class DuplicateSid(RuleError):
    def __init__(self, gid: int, sid: int):
        self.gid = gid
        self.sid = sid
        super().__init__(f"Duplicate rule id {gid}:{sid}")


class UnresolvedVariable(RuleError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Variable ${name} is not defined")


class RuleSetCompileError(RuleError):
    def __init__(self, errors: List[Tuple[int, RuleError]]):
        self.errors = errors
        lines = "; ".join(f"line {line_no}: {error.message}" for line_no, error in errors)
        super().__init__(f"{len(errors)} rule error(s): {lines}")
