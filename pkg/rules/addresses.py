"""
Address and port expressions of the rule header.

Addresses: ``any``, IPv4 literal, CIDR, ``$NAME``, ``!expr`` and
``[expr, ...]`` lists. Ports: ``any``, ``N``, ``N:M`` ranges (either end
may be open), ``!expr`` and lists. Expressions are parsed once and resolved
against the variable table at compile time.
"""
from dataclasses import dataclass
from functools import lru_cache
from ipaddress import IPv4Network, ip_address, ip_network
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from dotenv import dotenv_values

from .exceptions import RuleSyntaxError, UnresolvedVariable

VariableTable = Mapping[str, Sequence[IPv4Network]]

VARIABLE_FILE_PREFIX = "var."


@lru_cache(maxsize=65536)
def _ip_to_int(ip: str) -> int:
    return int(ip_address(ip))


def _split_list(text: str) -> List[str]:
    """Split the inside of ``[...]`` on top-level commas."""
    items, depth, current = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            items.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    items.append("".join(current).strip())
    if depth != 0 or any(not item for item in items):
        raise RuleSyntaxError(f"malformed list '[{text}]'")
    return items


class AddressExpr:
    def resolve(self, variables: VariableTable) -> "AddressExpr":
        return self

    def matches(self, ip: str) -> bool:
        raise NotImplementedError

    def render(self) -> str:
        raise NotImplementedError

    def variables(self) -> Iterable[str]:
        return ()


@dataclass(frozen=True)
class AnyAddress(AddressExpr):
    def matches(self, ip: str) -> bool:
        return True

    def render(self) -> str:
        return "any"


@dataclass(frozen=True)
class NetworkSet(AddressExpr):
    networks: Tuple[IPv4Network, ...]

    def matches(self, ip: str) -> bool:
        value = _ip_to_int(ip)
        for net in self.networks:
            if value & int(net.netmask) == int(net.network_address):
                return True
        return False

    def render(self) -> str:
        parts = [
            str(net.network_address) if net.prefixlen == 32 else str(net)
            for net in self.networks
        ]
        return parts[0] if len(parts) == 1 else "[" + ",".join(parts) + "]"


@dataclass(frozen=True)
class VariableRef(AddressExpr):
    name: str
    bound: Optional[NetworkSet] = None

    def resolve(self, variables: VariableTable) -> AddressExpr:
        if self.name not in variables:
            raise UnresolvedVariable(self.name)
        return VariableRef(self.name, NetworkSet(tuple(variables[self.name])))

    def matches(self, ip: str) -> bool:
        if self.bound is None:
            raise UnresolvedVariable(self.name)
        return self.bound.matches(ip)

    def render(self) -> str:
        return f"${self.name}"

    def variables(self) -> Iterable[str]:
        return (self.name,)


@dataclass(frozen=True)
class Negated(AddressExpr):
    inner: AddressExpr

    def resolve(self, variables: VariableTable) -> AddressExpr:
        return Negated(self.inner.resolve(variables))

    def matches(self, ip: str) -> bool:
        return not self.inner.matches(ip)

    def render(self) -> str:
        return "!" + self.inner.render()

    def variables(self) -> Iterable[str]:
        return self.inner.variables()


@dataclass(frozen=True)
class AddressList(AddressExpr):
    items: Tuple[AddressExpr, ...]

    def resolve(self, variables: VariableTable) -> AddressExpr:
        return AddressList(tuple(item.resolve(variables) for item in self.items))

    def matches(self, ip: str) -> bool:
        positives = [item for item in self.items if not isinstance(item, Negated)]
        negatives = [item for item in self.items if isinstance(item, Negated)]
        if positives and not any(item.matches(ip) for item in positives):
            return False
        return all(item.matches(ip) for item in negatives)

    def render(self) -> str:
        return "[" + ",".join(item.render() for item in self.items) + "]"

    def variables(self) -> Iterable[str]:
        for item in self.items:
            yield from item.variables()


def parse_address(text: str) -> AddressExpr:
    text = text.strip()
    if not text:
        raise RuleSyntaxError("empty address expression")
    if text == "any":
        return AnyAddress()
    if text.startswith("!"):
        return Negated(parse_address(text[1:]))
    if text.startswith("[") and text.endswith("]"):
        return AddressList(tuple(parse_address(item) for item in _split_list(text[1:-1])))
    if text.startswith("$"):
        name = text[1:]
        if not name.replace("_", "").isalnum():
            raise RuleSyntaxError(f"bad variable name '{text}'")
        return VariableRef(name)
    try:
        network = ip_network(text, strict=False)
    except ValueError:
        raise RuleSyntaxError(f"bad address '{text}'")
    if network.version != 4:
        raise RuleSyntaxError(f"only IPv4 addresses are supported, got '{text}'")
    return NetworkSet((network,))


class PortExpr:
    def matches(self, port: int) -> bool:
        raise NotImplementedError

    def render(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class AnyPort(PortExpr):
    def matches(self, port: int) -> bool:
        return True

    def render(self) -> str:
        return "any"


@dataclass(frozen=True)
class PortRange(PortExpr):
    low: int
    high: int

    def matches(self, port: int) -> bool:
        return self.low <= port <= self.high

    def render(self) -> str:
        if self.low == self.high:
            return str(self.low)
        low = "" if self.low == 0 else str(self.low)
        high = "" if self.high == 65535 else str(self.high)
        return f"{low}:{high}"


@dataclass(frozen=True)
class NegatedPort(PortExpr):
    inner: PortExpr

    def matches(self, port: int) -> bool:
        return not self.inner.matches(port)

    def render(self) -> str:
        return "!" + self.inner.render()


@dataclass(frozen=True)
class PortList(PortExpr):
    items: Tuple[PortExpr, ...]

    def matches(self, port: int) -> bool:
        positives = [item for item in self.items if not isinstance(item, NegatedPort)]
        negatives = [item for item in self.items if isinstance(item, NegatedPort)]
        if positives and not any(item.matches(port) for item in positives):
            return False
        return all(item.matches(port) for item in negatives)

    def render(self) -> str:
        return "[" + ",".join(item.render() for item in self.items) + "]"


def _parse_port_number(text: str, default: int) -> int:
    if text == "":
        return default
    if not text.isdigit() or int(text) > 65535:
        raise RuleSyntaxError(f"bad port '{text}'")
    return int(text)


def parse_port(text: str) -> PortExpr:
    text = text.strip()
    if not text:
        raise RuleSyntaxError("empty port expression")
    if text == "any":
        return AnyPort()
    if text.startswith("!"):
        return NegatedPort(parse_port(text[1:]))
    if text.startswith("[") and text.endswith("]"):
        return PortList(tuple(parse_port(item) for item in _split_list(text[1:-1])))
    if text.startswith("$"):
        raise RuleSyntaxError(f"port variables are not supported: '{text}'")
    if ":" in text:
        low, _, high = text.partition(":")
        return PortRange(_parse_port_number(low, 0), _parse_port_number(high, 65535))
    port = _parse_port_number(text, 0)
    return PortRange(port, port)


def parse_variable_binding(text: str) -> Tuple[str, Tuple[IPv4Network, ...]]:
    """Parse ``NAME=CIDR[,CIDR...]``. A leading ``$`` on the name is allowed."""
    name, sep, value = text.partition("=")
    name = name.strip().lstrip("$")
    if not sep or not name:
        raise RuleSyntaxError(f"variable binding must look like NAME=CIDR[,CIDR...], got '{text}'")
    networks = []
    for part in value.replace("[", "").replace("]", "").split(","):
        part = part.strip()
        if not part:
            continue
        try:
            networks.append(ip_network(part, strict=False))
        except ValueError:
            raise RuleSyntaxError(f"bad address '{part}' in binding for ${name}")
    if not networks:
        raise RuleSyntaxError(f"binding for ${name} is empty")
    return name, tuple(networks)


def parse_variables(bindings: Iterable[str]) -> Dict[str, Tuple[IPv4Network, ...]]:
    table: Dict[str, Tuple[IPv4Network, ...]] = {}
    for binding in bindings:
        if binding.strip():
            name, networks = parse_variable_binding(binding)
            table[name] = networks
    return table


def render_variables(variables: VariableTable) -> Dict[str, str]:
    return {name: ",".join(str(net) for net in networks) for name, networks in sorted(variables.items())}


def load_variables(path: Union[str, Path]) -> Dict[str, Tuple[IPv4Network, ...]]:
    """
    Read variable bindings from a dotenv-style file. Keys may carry a
    ``var.`` prefix, so ``var.SRC=10.0.0.1,10.0.0.2`` binds ``$SRC``.

    Raises:
        RuleSyntaxError: the file is missing or a binding is malformed
    """
    if not Path(path).is_file():
        raise RuleSyntaxError(f"variable file not found: {path}")
    bindings = []
    for key, value in dotenv_values(path).items():
        name = key[len(VARIABLE_FILE_PREFIX):] if key.startswith(VARIABLE_FILE_PREFIX) else key
        bindings.append(f"{name}={value or ''}")
    return parse_variables(bindings)
