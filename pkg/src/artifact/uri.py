"""Endpoint URIs: `<scheme>:<path>[?k=v&k=v...]` with percent-escaped values."""
from __future__ import annotations

from dataclasses import dataclass, field
from urllib.parse import unquote

from .errors import EmptySchemeError, MalformedQueryError, MissingSchemeError


@dataclass
class EndpointUri:
    scheme: str
    path: str
    params: dict[str, str] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, EndpointUri):
            return NotImplemented
        return (
            self.scheme == other.scheme
            and self.path == other.path
            and list(self.params.items()) == list(other.params.items())
        )

    def param(self, key: str, default: str | None = None) -> str | None:
        return self.params.get(key, default)

    def __str__(self) -> str:
        return format_endpoint_uri(self)


def parse_endpoint_uri(text: str) -> EndpointUri:
    """Split at the first ':' into scheme/rest, the rest at the first '?' into
    path/query; query pairs keep their order and values are percent-decoded."""
    if ":" not in text:
        raise MissingSchemeError(f"no ':' in {text!r}")
    scheme, rest = text.split(":", 1)
    if not scheme:
        raise EmptySchemeError(text)
    path, sep, query = rest.partition("?")
    params: dict[str, str] = {}
    if sep and query:
        for pair in query.split("&"):
            if "=" not in pair:
                raise MalformedQueryError(f"query pair {pair!r} has no '='")
            key, value = pair.split("=", 1)
            if not key:
                raise MalformedQueryError(f"query pair {pair!r} has an empty key")
            params[key] = unquote(value)
    return EndpointUri(scheme=scheme.lower(), path=path, params=params)


def _quote_param_value(value: str) -> str:
    return value.replace("%", "%25").replace("&", "%26").replace("=", "%3D")


def format_endpoint_uri(uri: EndpointUri) -> str:
    """Canonical text form; parse(format(u)) == u for every valid uri."""
    if not uri.scheme or uri.scheme != uri.scheme.lower():
        raise ValueError(f"scheme must be non-empty lowercase: {uri.scheme!r}")
    if ":" in uri.scheme or "?" in uri.scheme:
        raise ValueError(f"scheme contains reserved characters: {uri.scheme!r}")
    if "?" in uri.path:
        raise ValueError(f"path may not contain '?': {uri.path!r}")
    out = f"{uri.scheme}:{uri.path}"
    if uri.params:
        for key in uri.params:
            if not key or any(c in key for c in "=&?%"):
                raise ValueError(f"invalid parameter key: {key!r}")
        out += "?" + "&".join(
            f"{k}={_quote_param_value(v)}" for k, v in uri.params.items()
        )
    return out
