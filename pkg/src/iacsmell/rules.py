"""Nine security-smell detectors evaluated over the IR during traversal.

Detection is deliberately over-approximate: rules accept every syntactic
candidate (high recall) and leave precision to the pruning stage. All word
lists live in RuleConfig and can be replaced wholesale from a config file.

The default keyword lists are a reconstruction: the predicate names are
well established but their exact word lists are not published anywhere, so
the catalog below is our own and is expected to be tuned per deployment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from enum import Enum
from importlib import resources
from pathlib import Path

from .ir import (
    AtomicUnit,
    Attribute,
    Comment,
    ConditionBlock,
    IRNode,
    Project,
    Technology,
    UnitBlock,
    ValueKind,
    Value,
    Variable,
    iterate_block,
)


class ConfigError(Exception):
    """The rule configuration file is malformed."""


class SmellType(Enum):
    ADMIN_BY_DEFAULT = "AdminByDefault"
    EMPTY_PASSWORD = "EmptyPassword"
    HARD_CODED_SECRET = "HardCodedSecret"
    MISSING_DEFAULT_CASE = "MissingDefaultCase"
    NO_INTEGRITY_CHECK = "NoIntegrityCheck"
    SUSPICIOUS_COMMENT = "SuspiciousComment"
    INVALID_IP_BINDING = "InvalidIpBinding"
    HTTP_WITHOUT_TLS = "HttpWithoutTls"
    WEAK_CRYPTO = "WeakCrypto"

    @property
    def cwe_ids(self) -> tuple[int, ...]:
        return _CWE_MAP[self]

    @classmethod
    def from_name(cls, name: str) -> "SmellType":
        for smell in cls:
            if smell.value == name:
                return smell
        raise ValueError(f"unknown smell type: {name!r}")


_CWE_MAP = {
    SmellType.ADMIN_BY_DEFAULT: (250,),
    SmellType.EMPTY_PASSWORD: (258,),
    SmellType.HARD_CODED_SECRET: (259, 798),
    SmellType.MISSING_DEFAULT_CASE: (478,),
    SmellType.NO_INTEGRITY_CHECK: (353,),
    SmellType.SUSPICIOUS_COMMENT: (546,),
    SmellType.INVALID_IP_BINDING: (284,),
    SmellType.HTTP_WITHOUT_TLS: (319,),
    SmellType.WEAK_CRYPTO: (326, 327),
}

# The four rule types with the weakest precision; only these go through the
# learned pruner, the other five are reported as-is.
LOW_PRECISION_SMELLS = frozenset(
    {
        SmellType.HARD_CODED_SECRET,
        SmellType.SUSPICIOUS_COMMENT,
        SmellType.HTTP_WITHOUT_TLS,
        SmellType.WEAK_CRYPTO,
    }
)


@dataclass(frozen=True)
class RuleConfig:
    """Keyword heuristics driving the detectors; all entries lowercase."""

    user_keywords: tuple[str, ...]
    secret_keywords: tuple[str, ...]
    admin_keywords: tuple[str, ...]
    suspicious_words: tuple[str, ...]
    weak_crypto_names: tuple[str, ...]
    download_extensions: tuple[str, ...]
    checksum_attribute_names: tuple[str, ...]
    invalid_bind_addresses: tuple[str, ...]
    exempt_localhost_http: bool = True

    @property
    def password_keywords(self) -> tuple[str, ...]:
        """Password-like subset of secret_keywords (empty-password rule)."""
        return tuple(k for k in self.secret_keywords if "pass" in k or "pwd" in k)

    @classmethod
    def from_text(cls, text: str) -> "RuleConfig":
        list_fields = {f.name for f in fields(cls) if f.name != "exempt_localhost_http"}
        values: dict[str, object] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, rest = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            if key == "exempt_localhost_http":
                values[key] = rest.strip().lower() in ("true", "1", "yes", "on")
            elif key in list_fields:
                entries = tuple(e.strip().lower() for e in rest.split(",") if e.strip())
                if not entries:
                    raise ConfigError(f"line {lineno}: empty list for {key!r}")
                values[key] = entries
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        missing = list_fields - set(values)
        if missing:
            raise ConfigError(f"missing keys: {', '.join(sorted(missing))}")
        return cls(**values)  # type: ignore[arg-type]

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> "RuleConfig":
        text = resources.files("iacsmell.data").joinpath("default_rules.cfg").read_text("utf-8")
        return cls.from_text(text)

    def with_extra(self, **extra: list[str]) -> "RuleConfig":
        """New config with entries appended to the named lists."""
        updates = {}
        for key, additions in extra.items():
            current = getattr(self, key)
            updates[key] = current + tuple(a.lower() for a in additions)
        return replace(self, **updates)


@dataclass(frozen=True)
class Finding:
    """One detected smell occurrence. Rule-stage confidence is always 1.0;
    only the pruner re-scores."""

    file_path: str
    line: int
    smell: SmellType
    rationale: str
    technology: Technology
    confidence: float = 1.0

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.file_path, self.line, self.smell.value)


# ---------------------------------------------------------------------------
# value helpers

_QUOTE_RE = re.compile(r"^(['\"])(.*)\1$", re.DOTALL)
# interpolation forms across the three dialects
_INTERP_SEGMENT_RE = re.compile(r"\$\{[^}]*\}|\{\{[^}]*\}\}|#\{[^}]*\}|\$[A-Za-z_:][A-Za-z0-9_:]*")
_QUOTED_LITERAL_RE = re.compile(r"'([^']+)'|\"([^\"]+)\"")
_URL_HOST_RE = re.compile(r"http://([^/\s'\";,]+)", re.IGNORECASE)


def strip_quotes(raw: str) -> str:
    m = _QUOTE_RE.match(raw.strip())
    return m.group(2) if m else raw.strip()


def literal_text(value: Value) -> str:
    """The hard-coded portion of a value: quote-stripped text with
    interpolation segments removed, empty when the value is pure reference."""
    if value.kind in (ValueKind.INTEGER, ValueKind.BOOLEAN):
        return value.raw_text
    if value.kind == ValueKind.NULL:
        return ""
    if value.kind == ValueKind.STRING:
        return _INTERP_SEGMENT_RE.sub("", strip_quotes(value.raw_text)).strip()
    # Reference: literal fallback arguments stay visible in raw_text
    parts = ["".join(m.groups("")) for m in _QUOTED_LITERAL_RE.finditer(value.raw_text)]
    return " ".join(p for p in parts if p).strip()


def _token_match(keyword: str, text: str) -> bool:
    """Whole-token match treating [a-z0-9] runs as token characters."""
    pattern = rf"(?<![a-z0-9]){re.escape(keyword)}(?![a-z0-9])"
    return re.search(pattern, text.lower()) is not None


def _first_substring(keywords: tuple[str, ...], text: str) -> str | None:
    lowered = text.lower()
    for kw in keywords:
        if kw in lowered:
            return kw
    return None


def _first_token(keywords: tuple[str, ...], text: str) -> str | None:
    for kw in keywords:
        if _token_match(kw, text):
            return kw
    return None


def _named_value(node: IRNode) -> tuple[str, Value] | None:
    if isinstance(node, (Variable, Attribute)):
        return node.name, node.value
    return None


# ---------------------------------------------------------------------------
# the nine detectors

_GROUP_ATTRIBUTES = ("groups", "group", "gid", "roles")
_FETCHER_UNIT_TYPES = ("get_url", "remote_file")


def check_admin_by_default(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    findings = []
    named = _named_value(node)
    if named is not None:
        name, value = named
        if _first_substring(config.user_keywords, name):
            kw = _first_substring(config.admin_keywords, value.raw_text)
            if kw:
                findings.append(
                    Finding(
                        file_path=node.location.file_path,
                        line=node.location.line,
                        smell=SmellType.ADMIN_BY_DEFAULT,
                        rationale=f"admin keyword '{kw}' assigned to user-like name '{name}'",
                        technology=technology,
                    )
                )
    elif isinstance(node, AtomicUnit) and _first_substring(config.user_keywords, node.unit_type):
        for attr in node.attributes:
            if attr.name.lower() in _GROUP_ATTRIBUTES:
                kw = _first_substring(config.admin_keywords, attr.value.raw_text)
                if kw:
                    findings.append(
                        Finding(
                            file_path=attr.location.file_path,
                            line=attr.location.line,
                            smell=SmellType.ADMIN_BY_DEFAULT,
                            rationale=f"admin group '{kw}' granted by {node.unit_type} resource",
                            technology=technology,
                        )
                    )
    return findings


def check_empty_password(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    named = _named_value(node)
    if named is None:
        return []
    name, value = named
    kw = _first_substring(config.password_keywords, name)
    if (
        kw
        and value.kind == ValueKind.STRING
        and not value.has_variable
        and strip_quotes(value.raw_text) == ""
    ):
        return [
            Finding(
                file_path=node.location.file_path,
                line=node.location.line,
                smell=SmellType.EMPTY_PASSWORD,
                rationale=f"password-like name '{kw}' assigned a zero-length string",
                technology=technology,
            )
        ]
    return []


def check_hard_coded_secret(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    named = _named_value(node)
    if named is None:
        return []
    name, value = named
    kw = _first_substring(config.user_keywords + config.secret_keywords, name)
    if kw and literal_text(value):
        return [
            Finding(
                file_path=node.location.file_path,
                line=node.location.line,
                smell=SmellType.HARD_CODED_SECRET,
                rationale=f"sensitive name '{kw}' bound to a hard-coded literal",
                technology=technology,
            )
        ]
    return []


def check_missing_default_case(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    if isinstance(node, ConditionBlock) and not node.has_default_branch:
        return [
            Finding(
                file_path=node.location.file_path,
                line=node.location.line,
                smell=SmellType.MISSING_DEFAULT_CASE,
                rationale="case construct has no catch-all branch",
                technology=technology,
            )
        ]
    return []


def check_no_integrity_check(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    if not isinstance(node, AtomicUnit):
        return []
    if any(attr.name.lower() in config.checksum_attribute_names for attr in node.attributes):
        return []
    if node.unit_type.lower() in _FETCHER_UNIT_TYPES:
        return [
            Finding(
                file_path=node.location.file_path,
                line=node.location.line,
                smell=SmellType.NO_INTEGRITY_CHECK,
                rationale=f"fetcher '{node.unit_type}' has no checksum attribute",
                technology=technology,
            )
        ]
    for attr in node.attributes:
        ext = _download_extension(attr.value.raw_text, config)
        if ext:
            return [
                Finding(
                    file_path=attr.location.file_path,
                    line=attr.location.line,
                    smell=SmellType.NO_INTEGRITY_CHECK,
                    rationale=f"download of '{ext}' artifact has no checksum attribute",
                    technology=technology,
                )
            ]
    return []


def _download_extension(raw: str, config: RuleConfig) -> str | None:
    for url in re.findall(r"(?:https?|ftp)://[^\s'\"]+", raw, flags=re.IGNORECASE):
        path = url.split("?", 1)[0].rstrip("/").lower()
        for ext in config.download_extensions:
            if path.endswith(ext):
                return ext
    return None


def check_suspicious_comment(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    if not isinstance(node, Comment):
        return []
    kw = _first_token(config.suspicious_words, node.text)
    if kw:
        return [
            Finding(
                file_path=node.location.file_path,
                line=node.location.line,
                smell=SmellType.SUSPICIOUS_COMMENT,
                rationale=f"comment contains suspicious word '{kw}'",
                technology=technology,
            )
        ]
    return []


def _address_match(addr: str, text: str) -> bool:
    # letters, digits, and dots extend an address token: '10.0.0.0' is not
    # '0.0.0.0', '::1' and Ruby/Puppet '::Scope' references are not '::';
    # a trailing ':port' still counts
    pattern = rf"(?<![A-Za-z0-9.]){re.escape(addr)}(?![A-Za-z0-9.])"
    return re.search(pattern, text) is not None


def check_invalid_ip_binding(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    named = _named_value(node)
    if named is None:
        return []
    _, value = named
    for addr in config.invalid_bind_addresses:
        if _address_match(addr, value.raw_text):
            return [
                Finding(
                    file_path=node.location.file_path,
                    line=node.location.line,
                    smell=SmellType.INVALID_IP_BINDING,
                    rationale=f"binds to unrestricted address '{addr}'",
                    technology=technology,
                )
            ]
    return []


def check_http_without_tls(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    named = _named_value(node)
    if named is None:
        return []
    _, value = named
    raw = value.raw_text
    if "http://" not in raw.lower():
        return []
    if config.exempt_localhost_http:
        hosts = [h.split(":")[0].lower() for h in _URL_HOST_RE.findall(raw)]
        if hosts and all(h in ("localhost", "127.0.0.1") for h in hosts):
            return []
    return [
        Finding(
            file_path=node.location.file_path,
            line=node.location.line,
            smell=SmellType.HTTP_WITHOUT_TLS,
            rationale="transfers over 'http://' without TLS",
            technology=technology,
        )
    ]


def check_weak_crypto(node: IRNode, config: RuleConfig, technology: Technology) -> list[Finding]:
    named = _named_value(node)
    if named is None:
        return []
    name, value = named
    kw = _first_token(config.weak_crypto_names, value.raw_text) or _first_token(
        config.weak_crypto_names, name
    )
    if kw:
        return [
            Finding(
                file_path=node.location.file_path,
                line=node.location.line,
                smell=SmellType.WEAK_CRYPTO,
                rationale=f"uses weak cryptographic algorithm '{kw}'",
                technology=technology,
            )
        ]
    return []


_ALL_CHECKS = (
    check_admin_by_default,
    check_empty_password,
    check_hard_coded_secret,
    check_missing_default_case,
    check_no_integrity_check,
    check_suspicious_comment,
    check_invalid_ip_binding,
    check_http_without_tls,
    check_weak_crypto,
)


def detect_in_block(block: UnitBlock, config: RuleConfig) -> list[Finding]:
    findings: list[Finding] = []
    for node in iterate_block(block):
        for check in _ALL_CHECKS:
            findings.extend(check(node, config, block.technology))
    return findings


def detect(project: Project, config: RuleConfig) -> list[Finding]:
    """Run every detector over every node of the project.

    The result is sorted by (file, line, smell name) and deduplicated on
    that triple; one line can still carry several distinct smells.
    """
    findings: list[Finding] = []
    for module in project.modules:
        for block in module.blocks:
            findings.extend(detect_in_block(block, config))
    for block in project.blocks:
        findings.extend(detect_in_block(block, config))
    findings.sort(key=lambda f: f.key)
    deduped: list[Finding] = []
    seen: set[tuple[str, int, str]] = set()
    for finding in findings:
        if finding.key not in seen:
            seen.add(finding.key)
            deduped.append(finding)
    return deduped
