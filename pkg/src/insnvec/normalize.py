"""Instruction parsing and out-of-vocabulary normalization.

Disassembled instructions are reduced to a closed token alphabet before
embedding: numeric constants collapse to 0, string literals to <STR>,
function names to FOO, and remaining symbols to <TAG>. Registers and
memory-expression structure survive. A canonical token is the
architecture tag, a colon, the opcode, and the comma-joined operands.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .errors import EmptyInstruction, UnbalancedBrackets

STR_SENTINEL = "<STR>"
FUNC_SENTINEL = "FOO"
TAG_SENTINEL = "<TAG>"
NUM_SENTINEL = "0"

_ARCH_RE = re.compile(r"^[a-z0-9_]+$")
# decimal or 0x hex, optional # prefix and sign
_IMMEDIATE_RE = re.compile(r"^#?[+-]?(0x[0-9a-fA-F]+|[0-9]+)$")
_IDENTIFIER_RE = re.compile(r"^[A-Za-z_.$@][A-Za-z0-9_.$@]*$")
# pieces of a memory expression: single structural chars vs leaf runs
_SUBTOKEN_RE = re.compile(r"[\[\]{}()+\-*:,]|[^\[\]{}()+\-*:,]+")

_OPENERS = {"[": "]", "{": "}"}
_CLOSERS = {"]": "[", "}": "{"}
_QUOTES = ("'", '"')


class OperandKind(Enum):
    REGISTER = "register"
    IMMEDIATE = "immediate"
    MEMORY = "memory-expression"
    STRING = "string-literal"
    CALL_TARGET = "call-target-symbol"
    SYMBOL = "other-symbol"


@dataclass(frozen=True)
class OperandToken:
    kind: OperandKind
    text: str


@dataclass(frozen=True)
class ParsedInstruction:
    opcode: str
    operands: tuple[str, ...]


@dataclass(frozen=True)
class NormalizedInstruction:
    opcode: str
    operands: tuple[str, ...]


@dataclass(frozen=True)
class ArchSpec:
    """Per-architecture lexicons used by classification and the baseline."""

    name: str
    registers: frozenset[str]
    call_opcodes: frozenset[str]
    branch_opcodes: frozenset[str]


def _read_lexicon(name: str) -> frozenset[str]:
    base = resources.files(__package__) / "lexicons" / name
    try:
        text = base.read_text(encoding="utf-8")
    except FileNotFoundError:
        return frozenset()
    entries = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            entries.add(line)
    return frozenset(entries)


_SPEC_CACHE: dict[str, ArchSpec] = {}


def check_arch(arch: str) -> str:
    """Validate an architecture tag: nonempty, lowercase [a-z0-9_]+."""
    if not isinstance(arch, str) or not _ARCH_RE.match(arch):
        raise ValueError(f"invalid architecture tag: {arch!r}")
    return arch


def arch_spec(arch: str) -> ArchSpec:
    """Lexicons for `arch`. Tags without shipped lexicons get empty ones:
    any tag is accepted, unknown identifiers then normalize to <TAG>."""
    check_arch(arch)
    spec = _SPEC_CACHE.get(arch)
    if spec is None:
        spec = ArchSpec(
            name=arch,
            registers=_read_lexicon(f"{arch}.registers"),
            call_opcodes=_read_lexicon(f"{arch}.calls"),
            branch_opcodes=_read_lexicon(f"{arch}.branches"),
        )
        _SPEC_CACHE[arch] = spec
    return spec


def register_architecture(spec: ArchSpec) -> None:
    """Install lexicons for an architecture tag at runtime."""
    check_arch(spec.name)
    _SPEC_CACHE[spec.name] = spec


def _split_operands(text: str) -> list[str]:
    """Split an operand list on top-level commas. Commas inside [], {}
    or quotes do not split. Raises UnbalancedBrackets on mismatch."""
    parts = []
    buf = []
    stack: list[str] = []
    quote: str | None = None
    for ch in text:
        if quote is not None:
            buf.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in _QUOTES:
            quote = ch
            buf.append(ch)
        elif ch in _OPENERS:
            stack.append(ch)
            buf.append(ch)
        elif ch in _CLOSERS:
            if not stack or stack[-1] != _CLOSERS[ch]:
                raise UnbalancedBrackets(f"unmatched {ch!r} in {text!r}")
            stack.pop()
            buf.append(ch)
        elif ch == "," and not stack:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    if stack:
        raise UnbalancedBrackets(f"unclosed {stack[-1]!r} in {text!r}")
    if quote is not None:
        raise UnbalancedBrackets(f"unterminated quote in {text!r}")
    parts.append("".join(buf))
    return [p.strip() for p in parts if p.strip()]


def parse_instruction(raw: str, arch: str) -> ParsedInstruction:
    """Split one disassembled line into opcode and operand texts.

    The caller strips label prefixes and trailing comments. The opcode is
    the first whitespace-delimited field, lowercased; the remainder splits
    on top-level commas.
    """
    check_arch(arch)
    text = raw.strip()
    if not text:
        raise EmptyInstruction(f"empty instruction for arch {arch!r}")
    fields = text.split(None, 1)
    opcode = fields[0].lower()
    operands = _split_operands(fields[1]) if len(fields) > 1 else []
    return ParsedInstruction(opcode=opcode, operands=tuple(operands))


def _is_quoted(text: str) -> bool:
    return len(text) >= 2 and text[0] in _QUOTES and text[-1] == text[0]


def classify_operand(text: str, opcode: str, position: int, arch: str) -> OperandToken:
    """Assign one operand to a normalization class. Total: anything that
    matches no other rule is an other-symbol."""
    spec = arch_spec(arch)
    stripped = text.strip()
    lowered = stripped.lower()
    if lowered in spec.registers:
        return OperandToken(OperandKind.REGISTER, stripped)
    if _IMMEDIATE_RE.match(stripped):
        return OperandToken(OperandKind.IMMEDIATE, stripped)
    if _is_quoted(stripped) or lowered == STR_SENTINEL.lower():
        return OperandToken(OperandKind.STRING, stripped)
    if "[" in stripped or "{" in stripped:
        return OperandToken(OperandKind.MEMORY, stripped)
    if opcode.lower() in spec.call_opcodes and _IDENTIFIER_RE.match(stripped):
        return OperandToken(OperandKind.CALL_TARGET, stripped)
    return OperandToken(OperandKind.SYMBOL, stripped)


def _rewrite_leaf(leaf: str, spec: ArchSpec) -> str:
    """Rewrite one leaf inside a memory expression. Signs were already
    split off as structural separators, so leaves carry none."""
    lowered = leaf.lower()
    if lowered in spec.registers:
        return lowered
    if _IMMEDIATE_RE.match(leaf):
        return NUM_SENTINEL
    if lowered == STR_SENTINEL.lower() or _is_quoted(leaf):
        return STR_SENTINEL
    return TAG_SENTINEL


def _rewrite_memory(text: str, spec: ArchSpec) -> str:
    compact = "".join(text.split())
    # ARM writes signed immediates as #-8; fold the marker into the sign
    # so the splitter does not strand a bare "#" leaf.
    compact = compact.replace("#-", "-").replace("#+", "+")
    out = []
    for piece in _SUBTOKEN_RE.findall(compact):
        if len(piece) == 1 and piece in "[]{}()+-*:,":
            out.append(piece)
        else:
            out.append(_rewrite_leaf(piece, spec))
    return "".join(out)


def _normalize_operand(text: str, opcode: str, position: int, arch: str) -> str:
    tok = classify_operand(text, opcode, position, arch)
    kind = tok.kind
    if kind is OperandKind.REGISTER:
        return tok.text.lower()
    if kind is OperandKind.IMMEDIATE:
        body = tok.text.lstrip("#")
        return "-" + NUM_SENTINEL if body.startswith("-") else NUM_SENTINEL
    if kind is OperandKind.STRING:
        return STR_SENTINEL
    if kind is OperandKind.CALL_TARGET:
        return FUNC_SENTINEL
    if kind is OperandKind.MEMORY:
        return _rewrite_memory(tok.text, arch_spec(arch))
    # other-symbol; the <TAG> sentinel is its own fixed point
    return TAG_SENTINEL


def normalize(parsed: ParsedInstruction, arch: str) -> NormalizedInstruction:
    """Apply the four reduction rules to every operand.

    Idempotent: normalizing an already normalized instruction is the
    identity. The opcode text is kept as-is (lowercased by parsing).
    """
    operands = tuple(
        _normalize_operand(op, parsed.opcode, i, arch)
        for i, op in enumerate(parsed.operands)
    )
    return NormalizedInstruction(opcode=parsed.opcode, operands=operands)


def render_body(norm: NormalizedInstruction) -> str:
    """Opcode plus comma-joined operands, without the architecture tag."""
    if not norm.operands:
        return norm.opcode
    return f"{norm.opcode} {','.join(norm.operands)}"


def render_token(norm: NormalizedInstruction, arch: str) -> str:
    """Canonical token: `<arch>:<opcode> <op1>,<op2>,...`.

    Zero-operand instructions render as `<arch>:<opcode>`. Everything is
    lowercase except the <STR>, FOO and <TAG> sentinels.
    """
    check_arch(arch)
    return f"{arch}:{render_body(norm)}"


def normalize_text(raw: str, arch: str) -> str:
    """Parse, normalize and render one instruction text to its token."""
    return render_token(normalize(parse_instruction(raw, arch), arch), arch)


def split_token(token: str) -> tuple[str, str]:
    """Split a canonical token into (arch, body). Inverse of render_token
    given that architecture tags never contain a colon."""
    arch, sep, body = token.partition(":")
    if not arch or not sep or not body:
        raise ValueError(f"not a canonical token: {token!r}")
    return arch, body


def token_opcode(token: str) -> str:
    """Opcode field of a canonical token."""
    _, body = split_token(token)
    return body.split(" ", 1)[0]


def leaf_tokens(text: str) -> list[str]:
    """Non-structural pieces of an operand list text: what remains after
    removing `[ ] { } ( ) + - * : ,`. Used for feature counting."""
    return [
        piece
        for piece in _SUBTOKEN_RE.findall(text)
        if not (len(piece) == 1 and piece in "[]{}()+-*:,")
    ]
