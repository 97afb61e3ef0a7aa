"""Speech-prompt grammar: pattern compiler, matcher, and language enumerator.

Patterns describe the phrases a listen block accepts. The concrete syntax:

    optional part      [ really ]
    alternation        ( good | great )
    wildcard           *            (matches zero or more tokens)
    sub-rule reference $GREETING    (defined in a rule file)

Transcripts and pattern words are normalized identically (lowercase,
punctuation stripped, whitespace-tokenized), so matching is case- and
punctuation-insensitive. Matching runs as a memoized span search over token
positions, which keeps wildcard patterns linear-ish instead of backtracking.
``expand`` enumerates the complete finite language of a wildcard-free
pattern and serves as the independent oracle for the matcher.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import GrammarError

#: Sentinel result when no prompt in a table matches a transcript. Reserved
#: as a transition label; prompt names may not collide with it.
NO_PARSE = "NoParse"

#: Reserved alongside NO_PARSE (produced by listen timeouts, not by matching).
NO_SPEECH = "NoSpeech"

_RESERVED_PROMPT_NAMES = frozenset({NO_PARSE, NO_SPEECH})


# ---------------------------------------------------------------------------
# Pattern AST


@dataclass(frozen=True)
class Literal:
    token: str


@dataclass(frozen=True)
class Sequence:
    children: tuple["Pattern", ...]


@dataclass(frozen=True)
class OptionalGroup:
    child: "Pattern"


@dataclass(frozen=True)
class Alternation:
    children: tuple["Pattern", ...]


@dataclass(frozen=True)
class Wildcard:
    pass


@dataclass(frozen=True)
class RuleRef:
    name: str


Pattern = Union[Literal, Sequence, OptionalGroup, Alternation, Wildcard, RuleRef]


# ---------------------------------------------------------------------------
# Normalization

_APOSTROPHES = re.compile(r"[''`]")
_NON_WORD = re.compile(r"[^a-z0-9\s]")


def tokenize(text: str) -> list[str]:
    """Normalize ``text`` into the token list used for matching.

    Lowercases, drops apostrophes (so "don't" stays one token), replaces all
    other punctuation with spaces, and splits on whitespace.
    """
    lowered = _APOSTROPHES.sub("", text.lower())
    return _NON_WORD.sub(" ", lowered).split()


def normalize(text: str) -> str:
    """Canonical string form of ``text``; idempotent."""
    return " ".join(tokenize(text))


# ---------------------------------------------------------------------------
# Pattern parsing

_RULE_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _lex(source: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
        elif ch in "[]()|*":
            tokens.append(ch)
            i += 1
        elif ch == "$":
            m = _RULE_NAME.match(source, i + 1)
            if not m:
                raise GrammarError(f"expected rule name after '$' at position {i}")
            tokens.append("$" + m.group(0))
            i = m.end()
        else:
            j = i
            while j < n and not source[j].isspace() and source[j] not in "[]()|*$":
                j += 1
            tokens.append(source[i:j])
            i = j
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse_alternation(self) -> Pattern:
        branches = [self.parse_sequence()]
        while self.peek() == "|":
            self.take()
            branches.append(self.parse_sequence())
        if len(branches) == 1:
            return branches[0]
        return Alternation(tuple(branches))

    def parse_sequence(self) -> Pattern:
        terms: list[Pattern] = []
        while True:
            tok = self.peek()
            if tok is None or tok in (")", "]", "|"):
                break
            terms.append(self.parse_term())
        if not terms:
            raise GrammarError("empty pattern branch")
        if len(terms) == 1:
            return terms[0]
        return Sequence(tuple(terms))

    def parse_term(self) -> Pattern:
        tok = self.take()
        if tok == "(":
            inner = self.parse_alternation()
            if self.peek() != ")":
                raise GrammarError("unbalanced '(' in pattern")
            self.take()
            return inner
        if tok == "[":
            inner = self.parse_alternation()
            if self.peek() != "]":
                raise GrammarError("unbalanced '[' in pattern")
            self.take()
            return OptionalGroup(inner)
        if tok == "*":
            return Wildcard()
        if tok.startswith("$"):
            return RuleRef(tok[1:])
        words = tokenize(tok)
        if not words:
            raise GrammarError(f"pattern word {tok!r} is empty after normalization")
        if len(words) == 1:
            return Literal(words[0])
        return Sequence(tuple(Literal(w) for w in words))


def _iter_refs(node: Pattern) -> Iterable[str]:
    if isinstance(node, RuleRef):
        yield node.name
    elif isinstance(node, Sequence) or isinstance(node, Alternation):
        for child in node.children:
            yield from _iter_refs(child)
    elif isinstance(node, OptionalGroup):
        yield from _iter_refs(node.child)


# ---------------------------------------------------------------------------
# Rule sets


class RuleSet:
    """Named reusable patterns, usually loaded from a rule file.

    Rule files are UTF-8 text, one ``NAME = pattern`` per line, with "#"
    comments. Rules may reference each other (forward references allowed)
    but recursion is rejected so every pattern stays a finite language.
    """

    def __init__(self, rules: dict[str, Pattern] | None = None):
        self.rules: dict[str, Pattern] = dict(rules or {})
        self._check()

    @classmethod
    def parse(cls, text: str) -> "RuleSet":
        rules: dict[str, Pattern] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GrammarError(f"line {lineno}: expected 'NAME = pattern'")
            name, _, body = line.partition("=")
            name = name.strip()
            if not _RULE_NAME.fullmatch(name):
                raise GrammarError(f"line {lineno}: invalid rule name {name!r}")
            if name in rules:
                raise GrammarError(f"line {lineno}: duplicate rule {name!r}")
            body = body.strip()
            if not body:
                raise GrammarError(f"line {lineno}: rule {name!r} has no pattern")
            rules[name] = _Parser(_lex(body)).parse_alternation()
        return cls(rules)

    def merge(self, other: "RuleSet") -> "RuleSet":
        overlap = set(self.rules) & set(other.rules)
        if overlap:
            raise GrammarError(f"duplicate rule names across files: {sorted(overlap)}")
        return RuleSet({**self.rules, **other.rules})

    def resolve(self, name: str) -> Pattern:
        try:
            return self.rules[name]
        except KeyError:
            raise GrammarError(f"unknown sub-rule ${name}") from None

    def _check(self) -> None:
        # Reject unknown references and recursion in one DFS.
        VISITING, DONE = 1, 2
        state: dict[str, int] = {}

        def visit(name: str) -> None:
            if state.get(name) == DONE:
                return
            if state.get(name) == VISITING:
                raise GrammarError(f"recursive sub-rule ${name}")
            state[name] = VISITING
            for ref in _iter_refs(self.resolve(name)):
                if ref not in self.rules:
                    raise GrammarError(f"rule {name!r} references unknown sub-rule ${ref}")
                visit(ref)
            state[name] = DONE

        for name in self.rules:
            visit(name)


_EMPTY_RULES = RuleSet()


def compile_pattern(text: str, rules: RuleSet | None = None) -> Pattern:
    """Compile pattern source into an AST, checking sub-rule references."""
    if not text or not text.strip():
        raise GrammarError("empty pattern")
    rules = rules or _EMPTY_RULES
    tokens = _lex(text)
    parser = _Parser(tokens)
    pattern = parser.parse_alternation()
    if parser.peek() is not None:
        raise GrammarError(f"unexpected {parser.peek()!r} in pattern")
    for ref in _iter_refs(pattern):
        rules.resolve(ref)
    return pattern


# ---------------------------------------------------------------------------
# Matching


def _end_positions(
    node: Pattern,
    start: int,
    tokens: list[str],
    rules: RuleSet,
    memo: dict[tuple[int, int], frozenset[int]],
) -> frozenset[int]:
    key = (id(node), start)
    cached = memo.get(key)
    if cached is not None:
        return cached
    ends: frozenset[int]
    if isinstance(node, Literal):
        if start < len(tokens) and tokens[start] == node.token:
            ends = frozenset((start + 1,))
        else:
            ends = frozenset()
    elif isinstance(node, Sequence):
        positions = frozenset((start,))
        for child in node.children:
            nxt: set[int] = set()
            for p in positions:
                nxt |= _end_positions(child, p, tokens, rules, memo)
            positions = frozenset(nxt)
            if not positions:
                break
        ends = positions
    elif isinstance(node, OptionalGroup):
        ends = frozenset((start,)) | _end_positions(node.child, start, tokens, rules, memo)
    elif isinstance(node, Alternation):
        acc: set[int] = set()
        for child in node.children:
            acc |= _end_positions(child, start, tokens, rules, memo)
        ends = frozenset(acc)
    elif isinstance(node, Wildcard):
        ends = frozenset(range(start, len(tokens) + 1))
    elif isinstance(node, RuleRef):
        ends = _end_positions(rules.resolve(node.name), start, tokens, rules, memo)
    else:  # pragma: no cover - exhaustive over Pattern
        raise TypeError(f"unknown pattern node {node!r}")
    memo[key] = ends
    return ends


def match(pattern: Pattern, transcript: str, rules: RuleSet | None = None) -> bool:
    """True iff the normalized transcript is derivable from ``pattern``."""
    tokens = tokenize(transcript)
    memo: dict[tuple[int, int], frozenset[int]] = {}
    return len(tokens) in _end_positions(pattern, 0, tokens, rules or _EMPTY_RULES, memo)


# ---------------------------------------------------------------------------
# Enumeration (matcher oracle and authoring aid)


def expand(pattern: Pattern, rules: RuleSet | None = None) -> set[str]:
    """The complete language of a wildcard-free pattern, as normalized strings."""
    rules = rules or _EMPTY_RULES

    def walk(node: Pattern) -> set[tuple[str, ...]]:
        if isinstance(node, Literal):
            return {(node.token,)}
        if isinstance(node, Sequence):
            out: set[tuple[str, ...]] = {()}
            for child in node.children:
                pieces = walk(child)
                out = {head + tail for head in out for tail in pieces}
            return out
        if isinstance(node, OptionalGroup):
            return {()} | walk(node.child)
        if isinstance(node, Alternation):
            acc: set[tuple[str, ...]] = set()
            for child in node.children:
                acc |= walk(child)
            return acc
        if isinstance(node, RuleRef):
            return walk(rules.resolve(node.name))
        if isinstance(node, Wildcard):
            raise GrammarError("wildcard patterns cannot be expanded")
        raise TypeError(f"unknown pattern node {node!r}")  # pragma: no cover

    return {" ".join(words) for words in walk(pattern)}


# ---------------------------------------------------------------------------
# Prompt tables


@dataclass(frozen=True)
class Prompt:
    name: str
    pattern: Pattern
    source: str = ""


@dataclass
class PromptTable:
    """Ordered prompt list from a listen block; first match wins."""

    prompts: list[Prompt] = field(default_factory=list)
    rules: RuleSet = field(default_factory=RuleSet)

    @classmethod
    def from_options(cls, entries: list[dict], rules: RuleSet | None = None) -> "PromptTable":
        rules = rules or _EMPTY_RULES
        if not entries:
            raise GrammarError("prompt table is empty")
        prompts: list[Prompt] = []
        seen: set[str] = set()
        for entry in entries:
            name = entry.get("name")
            source = entry.get("pattern")
            if not isinstance(name, str) or not name:
                raise GrammarError("prompt entry missing 'name'")
            if not isinstance(source, str):
                raise GrammarError(f"prompt {name!r} missing 'pattern'")
            if name in _RESERVED_PROMPT_NAMES:
                raise GrammarError(f"prompt name {name!r} is reserved")
            if name in seen:
                raise GrammarError(f"duplicate prompt name {name!r}")
            seen.add(name)
            prompts.append(Prompt(name, compile_pattern(source, rules), source))
        return cls(prompts, rules)

    def names(self) -> list[str]:
        return [p.name for p in self.prompts]


def match_prompts(table: PromptTable, transcript: str) -> str:
    """Name of the first matching prompt, or NO_PARSE."""
    for prompt in table.prompts:
        if match(prompt.pattern, transcript, table.rules):
            return prompt.name
    return NO_PARSE
