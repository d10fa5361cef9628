"""Line-oriented parser for ``.qpl`` pulse programs.

One statement per line; ``#`` starts a comment.  See ``docs/pulse_language.md``
for the grammar.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from fractions import Fraction

from ..errors import QctrlError
from .ast import (UNITS, ChannelDecl, ChanRef, ClockDecl, ConstraintDecl, EnvelopeDecl,
                  FrequencyDecl, PhaseReset, Play, PulseProgram, Quantity, ReadoutDecl,
                  Repeat, SetFreq, SetGain, SetPhase, Span, Sync, Trigger, Wait)

SHAPES = {"gaussian", "drag", "triangle", "flat", "file"}


@dataclass(frozen=True)
class Diagnostic:
    file: str
    line: int
    col: int
    code: str
    message: str
    severity: str = "error"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    def __str__(self):
        return f"{self.file}:{self.line}:{self.col}: {self.code}: {self.message}"


class ParseError(QctrlError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


# error codes
SYNTAX = "E001"
UNDECLARED = "E002"
DUPLICATE = "E003"
BAD_VALUE = "E004"

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<string>"[^"]*")
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[A-Za-z]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?::\d+)?)
  | (?P<sym>[@+\-=/])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    col: int


class _Fail(Exception):
    def __init__(self, code, message, col):
        self.code, self.message, self.col = code, message, col


def _tokenize(line: str) -> list[Tok]:
    toks, pos = [], 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            raise _Fail(SYNTAX, f"unexpected character {line[pos]!r}", pos + 1)
        if m.lastgroup != "ws":
            toks.append(Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return toks


class _Line:
    """Cursor over the tokens of one source line."""

    def __init__(self, toks, lineno, length):
        self.toks, self.i, self.lineno, self.length = toks, 0, lineno, length

    def peek(self, text=None):
        if self.i >= len(self.toks):
            return None
        t = self.toks[self.i]
        if text is not None and t.text != text:
            return None
        return t

    def col(self):
        return self.toks[self.i].col if self.i < len(self.toks) else self.length + 1

    def next(self, what="token"):
        if self.i >= len(self.toks):
            raise _Fail(SYNTAX, f"expected {what} at end of line", self.col())
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.next(repr(text))
        if t.text != text:
            raise _Fail(SYNTAX, f"expected {text!r}, found {t.text!r}", t.col)
        return t

    def name(self, what="name"):
        t = self.next(what)
        if t.kind != "name" or ":" in t.text:
            raise _Fail(SYNTAX, f"expected {what}, found {t.text!r}", t.col)
        return t.text

    def ref(self):
        t = self.next("channel")
        if t.kind != "name":
            raise _Fail(SYNTAX, f"expected channel, found {t.text!r}", t.col)
        name, _, tone = t.text.partition(":")
        return ChanRef(name, int(tone) if tone else None), t.col

    def quantity(self, what="number"):
        sign = 1
        t = self.next(what)
        if t.kind == "sym" and t.text in "+-":
            sign = -1 if t.text == "-" else 1
            t = self.next(what)
        if t.kind != "number":
            raise _Fail(SYNTAX, f"expected {what}, found {t.text!r}", t.col)
        m = re.fullmatch(r"((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([A-Za-z]*)", t.text)
        digits, unit = m.group(1), m.group(2)
        if unit and unit not in UNITS:
            raise _Fail(BAD_VALUE, f"unknown unit {unit!r}", t.col)
        if re.fullmatch(r"\d+", digits):
            value = sign * int(digits)
        else:
            value = sign * float(digits)
        return Quantity(value, unit)

    def integer(self, what="integer"):
        t = self.next(what)
        if t.kind != "number" or not t.text.isdigit():
            raise _Fail(SYNTAX, f"expected {what}, found {t.text!r}", t.col)
        return int(t.text)

    def maybe_at(self):
        if self.peek("@"):
            self.next()
            return self.quantity("time")
        return None

    def done(self):
        if self.i < len(self.toks):
            t = self.toks[self.i]
            raise _Fail(SYNTAX, f"unexpected {t.text!r}", t.col)


def _parse_envelope(ln: _Line, span):
    name = ln.name("envelope name")
    shape_tok = ln.next("shape")
    if shape_tok.text not in SHAPES:
        raise _Fail(BAD_VALUE, f"unknown envelope shape {shape_tok.text!r}", shape_tok.col)
    params, interp = [], False
    while ln.peek() is not None:
        key_tok = ln.next()
        if key_tok.text == "interp":
            interp = True
            continue
        if key_tok.kind != "name":
            raise _Fail(SYNTAX, f"expected key=value, found {key_tok.text!r}", key_tok.col)
        ln.expect("=")
        if ln.peek() is not None and ln.peek().kind == "string":
            params.append((key_tok.text, ln.next().text[1:-1]))
        else:
            params.append((key_tok.text, ln.quantity("value")))
    return EnvelopeDecl(name, shape_tok.text, tuple(params), interp, span)


def _parse_constraint(ln: _Line, span):
    name = ln.name("constraint name")
    ln.expect("=")
    terms = []
    first = True
    while ln.peek() is not None:
        sign = 1
        t = ln.peek()
        if t.kind == "sym" and t.text in "+-":
            sign = -1 if t.text == "-" else 1
            ln.next()
        elif not first:
            raise _Fail(SYNTAX, f"expected '+' or '-', found {t.text!r}", t.col)
        coef = Fraction(1)
        t = ln.peek()
        if t is not None and t.kind == "number":
            num = ln.integer("coefficient")
            ln.expect("/")
            den = ln.integer("coefficient")
            coef = Fraction(num, den)
        ref, col = ln.ref()
        coef *= sign
        if abs(coef) not in (1, Fraction(1, 2)):
            raise _Fail(BAD_VALUE, f"coefficient {coef} is not +-1 or +-1/2", col)
        terms.append((coef, ref))
        first = False
    if len(terms) < 2:
        raise _Fail(BAD_VALUE, "a constraint needs at least two terms", ln.col())
    return ConstraintDecl(name, tuple(terms), span)


def _parse_trigger(ln: _Line, span):
    ro = ln.name("readout")
    at = ln.maybe_at()
    length, every, count = Quantity(1), None, 1
    while ln.peek() is not None:
        kw = ln.next()
        if kw.text == "length":
            length = ln.quantity("length")
        elif kw.text == "every":
            every = ln.quantity("interval")
        elif kw.text == "count":
            count = ln.integer("count")
        else:
            raise _Fail(SYNTAX, f"unexpected {kw.text!r}", kw.col)
    if every is None and count != 1:
        raise _Fail(SYNTAX, "'count' needs 'every'", span.col)
    return Trigger(ro, at, length, every, count, span)


def _parse_line(ln: _Line, span):
    kw = ln.next()
    word = kw.text
    if word == "clock":
        node = ClockDecl(ln.quantity("clock rate"), span)
    elif word == "channel":
        name = ln.name("channel name")
        tones, lo = 0, None
        while ln.peek() is not None:
            t = ln.next()
            if t.text == "mux":
                tones = ln.integer("tone count")
                if tones < 1:
                    raise _Fail(BAD_VALUE, "mux channel needs at least one tone", t.col)
            elif t.text == "lo":
                lo = ln.quantity("LO frequency")
            else:
                raise _Fail(SYNTAX, f"unexpected {t.text!r}", t.col)
        node = ChannelDecl(name, tones, lo, span)
    elif word == "readout":
        name = ln.name("readout name")
        ln.expect("rate")
        node = ReadoutDecl(name, ln.quantity("rate"), span)
    elif word == "envelope":
        node = _parse_envelope(ln, span)
    elif word == "frequency":
        name = ln.name("frequency name")
        node = FrequencyDecl(name, ln.quantity("frequency"), span)
    elif word == "constraint":
        node = _parse_constraint(ln, span)
    elif word == "set_freq":
        ref, _ = ln.ref()
        t = ln.peek()
        if t is not None and t.kind == "name":
            value = ln.name("frequency")
        else:
            value = ln.quantity("frequency")
        node = SetFreq(ref, value, span)
    elif word == "set_phase":
        ref, _ = ln.ref()
        node = SetPhase(ref, ln.quantity("phase"), span)
    elif word == "set_gain":
        ref, _ = ln.ref()
        node = SetGain(ref, ln.quantity("gain"), span)
    elif word == "play":
        ch = ln.name("channel")
        env = ln.name("envelope")
        node = Play(ch, env, ln.maybe_at(), span)
    elif word == "trigger":
        node = _parse_trigger(ln, span)
    elif word == "wait":
        node = Wait(ln.quantity("duration"), span)
    elif word == "sync":
        node = Sync(span)
    elif word == "phase_reset":
        chans = []
        while ln.peek() is not None and ln.peek().kind == "name":
            chans.append(ln.name("channel"))
        node = PhaseReset(tuple(chans), ln.maybe_at(), span)
    elif word == "repeat":
        count = ln.integer("repeat count")
        if count < 1:
            raise _Fail(BAD_VALUE, "repeat count must be at least 1", kw.col)
        period = None
        if ln.peek("period"):
            ln.next()
            period = ln.quantity("period")
        node = ("repeat", count, period)
    elif word == "end":
        node = ("end",)
    else:
        raise _Fail(SYNTAX, f"unknown statement {word!r}", kw.col)
    ln.done()
    return node


_DECLS = (ClockDecl, ChannelDecl, ReadoutDecl, EnvelopeDecl, FrequencyDecl, ConstraintDecl)


def _check_names(prog, file, diags):
    chans = {c.name: c for c in prog.channels}
    readouts = {r.name for r in prog.readouts}
    envs = {e.name for e in prog.envelopes}
    freqs = {f.name for f in prog.frequencies}

    def err(span, code, msg):
        diags.append(Diagnostic(file, span.line, span.col, code, msg))

    def check_ref(ref, span):
        if ref.name not in chans:
            err(span, UNDECLARED, f"undeclared channel {ref.name!r}")
            return
        tones = chans[ref.name].mux_tones
        if ref.tone is not None and not 0 <= ref.tone < max(tones, 1) or (
                ref.tone is not None and tones == 0):
            err(span, BAD_VALUE, f"channel {ref.name!r} has no tone {ref.tone}")

    for c in prog.constraints:
        for _, ref in c.terms:
            check_ref(ref, c.span)

    def walk(stmts):
        for s in stmts:
            if isinstance(s, (SetFreq, SetPhase, SetGain)):
                check_ref(s.target, s.span)
                if isinstance(s, SetFreq) and isinstance(s.value, str) and s.value not in freqs:
                    err(s.span, UNDECLARED, f"undeclared frequency {s.value!r}")
            elif isinstance(s, Play):
                if s.channel not in chans:
                    err(s.span, UNDECLARED, f"undeclared channel {s.channel!r}")
                if s.envelope not in envs:
                    err(s.span, UNDECLARED, f"undeclared envelope {s.envelope!r}")
            elif isinstance(s, Trigger):
                if s.readout not in readouts:
                    err(s.span, UNDECLARED, f"undeclared readout {s.readout!r}")
            elif isinstance(s, PhaseReset):
                for c in s.channels:
                    if c not in chans:
                        err(s.span, UNDECLARED, f"undeclared channel {c!r}")
            elif isinstance(s, Repeat):
                walk(s.body)

    walk(prog.body)


def parse_with_diagnostics(text: str, file: str = "<string>"):
    """Parse ``text``; returns ``(program or None, diagnostics)``."""
    diags: list[Diagnostic] = []
    decls = {k: [] for k in _DECLS}
    names: dict[str, Span] = {}
    stack = [("top", [], None)]
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        try:
            toks = _tokenize(line)
            span = Span(lineno, toks[0].col)
            node = _parse_line(_Line(toks, lineno, len(line)), span)
        except _Fail as f:
            diags.append(Diagnostic(file, lineno, f.col, f.code, f.message))
            continue
        if isinstance(node, tuple):
            if node[0] == "repeat":
                stack.append((node, [], span))
            elif len(stack) == 1:
                diags.append(Diagnostic(file, lineno, span.col, SYNTAX, "'end' without 'repeat'"))
            else:
                (_, count, period), body, rspan = stack.pop()
                stack[-1][1].append(Repeat(count, period, tuple(body), rspan))
        elif isinstance(node, _DECLS):
            if len(stack) > 1:
                diags.append(Diagnostic(file, lineno, span.col, SYNTAX,
                                        "declarations are only allowed at top level"))
                continue
            if isinstance(node, ClockDecl):
                if decls[ClockDecl]:
                    diags.append(Diagnostic(file, lineno, span.col, DUPLICATE,
                                            "clock declared twice"))
                    continue
            else:
                if node.name in names:
                    prev = names[node.name]
                    diags.append(Diagnostic(file, lineno, span.col, DUPLICATE,
                                            f"{node.name!r} already declared on line {prev.line}"))
                    continue
                names[node.name] = span
            decls[type(node)].append(node)
        else:
            stack[-1][1].append(node)
    if len(stack) > 1:
        _, _, rspan = stack[-1]
        diags.append(Diagnostic(file, rspan.line, rspan.col, SYNTAX, "'repeat' without 'end'"))
    if not decls[ClockDecl]:
        diags.append(Diagnostic(file, 1, 1, SYNTAX, "program declares no clock"))
    if any(d.severity == "error" for d in diags):
        return None, diags
    prog = PulseProgram(
        clock=decls[ClockDecl][0],
        channels=tuple(decls[ChannelDecl]),
        readouts=tuple(decls[ReadoutDecl]),
        envelopes=tuple(decls[EnvelopeDecl]),
        frequencies=tuple(decls[FrequencyDecl]),
        constraints=tuple(decls[ConstraintDecl]),
        body=tuple(stack[0][1]),
        source=file,
    )
    _check_names(prog, file, diags)
    if any(d.severity == "error" for d in diags):
        return None, diags
    return prog, diags


def parse(text: str, file: str = "<string>") -> PulseProgram:
    prog, diags = parse_with_diagnostics(text, file)
    if prog is None:
        raise ParseError(diags)
    return prog


def parse_file(path) -> PulseProgram:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path))
