"""
Recursive-descent parser for DeepGraphLog source.

Grammar (statements end with ``.``; ``%`` comments)::

    statement  := model | query | evidence | probfact | gnnfact | clause
    model      := '#' 'model' '(' NAME { ',' NAME '=' value } ')' '.'
    query      := 'query' '(' atom ')' '.'
    evidence   := 'evidence' '(' atom [ ',' ('true'|'false') ] ')' '.'
    probfact   := NUMBER '::' atom '.'
                | 't' '(' (NUMBER | '_') ')' '::' atom '.'
    gnnfact    := 'gnn' '(' NAME ',' '[' gamma ']' [ ',' '[' terms ']' ] ')'
                  '::' atom { ';' atom } [ ':-' body ] '.'
    gamma      := [ item { ',' item } ]     item := NAME '/' NUMBER | atom
    clause     := atom [ ':-' body ] '.'
    body       := atom { ',' atom }
"""
from __future__ import annotations

import itertools
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from logging_setup import Component, get_logger

from ..errors import DeepGraphLogError, ErrorCategory, ParseError, ProgramError
from ..gnn.config import GnnConfig, Readout
from ..logic.terms import Atom, Compound, Constant, Rule, Term, Variable
from .lexer import Token, TokenKind, tokenize
from .program import Evidence, GammaIndicator, GammaItem, GnnFactSchema, ProbFact, Program

logger = get_logger(Component.FRONTEND)

_DIRECTIVES = {("query", 1), ("evidence", 1), ("evidence", 2)}
_MODEL_KEYS = {"layers", "hidden", "readout"}


class Parser:
    """Parses one source text into an unchecked Program."""

    def __init__(self, source: str, file: Optional[str] = None):
        self.file = file
        self.tokens = tokenize(source, file)
        self.pos = 0
        self._fresh = itertools.count()
        self._arities: Dict[str, Tuple[int, Token]] = {}

        self.prob_facts: List[ProbFact] = []
        self.rules: List[Rule] = []
        self.gnn_schemas: List[GnnFactSchema] = []
        self.model_configs: Dict[str, GnnConfig] = {}
        self.queries: List[Atom] = []
        self.evidence: List[Evidence] = []
        self._declared_facts: Dict[Atom, Token] = {}

    # -- token helpers -----------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind is not TokenKind.EOF:
            self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        shown = token.text if token.kind is not TokenKind.EOF else "end of input"
        return ParseError(message, location=token.location(self.file), token=shown)

    def expect_punct(self, text: str) -> Token:
        if not self.current.is_punct(text):
            raise self.error(f"expected '{text}'")
        return self.advance()

    def expect_kind(self, kind: TokenKind, what: str) -> Token:
        if self.current.kind is not kind:
            raise self.error(f"expected {what}")
        return self.advance()

    # -- entry point -------------------------------------------------------

    def parse(self) -> Program:
        while self.current.kind is not TokenKind.EOF:
            self.statement()
        return Program(
            prob_facts=tuple(self.prob_facts),
            rules=tuple(self.rules),
            gnn_schemas=tuple(self.gnn_schemas),
            model_configs=dict(self.model_configs),
            queries=tuple(self.queries),
            evidence=tuple(self.evidence),
            source=self.file,
        )

    def statement(self) -> None:
        tok = self.current
        if tok.is_punct("#"):
            self.model_directive()
        elif tok.kind is TokenKind.NUMBER:
            self.annotated_fact()
        elif tok.kind is TokenKind.NAME and tok.text == "t" and self.peek().is_punct("(") and self._closing_paren_then("::"):
            self.learnable_fact()
        elif tok.kind is TokenKind.NAME and tok.text == "gnn" and self.peek().is_punct("(") and self._closing_paren_then("::"):
            self.gnn_fact()
        elif tok.kind is TokenKind.NAME and tok.text in ("query", "evidence") and self.peek().is_punct("(") and self._closing_paren_then("."):
            self.query_or_evidence()
        else:
            self.clause()

    def _closing_paren_then(self, text: str) -> bool:
        """True if the parenthesised group starting at the next token is followed by ``text``."""
        depth = 0
        i = self.pos + 1
        while i < len(self.tokens):
            tok = self.tokens[i]
            if tok.is_punct("(") or tok.is_punct("["):
                depth += 1
            elif tok.is_punct(")") or tok.is_punct("]"):
                depth -= 1
                if depth == 0:
                    return self.tokens[min(i + 1, len(self.tokens) - 1)].is_punct(text)
            elif tok.kind is TokenKind.EOF or (tok.is_punct(".") and depth <= 1):
                return False
            i += 1
        return False

    # -- statements --------------------------------------------------------

    def model_directive(self) -> None:
        self.expect_punct("#")
        keyword = self.expect_kind(TokenKind.NAME, "'model'")
        if keyword.text != "model":
            raise self.error("unknown directive", keyword)
        self.expect_punct("(")
        name_tok = self.expect_kind(TokenKind.NAME, "model identifier")
        options: Dict[str, str] = {}
        while self.current.is_punct(","):
            self.advance()
            key = self.expect_kind(TokenKind.NAME, "option name")
            if key.text not in _MODEL_KEYS:
                raise self.error(f"unknown model option '{key.text}'", key)
            self.expect_punct("=")
            value = self.advance()
            if value.kind not in (TokenKind.NUMBER, TokenKind.NAME):
                raise self.error("expected option value", value)
            options[key.text] = value.text
        self.expect_punct(")")
        self.expect_punct(".")

        if name_tok.text in self.model_configs:
            raise ProgramError(
                f"model '{name_tok.text}' declared twice",
                category=ErrorCategory.DUPLICATE_DECLARATION,
                location=name_tok.location(self.file),
                token=name_tok.text,
            )
        self.model_configs[name_tok.text] = GnnConfig(
            model_id=name_tok.text,
            num_layers=self._positive_int(options.get("layers", "2"), name_tok),
            hidden_dim=self._positive_int(options.get("hidden", "8"), name_tok),
            readout=self._readout(options.get("readout"), name_tok),
        )

    def _positive_int(self, text: str, tok: Token) -> int:
        try:
            value = int(text)
        except ValueError:
            raise self.error(f"expected a positive integer, got '{text}'", tok) from None
        if value <= 0:
            raise self.error(f"expected a positive integer, got '{text}'", tok)
        return value

    def _readout(self, text: Optional[str], tok: Token) -> Optional[Readout]:
        if text is None:
            return None
        try:
            return Readout(text)
        except ValueError:
            raise self.error(f"readout must be node, edge or graph, got '{text}'", tok) from None

    def annotated_fact(self) -> None:
        number = self.advance()
        prob = self._number(number)
        self.expect_punct("::")
        start = self.current
        fact = self.atom()
        if self.current.is_punct(":-"):
            raise self.error("probabilistic rules are not supported; annotate a fact and use a rule")
        self.expect_punct(".")
        self._add_fact(ProbFact(fact, prob, location=start.location(self.file)), start)

    def learnable_fact(self) -> None:
        self.advance()  # t
        self.expect_punct("(")
        if self.current.kind is TokenKind.VARIABLE and self.current.text == "_":
            self.advance()
            initial = 0.5
        else:
            initial = self._number(self.expect_kind(TokenKind.NUMBER, "initial probability or '_'"))
        self.expect_punct(")")
        self.expect_punct("::")
        start = self.current
        fact = self.atom()
        self.expect_punct(".")
        self._add_fact(ProbFact(fact, initial, learnable=True, location=start.location(self.file)), start)

    def gnn_fact(self) -> None:
        start = self.advance()  # gnn
        self.expect_punct("(")
        model = self.expect_kind(TokenKind.NAME, "model identifier")
        self.expect_punct(",")
        self.expect_punct("[")
        gamma: List[GammaItem] = []
        if not self.current.is_punct("]"):
            gamma.append(self.gamma_item())
            while self.current.is_punct(","):
                self.advance()
                gamma.append(self.gamma_item())
        self.expect_punct("]")
        targets: List[Term] = []
        if self.current.is_punct(","):
            self.advance()
            self.expect_punct("[")
            if not self.current.is_punct("]"):
                targets.append(self.term())
                while self.current.is_punct(","):
                    self.advance()
                    targets.append(self.term())
            self.expect_punct("]")
        self.expect_punct(")")
        self.expect_punct("::")
        heads = [self.atom()]
        while self.current.is_punct(";"):
            self.advance()
            heads.append(self.atom())
        guard: List[Atom] = []
        if self.current.is_punct(":-"):
            self.advance()
            guard = self.body()
        self.expect_punct(".")
        self.gnn_schemas.append(
            GnnFactSchema(
                model_id=model.text,
                gamma_spec=tuple(gamma),
                targets=tuple(targets),
                head_group=tuple(heads),
                guard=tuple(guard),
                location=start.location(self.file),
            )
        )

    def gamma_item(self) -> GammaItem:
        if self.current.kind is TokenKind.NAME and self.peek().is_punct("/"):
            name = self.advance()
            self.advance()  # /
            arity_tok = self.expect_kind(TokenKind.NUMBER, "arity")
            try:
                arity = int(arity_tok.text)
            except ValueError:
                raise self.error("arity must be an integer", arity_tok) from None
            if arity < 0:
                raise self.error("arity must be non-negative", arity_tok)
            self._note_arity(name.text, arity, name)
            return GammaIndicator(name.text, arity)
        return self.atom()

    def query_or_evidence(self) -> None:
        keyword = self.advance()
        self.expect_punct("(")
        target = self.atom()
        value = True
        if self.current.is_punct(","):
            if keyword.text == "query":
                raise self.error("query/1 takes a single atom")
            self.advance()
            flag = self.expect_kind(TokenKind.NAME, "'true' or 'false'")
            if flag.text not in ("true", "false"):
                raise self.error("evidence value must be true or false", flag)
            value = flag.text == "true"
        self.expect_punct(")")
        self.expect_punct(".")
        if keyword.text == "query":
            self.queries.append(target)
        else:
            self.evidence.append(Evidence(target, value))

    def clause(self) -> None:
        start = self.current
        head = self.atom()
        if self.current.is_punct(":-"):
            self.advance()
            body = self.body()
            self.expect_punct(".")
            self.rules.append(Rule(head, tuple(body)))
            return
        self.expect_punct(".")
        if head.is_ground():
            self._add_fact(ProbFact(head, 1.0, location=start.location(self.file)), start)
        else:
            self.rules.append(Rule(head, ()))

    def body(self) -> List[Atom]:
        atoms = [self.atom()]
        while self.current.is_punct(","):
            self.advance()
            atoms.append(self.atom())
        return atoms

    # -- atoms and terms ---------------------------------------------------

    def atom(self) -> Atom:
        tok = self.current
        if tok.kind not in (TokenKind.NAME, TokenKind.QUOTED):
            raise self.error("expected an atom")
        self.advance()
        args: Tuple[Term, ...] = ()
        if self.current.is_punct("("):
            args = self._arguments()
        self._note_arity(tok.text, len(args), tok)
        return Atom(tok.text, args)

    def _arguments(self) -> Tuple[Term, ...]:
        self.expect_punct("(")
        args = [self.term()]
        while self.current.is_punct(","):
            self.advance()
            args.append(self.term())
        self.expect_punct(")")
        return tuple(args)

    def term(self) -> Term:
        tok = self.current
        if tok.kind is TokenKind.VARIABLE:
            self.advance()
            if tok.text == "_":
                return Variable(f"_G{next(self._fresh)}")
            return Variable(tok.text)
        if tok.kind is TokenKind.NUMBER:
            self.advance()
            return Constant(tok.text)
        if tok.kind in (TokenKind.NAME, TokenKind.QUOTED):
            self.advance()
            if self.current.is_punct("("):
                return Compound(tok.text, self._arguments())
            return Constant(tok.text)
        raise self.error("expected a term")

    # -- bookkeeping -------------------------------------------------------

    def _number(self, tok: Token) -> float:
        try:
            value = float(tok.text)
        except ValueError:
            raise self.error("malformed number", tok) from None
        if not math.isfinite(value):
            raise self.error("number is not finite", tok)
        return value

    def _note_arity(self, name: str, arity: int, tok: Token) -> None:
        if (name, arity) in _DIRECTIVES:
            raise ProgramError(
                f"{name}/{arity} is reserved for directives and cannot be used as a predicate",
                category=ErrorCategory.RESERVED_NAME,
                location=tok.location(self.file),
                token=name,
            )
        seen = self._arities.get(name)
        if seen is None:
            self._arities[name] = (arity, tok)
        elif seen[0] != arity:
            first = seen[1]
            raise ProgramError(
                f"predicate '{name}' used with arity {arity} but earlier with arity {seen[0]} "
                f"(line {first.line})",
                category=ErrorCategory.ARITY_CONFLICT,
                location=tok.location(self.file),
                token=name,
            )

    def _add_fact(self, fact: ProbFact, tok: Token) -> None:
        if not fact.atom.is_ground():
            raise ProgramError(
                f"probabilistic fact {fact.atom} must be ground",
                category=ErrorCategory.UNBOUND_VARIABLE,
                location=tok.location(self.file),
                token=str(fact.atom),
            )
        if fact.atom in self._declared_facts:
            first = self._declared_facts[fact.atom]
            raise ProgramError(
                f"fact {fact.atom} declared twice (first at line {first.line})",
                category=ErrorCategory.DUPLICATE_DECLARATION,
                location=tok.location(self.file),
                token=str(fact.atom),
            )
        self._declared_facts[fact.atom] = tok
        self.prob_facts.append(fact)


def parse(source: str, file: Optional[str] = None) -> Program:
    """Parse source text into an unchecked Program; malformed input raises a DeepGraphLogError."""
    try:
        program = Parser(source, file).parse()
    except DeepGraphLogError:
        raise
    except RecursionError:
        raise ParseError("input nested too deeply") from None
    logger.debug("program parsed", source=file or "<input>", statements=program.statement_count())
    return program


def parse_file(path: str | Path) -> Program:
    """Read a UTF-8 ``.dgl`` file and parse it; OSError propagates for the caller's I/O handling."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse(text, str(path))


def parse_atom(text: str) -> Atom:
    """Parse a single atom such as ``legal_move(a)`` (trailing period optional)."""
    parser = Parser(text.strip().rstrip(".") + " .")
    result = parser.atom()
    parser.expect_punct(".")
    if parser.current.kind is not TokenKind.EOF:
        raise parser.error("unexpected text after atom")
    return result
