"""Recursive-descent parser with statement-level error recovery.

Grammar (everything else is skipped, counted per statement):

    module  := stmt*
    stmt    := import | from_import | assign | expr_stmt | if | while
             | for | funcdef | return
    expr    := name | attribute | call | literal | binop | paren

Literals cover str/int/float and list/dict/tuple displays; displays are
validated but stored as leaves (their type tag is all later stages use).
Tolerated beyond the core grammar: keyword arguments and parameter
defaults (stored as Assign nodes inside ArgList), ``*``/``**`` argument
splats with the stars dropped, annotations (parsed and discarded), and
tuple targets in ``for`` (wrapped in an ArgList).
"""

from dataclasses import dataclass, field

from .lexer import Token, tokenize, LexicalError

# Node kinds; fixed enumeration shared by every downstream stage.
MODULE = "Module"
IMPORT = "Import"
FROM_IMPORT = "FromImport"
ASSIGN = "Assign"
IF = "If"
WHILE = "While"
FOR = "For"
FUNCTION_DEF = "FunctionDef"
RETURN = "Return"
EXPR_STMT = "ExprStmt"
CALL = "Call"
ATTRIBUTE = "Attribute"
NAME = "Name"
LITERAL = "Literal"
BINOP = "BinOp"
ARG_LIST = "ArgList"

LEAF_KINDS = (NAME, LITERAL)


@dataclass
class AstNode:
    kind: str
    children: list = field(default_factory=list)
    text: str = ""      # leaf token text; module name for imports; member name for Attribute
    span: tuple = (0, 0)
    label_span: tuple = None    # Attribute only: byte span of the member-name token

    def __repr__(self):
        if self.kind in LEAF_KINDS:
            return f"{self.kind}({self.text!r})"
        base = f"{self.kind}({self.text!r})" if self.text else self.kind
        return f"{base}[{', '.join(repr(c) for c in self.children)}]"


@dataclass
class ParseStats:
    statements_skipped: int = 0


class _StmtError(Exception):
    """Internal: current statement does not fit the subset grammar."""


_COMPARE_OPS = {"<", ">", "<=", ">=", "==", "!="}
_ADD_OPS = {"+", "-", "|", "^", "&", "<<", ">>"}
_MUL_OPS = {"*", "/", "//", "%", "@"}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0
        self.stats = ParseStats()

    # --- token plumbing -------------------------------------------------

    def peek(self, ahead=0) -> Token:
        j = self.pos + ahead
        toks = self.toks
        return toks[j] if j < len(toks) else toks[-1]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if self.pos < len(self.toks) - 1:
            self.pos += 1
        return tok

    def at(self, type_, text=None, ahead=0):
        tok = self.peek(ahead)
        return tok.type == type_ and (text is None or tok.text == text)

    def expect(self, type_, text=None) -> Token:
        if not self.at(type_, text):
            raise _StmtError(f"expected {text or type_}")
        return self.advance()

    # --- recovery -------------------------------------------------------

    def _skip_statement(self):
        """Drop tokens to the end of the current statement, suite included."""
        self.stats.statements_skipped += 1
        while not self.at("ENDMARKER"):
            if self.at("DEDENT"):
                return      # never swallow an enclosing suite's dedent
            tok = self.advance()
            if tok.type == "NEWLINE":
                break
        if self.at("INDENT"):
            self.advance()
            depth = 0
            while not self.at("ENDMARKER"):
                tok = self.advance()
                if tok.type == "INDENT":
                    depth += 1
                elif tok.type == "DEDENT":
                    if depth == 0:
                        break
                    depth -= 1

    # --- statements -----------------------------------------------------

    def parse_module(self) -> AstNode:
        children = []
        end = self.toks[-1].end if self.toks else 0
        while not self.at("ENDMARKER"):
            if self.at("NEWLINE") or self.at("INDENT") or self.at("DEDENT"):
                self.advance()
                continue
            children.extend(self._statement_with_recovery())
        return AstNode(MODULE, children, "", (0, end))

    def _statement_with_recovery(self) -> list:
        mark = self.pos
        try:
            return self._statement()
        except _StmtError:
            self.pos = mark
            self._skip_statement()
            return []

    def _statement(self) -> list:
        """One logical statement; may yield several nodes (import lists)."""
        tok = self.peek()
        if tok.type == "KEYWORD":
            if tok.text == "import":
                return self._end_simple(self._import_stmt())
            if tok.text == "from":
                return self._end_simple(self._from_import_stmt())
            if tok.text == "if":
                return [self._if_stmt()]
            if tok.text == "while":
                return [self._while_stmt()]
            if tok.text == "for":
                return [self._for_stmt()]
            if tok.text == "def":
                return [self._funcdef()]
            if tok.text == "return":
                return self._end_simple([self._return_stmt()])
            raise _StmtError(f"unsupported keyword {tok.text}")
        if tok.type in ("ERROR",):
            raise _StmtError("lexical error in statement")
        return self._end_simple([self._assign_or_expr_stmt()])

    def _end_simple(self, nodes: list) -> list:
        # Simple statements end at NEWLINE; ';' separates siblings.
        if self.at("OP", ";"):
            self.advance()
            if not (self.at("NEWLINE") or self.at("ENDMARKER")):
                nodes = nodes + self._statement()
                return nodes
        if self.at("NEWLINE"):
            self.advance()
        elif not (self.at("ENDMARKER") or self.at("DEDENT")):
            raise _StmtError("trailing tokens after statement")
        return nodes

    def _dotted_name(self):
        start = self.expect("NAME")
        parts = [start.text]
        end = start.end
        while self.at("OP", "."):
            self.advance()
            nxt = self.expect("NAME")
            parts.append(nxt.text)
            end = nxt.end
        return ".".join(parts), start.start, end

    def _import_stmt(self) -> list:
        self.expect("KEYWORD", "import")
        nodes = []
        while True:
            name, s, e = self._dotted_name()
            children = []
            if self.at("KEYWORD", "as"):
                self.advance()
                alias = self.expect("NAME")
                children.append(AstNode(NAME, [], alias.text, (alias.start, alias.end)))
                e = alias.end
            nodes.append(AstNode(IMPORT, children, name, (s, e)))
            if self.at("OP", ","):
                self.advance()
                continue
            break
        return nodes

    def _from_import_stmt(self) -> list:
        kw = self.expect("KEYWORD", "from")
        if self.at("OP", "."):
            raise _StmtError("relative import")
        module, _, _ = self._dotted_name()
        self.expect("KEYWORD", "import")
        if self.at("OP", "*"):
            raise _StmtError("star import")
        parenthesized = self.at("OP", "(")
        if parenthesized:
            self.advance()
        nodes = []
        while True:
            name_tok = self.expect("NAME")
            children = [AstNode(NAME, [], name_tok.text, (name_tok.start, name_tok.end))]
            end = name_tok.end
            if self.at("KEYWORD", "as"):
                self.advance()
                alias = self.expect("NAME")
                children.append(AstNode(NAME, [], alias.text, (alias.start, alias.end)))
                end = alias.end
            nodes.append(AstNode(FROM_IMPORT, children, module, (kw.start, end)))
            if self.at("OP", ","):
                self.advance()
                if parenthesized and self.at("OP", ")"):
                    break
                continue
            break
        if parenthesized:
            self.expect("OP", ")")
        return nodes

    def _assign_or_expr_stmt(self) -> AstNode:
        start = self.peek().start
        target = self._expression()
        if self.at("OP", ":") :
            # Annotated assignment: the annotation is parsed and dropped.
            self.advance()
            self._expression()
            self.expect("OP", "=")
            value = self._expression()
            if target.kind not in (NAME, ATTRIBUTE):
                raise _StmtError("unsupported assignment target")
            return AstNode(ASSIGN, [target, value], "", (start, value.span[1]))
        if self.at("OP", "="):
            self.advance()
            if target.kind not in (NAME, ATTRIBUTE):
                raise _StmtError("unsupported assignment target")
            value = self._expression()
            if self.at("OP", "="):
                raise _StmtError("chained assignment")
            return AstNode(ASSIGN, [target, value], "", (start, value.span[1]))
        return AstNode(EXPR_STMT, [target], "", (start, target.span[1]))

    def _suite(self) -> list:
        self.expect("OP", ":")
        if not self.at("NEWLINE"):
            # Single-line suite of simple statements.
            return self._statement()
        self.advance()
        if not self.at("INDENT"):
            raise _StmtError("expected indented block")
        self.advance()
        body = []
        while not (self.at("DEDENT") or self.at("ENDMARKER")):
            if self.at("NEWLINE"):
                self.advance()
                continue
            body.extend(self._statement_with_recovery())
        if self.at("DEDENT"):
            self.advance()
        return body

    def _if_stmt(self, keyword="if") -> AstNode:
        kw = self.expect("KEYWORD", keyword)
        test = self._expression()
        body = self._suite()
        children = [test] + body
        end = body[-1].span[1] if body else test.span[1]
        if self.at("KEYWORD", "elif"):
            nested = self._if_stmt("elif")
            children.append(nested)
            end = nested.span[1]
        elif self.at("KEYWORD", "else"):
            self.advance()
            orelse = self._suite()
            children.extend(orelse)
            if orelse:
                end = orelse[-1].span[1]
        return AstNode(IF, children, "", (kw.start, end))

    def _while_stmt(self) -> AstNode:
        kw = self.expect("KEYWORD", "while")
        test = self._expression()
        body = self._suite()
        end = body[-1].span[1] if body else test.span[1]
        return AstNode(WHILE, [test] + body, "", (kw.start, end))

    def _for_stmt(self) -> AstNode:
        kw = self.expect("KEYWORD", "for")
        targets = [self._for_target()]
        while self.at("OP", ","):
            self.advance()
            if self.at("KEYWORD", "in"):
                break
            targets.append(self._for_target())
        self.expect("KEYWORD", "in")
        iter_expr = self._expression()
        body = self._suite()
        if len(targets) == 1:
            target = targets[0]
        else:
            span = (targets[0].span[0], targets[-1].span[1])
            target = AstNode(ARG_LIST, targets, "", span)
        end = body[-1].span[1] if body else iter_expr.span[1]
        return AstNode(FOR, [target, iter_expr] + body, "", (kw.start, end))

    def _for_target(self) -> AstNode:
        tok = self.expect("NAME")
        return AstNode(NAME, [], tok.text, (tok.start, tok.end))

    def _funcdef(self) -> AstNode:
        kw = self.expect("KEYWORD", "def")
        name_tok = self.expect("NAME")
        fname = AstNode(NAME, [], name_tok.text, (name_tok.start, name_tok.end))
        lp = self.expect("OP", "(")
        params = []
        while not self.at("OP", ")"):
            if self.at("OP", "*") or self.at("OP", "**"):
                self.advance()          # splat params kept as plain names
                if self.at("OP", ",") or self.at("OP", ")"):
                    # bare '*' separator
                    if self.at("OP", ","):
                        self.advance()
                    continue
            if self.at("OP", "/"):
                self.advance()
                if self.at("OP", ","):
                    self.advance()
                continue
            ptok = self.expect("NAME")
            pnode = AstNode(NAME, [], ptok.text, (ptok.start, ptok.end))
            if self.at("OP", ":"):
                self.advance()
                self._expression()      # annotation dropped
            if self.at("OP", "="):
                self.advance()
                default = self._expression()
                pnode = AstNode(ASSIGN, [pnode, default], "", (ptok.start, default.span[1]))
            params.append(pnode)
            if self.at("OP", ","):
                self.advance()
        rp = self.expect("OP", ")")
        arglist = AstNode(ARG_LIST, params, "", (lp.start, rp.end))
        if self.at("OP", "->"):
            self.advance()
            self._expression()          # return annotation dropped
        body = self._suite()
        end = body[-1].span[1] if body else rp.end
        return AstNode(FUNCTION_DEF, [fname, arglist] + body, "", (kw.start, end))

    def _return_stmt(self) -> AstNode:
        kw = self.expect("KEYWORD", "return")
        if self.at("NEWLINE") or self.at("ENDMARKER") or self.at("OP", ";") or self.at("DEDENT"):
            return AstNode(RETURN, [], "", (kw.start, kw.end))
        value = self._expression()
        if self.at("OP", ","):
            raise _StmtError("tuple return")
        return AstNode(RETURN, [value], "", (kw.start, value.span[1]))

    # --- expressions ----------------------------------------------------

    def _expression(self) -> AstNode:
        return self._or_expr()

    def _or_expr(self):
        node = self._and_expr()
        if not (self.peek().type == "KEYWORD" and self.peek().text == "or"):
            return node
        operands = [node]
        while self.peek().type == "KEYWORD" and self.peek().text == "or":
            self.advance()
            operands.append(self._and_expr())
        return AstNode(BINOP, operands, "",
                       (operands[0].span[0], operands[-1].span[1]))

    def _and_expr(self):
        node = self._not_expr()
        if not (self.peek().type == "KEYWORD" and self.peek().text == "and"):
            return node
        operands = [node]
        while self.peek().type == "KEYWORD" and self.peek().text == "and":
            self.advance()
            operands.append(self._not_expr())
        return AstNode(BINOP, operands, "",
                       (operands[0].span[0], operands[-1].span[1]))

    def _not_expr(self):
        if self.peek().type == "KEYWORD" and self.peek().text == "not":
            kw = self.advance()
            operand = self._not_expr()
            return AstNode(BINOP, [operand], "", (kw.start, operand.span[1]))
        return self._comparison()

    def _at_comparison_op(self):
        tok = self.peek()
        if tok.type == "OP":
            return tok.text in _COMPARE_OPS
        if tok.type == "KEYWORD":
            if tok.text in ("in", "is"):
                return True
            if tok.text == "not" and self.at("KEYWORD", "in", ahead=1):
                return True
        return False

    def _comparison(self):
        node = self._arith()
        if not self._at_comparison_op():
            return node
        operands = [node]
        while self._at_comparison_op():
            tok = self.advance()
            if tok.text == "not":           # 'not in'
                self.expect("KEYWORD", "in")
            elif tok.text == "is" and self.at("KEYWORD", "not"):
                self.advance()
            operands.append(self._arith())
        return AstNode(BINOP, operands, "",
                       (operands[0].span[0], operands[-1].span[1]))

    def _arith(self):
        node = self._term()
        tok = self.peek()
        if not (tok.type == "OP" and tok.text in _ADD_OPS):
            return node
        operands = [node]
        while True:
            tok = self.peek()
            if not (tok.type == "OP" and tok.text in _ADD_OPS):
                break
            self.advance()
            operands.append(self._term())
        return AstNode(BINOP, operands, "",
                       (operands[0].span[0], operands[-1].span[1]))

    def _term(self):
        node = self._unary()
        tok = self.peek()
        if not (tok.type == "OP" and tok.text in _MUL_OPS):
            return node
        operands = [node]
        while True:
            tok = self.peek()
            if not (tok.type == "OP" and tok.text in _MUL_OPS):
                break
            self.advance()
            operands.append(self._unary())
        return AstNode(BINOP, operands, "",
                       (operands[0].span[0], operands[-1].span[1]))

    def _unary(self):
        tok = self.peek()
        if tok.type == "OP" and tok.text in ("-", "+", "~"):
            self.advance()
            operand = self._unary()
            return AstNode(BINOP, [operand], "", (tok.start, operand.span[1]))
        return self._power()

    def _power(self):
        node = self._postfix()
        if self.at("OP", "**"):
            self.advance()
            exp = self._unary()
            return AstNode(BINOP, [node, exp], "", (node.span[0], exp.span[1]))
        return node

    def _postfix(self):
        node = self._atom()
        while True:
            if self.at("OP", "."):
                self.advance()
                name_tok = self.expect("NAME")
                node = AstNode(ATTRIBUTE, [node], name_tok.text,
                               (node.span[0], name_tok.end),
                               label_span=(name_tok.start, name_tok.end))
            elif self.at("OP", "("):
                lp = self.advance()
                args = []
                while not self.at("OP", ")"):
                    if self.at("OP", "*") or self.at("OP", "**"):
                        self.advance()      # splat dropped, value kept
                        args.append(self._expression())
                    elif self.at("NAME") and self.at("OP", "=", ahead=1):
                        kw_tok = self.advance()
                        self.advance()
                        kw_name = AstNode(NAME, [], kw_tok.text, (kw_tok.start, kw_tok.end))
                        value = self._expression()
                        args.append(AstNode(ASSIGN, [kw_name, value], "",
                                            (kw_tok.start, value.span[1])))
                    else:
                        args.append(self._expression())
                        if self.at("KEYWORD", "for"):
                            raise _StmtError("generator argument")
                    if self.at("OP", ","):
                        self.advance()
                rp = self.advance()
                arglist = AstNode(ARG_LIST, args, "", (lp.start, rp.end))
                node = AstNode(CALL, [node, arglist], "", (node.span[0], rp.end))
            else:
                return node

    def _atom(self) -> AstNode:
        tok = self.peek()
        if tok.type == "NAME":
            self.advance()
            return AstNode(NAME, [], tok.text, (tok.start, tok.end))
        if tok.type == "NUMBER":
            self.advance()
            if tok.subtype == "complex":
                raise _StmtError("complex literal")
            return AstNode(LITERAL, [], tok.subtype, (tok.start, tok.end))
        if tok.type == "STRING":
            self.advance()
            end = tok.end
            while self.at("STRING"):        # adjacent string concatenation
                end = self.advance().end
            return AstNode(LITERAL, [], "str", (tok.start, end))
        if tok.type == "OP" and tok.text == "(":
            return self._paren_or_tuple()
        if tok.type == "OP" and tok.text == "[":
            return self._display("[", "]", "list")
        if tok.type == "OP" and tok.text == "{":
            return self._dict_display()
        raise _StmtError(f"unexpected token {tok.text!r}")

    def _paren_or_tuple(self) -> AstNode:
        lp = self.expect("OP", "(")
        if self.at("OP", ")"):
            rp = self.advance()
            return AstNode(LITERAL, [], "tuple", (lp.start, rp.end))
        first = self._expression()
        if self.at("OP", ")"):
            self.advance()
            return first                    # plain grouping
        is_tuple = False
        while self.at("OP", ","):
            is_tuple = True
            self.advance()
            if self.at("OP", ")"):
                break
            self._expression()              # contents validated, then dropped
        if not is_tuple:
            raise _StmtError("unsupported parenthesized form")
        rp = self.expect("OP", ")")
        return AstNode(LITERAL, [], "tuple", (lp.start, rp.end))

    def _display(self, open_, close, tag) -> AstNode:
        lb = self.expect("OP", open_)
        while not self.at("OP", close):
            self._expression()
            if self.at("KEYWORD", "for"):
                raise _StmtError("comprehension")
            if self.at("OP", ","):
                self.advance()
            elif not self.at("OP", close):
                raise _StmtError(f"bad {tag} display")
        rb = self.advance()
        return AstNode(LITERAL, [], tag, (lb.start, rb.end))

    def _dict_display(self) -> AstNode:
        lb = self.expect("OP", "{")
        saw_colon = None
        while not self.at("OP", "}"):
            if self.at("OP", "**"):
                self.advance()
                self._expression()
                saw_colon = True if saw_colon is None else saw_colon
            else:
                self._expression()
                if self.at("OP", ":"):
                    if saw_colon is False:
                        raise _StmtError("mixed set/dict display")
                    saw_colon = True
                    self.advance()
                    self._expression()
                else:
                    # A '{a, b}' set display is outside the subset.
                    raise _StmtError("set display")
            if self.at("KEYWORD", "for"):
                raise _StmtError("comprehension")
            if self.at("OP", ","):
                self.advance()
            elif not self.at("OP", "}"):
                raise _StmtError("bad dict display")
        rb = self.advance()
        return AstNode(LITERAL, [], "dict", (lb.start, rb.end))


def parse_source(source: str, path: str = "<string>"):
    """Parse ``source`` into a Module AstNode.

    Returns ``(module, stats)``.  Statements outside the subset grammar are
    dropped with recovery and counted in ``stats.statements_skipped``.
    Raises LexicalError when no statement boundary can be recovered.
    """
    tokens = tokenize(source)
    parser = Parser(tokens)
    module = parser.parse_module()
    return module, parser.stats
