"""Constraint language: lexer, parser, AST, validation, and printing."""

from .ast import (
    AtPre,
    Binary,
    BinOp,
    BoolLit,
    Call,
    Clause,
    ClauseKind,
    CollOp,
    CollectionOp,
    ConstraintFile,
    ContextDecl,
    Expr,
    FieldAccess,
    Ident,
    IntLit,
    MethodSig,
    Param,
    RealLit,
    ResultRef,
    SelfRef,
    SourceSpan,
    StrLit,
    Unary,
    UnaryOp,
    children,
)
from .errors import ConstraintError, OclSyntaxError, ValidationError
from .lexer import Token, TokenKind, tokenize
from .parser import parse_constraint_file, parse_expression
from .printer import format_expr
from .validate import Diagnostic, extract_pre_chains, validate_clause

__all__ = [
    "AtPre", "Binary", "BinOp", "BoolLit", "Call", "Clause", "ClauseKind",
    "CollOp", "CollectionOp", "ConstraintFile", "ContextDecl", "Expr",
    "FieldAccess", "Ident", "IntLit", "MethodSig", "Param", "RealLit",
    "ResultRef", "SelfRef", "SourceSpan", "StrLit", "Unary", "UnaryOp", "children",
    "ConstraintError", "OclSyntaxError", "ValidationError",
    "Token", "TokenKind", "tokenize",
    "parse_constraint_file", "parse_expression",
    "format_expr",
    "Diagnostic", "extract_pre_chains", "validate_clause",
]
