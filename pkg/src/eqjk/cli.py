"""Command-line front end.

Every subcommand prints one canonical JSON document (sorted keys, rationals
as ``"p/q"`` strings) on stdout.  Exit status: 0 on success, 2 when the input
cannot be parsed, 3 when it violates a precondition.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from typing import Sequence

from . import hilbplane as hp
from .eqres import eq_res
from .fracform import FracSum, Polynomial
from .jkres import jk_res
from .locint import (
    FixedPointDatum,
    GroupData,
    admissible_chamber,
    hk_quotient,
    jk_quotient_abelian,
    jk_quotient_nonabelian,
)
from .ratline import OrderedBasis, RatlineError, fmt_q, q, vec

VOL_CONVENTION = "vol(T)=1: the integer lattice basis is declared orthonormal"


class InputError(Exception):
    """Malformed input: exit status 2."""


# -- class expressions ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|(sigma|C\d+)|([-+*^()]))")


def tokenize(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise InputError(f"unexpected character at offset {pos}: {text[pos:pos + 8]!r}")
        num, ident, op = m.groups()
        out.append(("num", num) if num else ("id", ident) if ident else ("op", op))
        pos = m.end()
    return out


class ClassParser:
    """Recursive descent over ``+ -`` < ``*`` < unary minus < ``^``.

    Identifiers are ``sigma`` and ``C1``, ``C2``, ...; ``C_i`` with ``i > n``
    is zero.  There is no implicit multiplication.
    """

    def __init__(self, text: str, n: int):
        self.toks = tokenize(text)
        self.i = 0
        self.n = n

    def parse(self) -> Polynomial:
        if not self.toks:
            raise InputError("empty class expression")
        out = self.expr()
        if self.i != len(self.toks):
            raise InputError(f"unexpected token {self.toks[self.i][1]!r}")
        return out

    def peek(self) -> str | None:
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def take(self) -> tuple[str, str]:
        if self.i >= len(self.toks):
            raise InputError("unexpected end of expression")
        self.i += 1
        return self.toks[self.i - 1]

    def expr(self) -> Polynomial:
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Polynomial:
        out = self.unary()
        while self.peek() == "*":
            self.take()
            out = out * self.unary()
        return out

    def unary(self) -> Polynomial:
        if self.peek() == "-":
            self.take()
            return self.unary() * -1
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek() != "^":
            return base
        self.take()
        kind, tok = self.take()
        if kind != "num" or "/" in tok:
            raise InputError("exponent must be a nonnegative integer literal")
        return base ** int(tok)

    def atom(self) -> Polynomial:
        kind, tok = self.take()
        d = self.n + 1
        if kind == "num":
            try:
                return Polynomial.const(Fraction(tok), d)
            except ZeroDivisionError:
                raise InputError(f"zero denominator in {tok!r}") from None
        if kind == "id":
            if tok == "sigma":
                return hp.sigma_poly(self.n)
            i = int(tok[1:])
            if i == 0:
                raise InputError("Chern classes start at C1")
            return hp.elementary(i, self.n)
        if tok == "(":
            out = self.expr()
            if self.take()[1] != ")":
                raise InputError("expected ')'")
            return out
        raise InputError(f"unexpected token {tok!r}")


def parse_class(text: str, n: int) -> Polynomial:
    return ClassParser(text, n).parse()


# -- input loading -----------------------------------------------------------------

def _load(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e.msg}, line {e.lineno})") from None


def _parsing(what: str, fn, *args):
    try:
        return fn(*args)
    except RatlineError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"malformed {what}: {e}") from None


def _basis(data, dim: int) -> OrderedBasis:
    vectors = data["vectors"] if isinstance(data, dict) else data
    b = OrderedBasis(tuple(vec(v) for v in vectors))
    if b.dim != dim:
        raise RatlineError(f"basis has dimension {b.dim}, expected {dim}")
    return b


def _points(data) -> tuple[list[FixedPointDatum], int, int]:
    dim = int(data["dim"])
    split = int(data["split"])
    pts = []
    for p in data["points"]:
        num = Polynomial.from_json(p["num"], dim) if "num" in p else None
        pts.append(FixedPointDatum(str(p.get("name", len(pts))), p["moment"],
                                   tuple(p["weights"]), num, q(p.get("mult", "1"))))
    return pts, dim, split


def _group(data) -> GroupData:
    return GroupData(
        roots=tuple(data.get("roots", ())),
        complex_weights=tuple(data.get("complex_weights", ())),
        weyl_order=int(data.get("weyl_order", 1)),
        gamma=data.get("gamma"),
        level=data.get("level"),
    )


def _basis_json(b: OrderedBasis) -> list:
    return [[fmt_q(x) for x in v] for v in b.vectors]


# -- subcommands ----------------------------------------------------------------

def cmd_jkres(args) -> dict:
    F = _parsing("fraction", FracSum.from_json, _load(args.input))
    basis = _parsing("basis", _basis, _load(args.basis), F.dim) if args.basis else OrderedBasis.standard(F.dim)
    return {"result": jk_res(F, basis).simplify().to_json(),
            "metadata": {"basis": _basis_json(basis), "volume": VOL_CONVENTION}}


def cmd_eqres(args) -> dict:
    F = _parsing("fraction", FracSum.from_json, _load(args.input))
    basis = _parsing("basis", _basis, _load(args.basis), F.dim) if args.basis else OrderedBasis.standard(F.dim)
    if not 0 < args.split <= F.dim:
        raise RatlineError(f"split must lie in 1..{F.dim}")
    v = eq_res(F, basis, args.split, workers=args.threads)
    return {"result": v.simplify().to_json(),
            "metadata": {"basis": _basis_json(basis), "split": args.split, "volume": VOL_CONVENTION}}


def cmd_integrate(args) -> dict:
    pts, dim, split = _parsing("fixed-point data", _points, _load(args.points))
    group = _parsing("group data", _group, _load(args.group))
    basis = _parsing("basis", _basis, _load(args.basis), dim) if args.basis else OrderedBasis.standard(dim)
    alpha = _parsing("class", Polynomial.from_json, _load(args.alpha), dim) if args.alpha else None
    meta = {"basis": _basis_json(basis), "mode": args.mode, "split": split, "volume": VOL_CONVENTION}
    if group.gamma is not None:
        meta["chamber"] = list(admissible_chamber(pts, group.gamma, basis))
    if args.mode == "abelian":
        v = jk_quotient_abelian(pts, alpha, group, basis, split, workers=args.threads)
    elif args.mode == "nonabelian":
        v = jk_quotient_nonabelian(pts, alpha, group, basis, split, seed=args.seed, workers=args.threads)
    else:
        v = hk_quotient(pts, alpha, group, basis, split, seed=args.seed, workers=args.threads)
    return {"result": v.simplify().to_json(), "metadata": meta}


def _hilb_meta(n: int) -> dict:
    return {"basis": ["sigma"] + [f"tau_{i}" for i in range(1, n + 1)], "volume": VOL_CONVENTION}


def _label(lam) -> str:
    return "(" + ",".join(map(str, lam)) + ")"


def cmd_hilb(args) -> dict:
    n, N = args.n, args.N
    if n < 0:
        raise RatlineError("n must be nonnegative")
    hp.check_n(n, N)
    if args.action == "table":
        return {_label(lam): {"p": [str(c) for c in hp.content_vector(lam, N)],
                              "b": hp.b_lambda(lam, N).to_json()}
                for lam in hp.partitions(n)}
    if args.action == "rank":
        bound = n if args.degree_bound is None else args.degree_bound
        return {"rank": hp.evaluation_rank(n, N, bound), "partitions": len(hp.partitions(n))}
    alpha = parse_class(args.cls, n)
    if args.action == "kernel":
        return {"member": hp.kernel_member(alpha, n, N)}
    v = hp.hilb_integrate(alpha, n, N, method=args.method, workers=args.threads)
    return {"value": v.to_json(), "metadata": _hilb_meta(n)}


# -- entry point -----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    env_seed = os.environ.get("JKRES_SEED")
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="cap on worker processes")
    common.add_argument("--seed", type=int, default=int(env_seed) if env_seed else 0,
                        help="seed of the perturbation stream (env JKRES_SEED)")

    p = _Parser(prog="eqjk", description="Exact Jeffrey-Kirwan residues and quotient integrals.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("jkres", parents=[common], help="JK residue of a fraction sum")
    s.add_argument("--input", required=True)
    s.add_argument("--basis")

    s = sub.add_parser("eqres", parents=[common], help="equivariant residue")
    s.add_argument("--input", required=True)
    s.add_argument("--split", type=int, required=True)
    s.add_argument("--basis")

    s = sub.add_parser("integrate", parents=[common], help="integrate over a quotient")
    s.add_argument("--points", required=True)
    s.add_argument("--group", required=True)
    s.add_argument("--mode", choices=("abelian", "nonabelian", "hyperkahler"), default="abelian")
    s.add_argument("--basis")
    s.add_argument("--alpha", help="JSON polynomial for the integrated class (default 1)")

    s = sub.add_parser("hilb", parents=[common], help="Hilbert scheme of points of the plane")
    s.add_argument("action", choices=("integrate", "kernel", "rank", "table"))
    s.add_argument("-n", type=int, required=True)
    s.add_argument("-N", type=int, required=True)
    s.add_argument("--class", dest="cls", default="1")
    s.add_argument("--method", choices=("formula", "eqres", "oracle"), default="formula")
    s.add_argument("--degree-bound", type=int, default=None)
    return p


COMMANDS = {"jkres": cmd_jkres, "eqres": cmd_eqres, "integrate": cmd_integrate, "hilb": cmd_hilb}


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise InputError("--threads must be positive")
        doc = COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (RatlineError, ValueError, ArithmeticError) as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return 3
    json.dump(doc, out, sort_keys=True)
    out.write("\n")
    return 0


def main() -> None:
    sys.exit(run())
