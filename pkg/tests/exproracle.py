"""Independent reference evaluator (shunting-yard to RPN) and a random expression generator."""

import math
import re

import numpy as np

TOKEN = re.compile(r"\s*(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|[A-Za-z_]\w*|[-+*/^()])")
FUNCS = {"exp": math.exp, "cos": math.cos, "sin": math.sin, "sqrt": math.sqrt, "log": math.log, "tanh": math.tanh}
# precedence, right-associative
BINARY = {"+": (1, False), "-": (1, False), "*": (2, False), "/": (2, False), "^": (4, True)}
UNARY_PREC = 3


def to_rpn(src):
    out, stack = [], []
    prev = None  # kind of the previous token: "value", "op", "(" or None
    pos = 0
    src = src.strip()
    while pos < len(src):
        m = TOKEN.match(src, pos)
        if not m:
            raise SyntaxError(src[pos:])
        tok = m.group(1)
        pos = m.end()
        if tok[0].isdigit() or tok[0] == ".":
            out.append(("num", float(tok)))
            prev = "value"
        elif tok[0].isalpha() or tok[0] == "_":
            if tok in FUNCS:
                stack.append(("func", tok))
                prev = "op"
            else:
                out.append(("var", tok))
                prev = "value"
        elif tok == "(":
            stack.append(("(", None))
            prev = "("
        elif tok == ")":
            while stack[-1][0] != "(":
                out.append(stack.pop())
            stack.pop()
            if stack and stack[-1][0] == "func":
                out.append(stack.pop())
            prev = "value"
        elif tok in "+-" and prev in (None, "op", "("):
            stack.append(("neg" if tok == "-" else "pos", UNARY_PREC))
            prev = "op"
        else:
            p, right = BINARY[tok]
            while stack and stack[-1][0] in ("bin", "neg", "pos"):
                top = stack[-1]
                tp = BINARY[top[1]][0] if top[0] == "bin" else top[1]
                # a pending prefix sign never yields to a tighter binary operator such as ^
                if tp > p or (tp == p and not right):
                    out.append(stack.pop())
                else:
                    break
            stack.append(("bin", tok))
            prev = "op"
    while stack:
        out.append(stack.pop())
    return out


def eval_rpn(rpn, env):
    st = []
    for kind, val in rpn:
        if kind == "num":
            st.append(val)
        elif kind == "var":
            st.append(math.pi if val == "pi" else env[val])
        elif kind == "func":
            x = st.pop()
            try:
                st.append(FUNCS[val](x))
            except (ValueError, OverflowError):
                st.append(math.nan)
        elif kind == "neg":
            st.append(-st.pop())
        elif kind == "pos":
            st.append(+st.pop())
        else:
            b, a = st.pop(), st.pop()
            try:
                if val == "+":
                    st.append(a + b)
                elif val == "-":
                    st.append(a - b)
                elif val == "*":
                    st.append(a * b)
                elif val == "/":
                    st.append(a / b if b != 0 else math.copysign(math.inf, a) * math.copysign(1, b) if a else math.nan)
                else:
                    r = a**b
                    st.append(math.nan if isinstance(r, complex) else r)
            except (OverflowError, ZeroDivisionError):
                st.append(math.nan)
    return st[0]


def oracle(src, **env):
    return eval_rpn(to_rpn(src), env)


def random_expression(rng, depth=3, variables=("x1", "x2", "r")):
    """Flat operator chains with occasional groups, calls and signs; exercises precedence."""
    ops = ["+", "-", "*", "/", "^"]

    def atom(d):
        c = rng.integers(0, 6 if d > 0 else 3)
        if c == 0:
            return str(rng.choice(["0.5", "2", "3", "1.25", "1e-1", "4."]))
        if c == 1:
            return str(rng.choice(list(variables) + ["pi"]))
        if c == 2:
            return str(rng.choice(variables))
        if c == 3:
            return "(" + chain(d - 1) + ")"
        if c == 4:
            f = rng.choice(["exp", "cos", "sin", "tanh"])
            return f"{f}({chain(d - 1)})"
        f = rng.choice(["sqrt", "log"])
        return f"{f}(1 + {atom(d - 1)}^2)"

    def chain(d):
        n = int(rng.integers(1, 4))
        parts = []
        for i in range(n):
            a = atom(d)
            if rng.random() < 0.2:
                a = "-" + a
            parts.append(a)
        s = parts[0]
        for p in parts[1:]:
            op = rng.choice(ops)
            if op == "^" and not (p[0].isdigit()):
                op = "*"  # keep powers small and real
            s = f"{s} {op} {p}"
        return s

    return chain(depth)


def same(a, b, rtol=1e-12):
    a, b = float(a), float(b)
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def eval_points(n, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(-1, 1, n)
    x2 = rng.uniform(-1, 1, n)
    return [dict(x1=a, x2=b, r=math.hypot(a, b)) for a, b in zip(x1, x2)]
