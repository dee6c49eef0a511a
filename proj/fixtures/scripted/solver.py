import inspect
import json
import sys


class FastMCP:
    """Minimal stdio MCP server: newline-delimited JSON-RPC 2.0, tools only."""

    _TYPES = {int: "integer", float: "number", str: "string", bool: "boolean", list: "array", dict: "object"}

    def __init__(self, name):
        self.name = name
        self._tools = {}

    def tool(self, description=None):
        def register(fn):
            self._tools[fn.__name__] = (fn, description)
            return fn
        return register

    @staticmethod
    def _doc(fn):
        summary, params, section = [], {}, None
        for raw in (fn.__doc__ or "").splitlines():
            line = raw.strip()
            if line in ("Args:", "Arguments:", "Parameters:"):
                section = "args"
            elif section == "args" and ":" in line:
                key, text = line.split(":", 1)
                params[key.split("(")[0].strip()] = text.strip()
            elif section is None and line:
                summary.append(line)
        return " ".join(summary), params

    def _listing(self, name, fn, description):
        summary, docs = self._doc(fn)
        props, required = {}, []
        for p in inspect.signature(fn).parameters.values():
            prop = {"type": self._TYPES.get(p.annotation, "string")}
            if p.name in docs:
                prop["description"] = docs[p.name]
            props[p.name] = prop
            if p.default is inspect.Parameter.empty:
                required.append(p.name)
        return {"name": name, "description": description or summary,
                "inputSchema": {"type": "object", "properties": props, "required": required}}

    def _handle(self, method, params):
        if method == "initialize":
            return {"protocolVersion": params.get("protocolVersion", "2024-11-05"),
                    "capabilities": {"tools": {}},
                    "serverInfo": {"name": self.name, "version": "1.0.0"}}
        if method == "tools/list":
            return {"tools": [self._listing(n, f, d) for n, (f, d) in self._tools.items()]}
        if method == "tools/call":
            name = params.get("name")
            if name not in self._tools:
                raise LookupError("tool not found: %s" % name)
            out = self._tools[name][0](**(params.get("arguments") or {}))
            text = out if isinstance(out, str) else json.dumps(out)
            return {"content": [{"type": "text", "text": text}]}
        raise NotImplementedError("method not found: %s" % method)

    def run(self):
        for line in sys.stdin:
            line = line.strip()
            if not line:
                continue
            msg = json.loads(line)
            if "id" not in msg:
                continue
            reply = {"jsonrpc": "2.0", "id": msg["id"]}
            try:
                reply["result"] = self._handle(msg.get("method"), msg.get("params") or {})
            except (LookupError, NotImplementedError) as e:
                reply["error"] = {"code": -32601, "message": str(e)}
            except TypeError as e:
                reply["error"] = {"code": -32602, "message": "invalid params: %s" % e}
            except Exception as e:
                reply["error"] = {"code": -32000, "message": str(e)}
            sys.stdout.write(json.dumps(reply) + "\n")
            sys.stdout.flush()


mcp = FastMCP("game24_solver")

# --- tools ---
from fractions import Fraction
from itertools import permutations, product

_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b if b != 0 else None,
}


def _search(numbers, target):
    for a, b, c, d in set(permutations(numbers)):
        for x, y, z in product(_OPS, repeat=3):
            shapes = (
                (lambda: _ap(z, _ap(y, _ap(x, a, b), c), d)),
                (lambda: _ap(z, _ap(y, a, _ap(x, b, c)), d)),
                (lambda: _ap(y, _ap(x, a, b), _ap(z, c, d))),
                (lambda: _ap(z, a, _ap(y, _ap(x, b, c), d))),
                (lambda: _ap(z, a, _ap(y, b, _ap(x, c, d)))),
            )
            for shape in shapes:
                node = shape()
                if node is not None and node[0] == target:
                    return node[1][1:-1] if node[1].startswith("(") else node[1]
    return None


def _ap(op, lhs, rhs):
    if lhs is None or rhs is None:
        return None
    if not isinstance(lhs, tuple):
        lhs = (Fraction(lhs), str(lhs))
    if not isinstance(rhs, tuple):
        rhs = (Fraction(rhs), str(rhs))
    value = _OPS[op](lhs[0], rhs[0])
    if value is None:
        return None
    return (value, "(%s%s%s)" % (lhs[1], op, rhs[1]))


@mcp.tool()
def solve_24(numbers: list) -> str:
    """Find an arithmetic expression over four numbers that evaluates to 24.

    Args:
        numbers: The four integers to combine, each used exactly once.
    """
    if len(numbers) != 4:
        raise ValueError("expected exactly four numbers")
    found = _search([int(n) for n in numbers], Fraction(24))
    return found if found is not None else "no solution"
# --- end tools ---


if __name__ == "__main__":
    mcp.run()
