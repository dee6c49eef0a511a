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


mcp = FastMCP("summer")

# --- tools ---
@mcp.tool()
def sum_numbers(numbers: list) -> str:
    """Add up a list of numbers.

    Args:
        numbers: The numbers to add.
    """
    return str(sum(int(n) for n in numbers))
# --- end tools ---


if __name__ == "__main__":
    mcp.run()
