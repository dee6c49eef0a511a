import json
import sys


@mcp.tool(
def broken(text: str) -> str
    return text
