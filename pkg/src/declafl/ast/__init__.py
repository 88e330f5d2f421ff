from declafl.ast.nodes import (
    Command, Model, Node, Ordering, Span, paragraph_body, param_names, params,
    sig_fact, sig_fields, structurally_equal,
)
from declafl.ast.parser import parse, parse_file
from declafl.ast.printer import pretty_print, print_node

__all__ = [
    "Command", "Model", "Node", "Ordering", "Span", "paragraph_body", "param_names",
    "params", "sig_fact", "sig_fields", "structurally_equal", "parse", "parse_file",
    "pretty_print", "print_node",
]
