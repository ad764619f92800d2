"""Parsing and preprocessing an RCNDL model.

Run:  python demos/02_interpret_model.py
"""

from pathlib import Path

from rcndl import parse_program, preprocess, render_intermediate, render_program

source = (Path(__file__).parent / "models" / "three_vars.rcndl").read_text()
print("source program:")
print(source)

program = parse_program(source)
print("canonical form (round-trips through the parser):")
print(render_program(program))

# Preprocessing propagates the root prior outward so every clause carries
# the full joint over its variables; observations carry their marginals.
net = preprocess(program)
print("intermediate form after preprocessing:")
print(render_intermediate(net))

print("propagation tree:")
for edge in net.edges:
    a, b = net.nodes[edge.a], net.nodes[edge.b]
    print(f"  [{a.label}] --{'/'.join(edge.separator.vars)}-- [{b.label}]")
