"""Relax the radial hedgehog in the unit ball and look at what is left.

For a = b = c = 1 the radial point defect is not the minimiser: the flow
opens the core into a small biaxial ring. The script prints the energy,
the defect components and the degree of the field on a sphere around them.
A 40^3 grid at eps = 0.15 takes a minute or two.
"""
import sys

from ldgdefects import defect, scenario
from ldgdefects.potential import MaterialParams
from ldgdefects.solver import SolveConfig, relax

eps = float(sys.argv[1]) if len(sys.argv) > 1 else 0.15
params = MaterialParams(1.0, 1.0, 1.0)
sc = scenario.hedgehog_scenario(params, eps, 40)
start = sc.initial_field()
field, report = relax(start, params, SolveConfig(log_every=1000))
print(f"converged={report.converged} iterations={report.iterations} E={report.energy.total:.4f}")

found = defect.extract_defects(field, params)
defect.annotate_topology(found, field, params)
for c in found.components:
    print(f"{c.kind:9s} cells={len(c.cells):5d} diameter={c.diameter:.3f} length={c.length:.3f} "
          f"topology={c.topology}")
deg, raw = defect.field_sphere_degree(field, (0.0, 0.0, 0.0), 0.9, params.s_star)
print(f"degree on the sphere of radius 0.9: {deg} ({raw:.4f})")
