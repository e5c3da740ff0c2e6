"""Energy of the planar k = 1/2 disclination against log(1/eps).

Relaxes the disk problem for a few eps values at fixed eps/h and prints the
fitted slope next to kappa*. Runs in well under a minute.
"""
from ldgdefects import scenario, verify
from ldgdefects.potential import MaterialParams
from ldgdefects.solver import relax

params = MaterialParams(1.0, 1.0, 1.0)


def min_energy(eps: float) -> float:
    sc = scenario.disk_scenario(params, eps, int(round(4 / eps)))
    field, report = relax(sc.initial_field(), params)
    print(f"eps={eps:<6g} h={sc.domain.h:<8.4g} E={report.energy.total:.5f} iters={report.iterations}")
    return report.energy.total


rep = verify.kappa_sweep(min_energy, [0.1, 0.05, 0.025], params.kappa_star)
print(f"slope={rep.metadata['slope']:.4f}  kappa*={params.kappa_star:.4f}  {rep.summary()}")
