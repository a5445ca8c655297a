import numpy as np, time
from front_forge.reaction import make_cubic
from front_forge.profile import solve_profile
from front_forge.geometry import symmetric_pair
from front_forge.bounds import admissible_params
from front_forge import harness as H
from front_forge.pde import GridSpec, SolverConfig

spec = make_cubic(0.25)
prof = solve_profile(spec, tol_c=1e-10)
pair = symmetric_pair(np.pi / 4, prof.c_f)
prob = H.Problem(spec, prof, pair)
params = admissible_params(spec, prof, pair, C_emp=38.46467982952184)

grid = GridSpec(dims=(512, 512), spacing=(0.1, 0.1), origin=(-25.55, -20.75))
cfg = SolverConfig(cfl_fraction=0.45, reaction_lipschitz=spec.L)
t0 = time.time()
res = H.construct_entire(prob, params, grid, cfg, [-5, -10, -20],
                         snapshot_times=(-0.5, 0.0), threads=3)
print("construct elapsed %.1f s" % (time.time() - t0), flush=True)
print("monotone_min:", res.monotone_min)
print("increments:", res.increments, "ratio:", res.increments[0] / res.increments[1])
print("sandwich_low:", res.sandwich_low, "sandwich_high:", res.sandwich_high, "beta:", res.beta)
for c in H.verify_asymptotics(res, prob, params):
    print(c.name, "passed=", c.passed,
          {k: (np.round(v, 8) if isinstance(v, (float, np.floating)) else v)
           for k, v in c.measured.items()})
for c in H.verify_monotonicity(res, prob):
    print(c.name, "passed=", c.passed, c.measured)
