import numpy as np, time
from front_forge.reaction import make_cubic
from front_forge.profile import solve_profile
from front_forge.geometry import symmetric_pair, pyramid4
from front_forge.bounds import admissible_params
from front_forge import harness as H
from front_forge.pde import GridSpec, SolverConfig

spec = make_cubic(0.25)
prof = solve_profile(spec, tol_c=1e-10)

# cone regression at the pinned angle pi/4
pair = symmetric_pair(np.pi / 4, prof.c_f)
prob = H.Problem(spec, prof, pair)
params = admissible_params(spec, prof, pair, C_emp=38.0)
grid = GridSpec(dims=(512, 512), spacing=(0.1, 0.1), origin=(-25.55, -20.75))
cfg = SolverConfig(cfl_fraction=0.45, reaction_lipschitz=spec.L)
t0 = time.time()
res = H.construct_entire(prob, params, grid, cfg, [-10.0])
print("vfront build: %.1f s" % (time.time() - t0), flush=True)
for c in H.regression_vfront(res, prob, np.pi / 4):
    print(c.name, "passed=", c.passed, c.measured)

# pyramid regression: 3-d, four fronts
pyr = pyramid4(np.pi / 4, prof.c_f)
prob3 = H.Problem(spec, prof, pyr)
params3 = admissible_params(spec, prof, pyr, C_emp=38.0)
grid3 = GridSpec(dims=(128, 128, 128), spacing=(0.4, 0.4, 0.4),
                 origin=(-25.4, -25.4, -18.0))
cfg3 = SolverConfig(cfl_fraction=0.45, reaction_lipschitz=spec.L)
t0 = time.time()
res3 = H.construct_entire(prob3, params3, grid3, cfg3, [-10.0])
print("pyramid build: %.1f s" % (time.time() - t0), flush=True)
for c in H.regression_pyramid(res3, prob3):
    print(c.name, "passed=", c.passed, c.measured)
