import numpy as np, time
from front_forge.reaction import make_cubic
from front_forge.profile import solve_profile
from front_forge.geometry import symmetric_pair
from front_forge.bounds import admissible_params
from front_forge import harness as H
from front_forge.pde import GridSpec, SolverConfig

spec = make_cubic(0.25)
prof = solve_profile(spec, tol_c=1e-10)
alpha0 = np.pi / 12
pair = symmetric_pair(alpha0, prof.c_f)
prob = H.Problem(spec, prof, pair)
cal = H.calibrate_surface_constants(prob, seed=0, n_samples=1500)
print("C_emp(pi/12 pair):", cal["C_emp"])
params = admissible_params(spec, prof, pair, C_emp=cal["C_emp"])

grid = GridSpec(dims=(512, 512), spacing=(0.1, 0.1), origin=(-25.55, -34.0))
cfg = SolverConfig(cfl_fraction=0.45, reaction_lipschitz=spec.L)
t0 = time.time()
res = H.construct_entire(prob, params, grid, cfg, [-5, -10, -20, -40],
                         snapshot_times=(-0.5, 0.0), threads=4)
print("construct elapsed %.1f s" % (time.time() - t0), flush=True)
print("monotone_min:", res.monotone_min)
print("increments:", res.increments)
print("ratios:", [a / b for a, b in zip(res.increments, res.increments[1:])])
print("sandwich_low:", res.sandwich_low, "sandwich_high:", res.sandwich_high, "beta:", res.beta)
for bw in (2.5, 5.0):
    print(f"--- bucket width {bw}")
    for c in H.verify_asymptotics(res, prob, params, bucket_width=bw):
        print(c.name, "passed=", c.passed,
              {k: (np.round(np.asarray(v, dtype=float), 8).tolist()
                   if isinstance(v, (list, float, np.floating)) else v)
               for k, v in c.measured.items()})
for c in H.verify_monotonicity(res, prob):
    print(c.name, "passed=", c.passed, c.measured)
