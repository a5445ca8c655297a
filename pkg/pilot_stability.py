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
params = admissible_params(spec, prof, pair, C_emp=38.0)

c_apex = prof.c_f / np.sin(alpha0)
grid = GridSpec(dims=(256, 256), spacing=(0.2, 0.2), origin=(-25.5, -20.0))
cfg = SolverConfig(cfl_fraction=0.45, reaction_lipschitz=spec.L, frame_speed=c_apex)
T = 30.0 / prof.c_f
t0 = time.time()
res = H.stability_experiment(prob, params, grid, cfg, build_start=-20.0, T_end=T,
                             bump_amp=0.2, bump_width=3.0, n_checkpoints=20, base="lower")
print("elapsed %.1f s, T=%.2f" % (time.time() - t0, T))
for t, d in zip(res.times, res.deviations):
    print(f"t={t:7.2f}  D={d:.6f}")
print("ratio D(T)/D(0) =", res.deviations[-1] / res.d0)
