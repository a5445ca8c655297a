import numpy as np, time
from front_forge.reaction import make_cubic
from front_forge.profile import solve_profile
from front_forge.geometry import symmetric_pair
from front_forge.bounds import admissible_params, eval_lower
from front_forge import harness as H
from front_forge.pde import GridSpec, SolverConfig, solve_cauchy

spec = make_cubic(0.25)
prof = solve_profile(spec, tol_c=1e-10)
pair = symmetric_pair(np.pi / 12, prof.c_f)
prob = H.Problem(spec, prof, pair)

# moving frame at the apex speed so long horizons stay in-box
c_apex = prof.c_f / np.sin(np.pi / 12)
grid = GridSpec(dims=(256, 256), spacing=(0.2, 0.2), origin=(-25.5, -20.0))
cfg = SolverConfig(cfl_fraction=0.45, reaction_lipschitz=spec.L, frame_speed=c_apex)
ev = H._lower_boundary_eval(prob)

fields = {}
for n in (5, 10, 20, 40):
    t0 = time.time()
    fields[n] = solve_cauchy(ev, -float(n), 0.0, grid, cfg, ev, spec, t_ref=0.0)
    print(f"n={n}: {time.time()-t0:.1f} s", flush=True)

ns = sorted(fields)
for a, b in zip(ns, ns[1:]):
    diff = fields[b].values - fields[a].values
    i, j = np.unravel_index(np.argmax(np.abs(diff)), diff.shape)
    print(f"sup|u_{b} - u_{a}| = {np.max(np.abs(diff)):.6f} at node ({i},{j}) "
          f"x={grid.origin[0]+0.2*i:.1f} y={grid.origin[1]+0.2*j:.1f}  min={diff.min():.2e}")
