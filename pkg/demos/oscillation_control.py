"""Effect of the modal damping filter on a discontinuous Burgers problem.

Runs the oblique Riemann problem with and without the filter and reports the
solution overshoot beyond the invariant interval of the initial data. The
unfiltered scheme overshoots visibly near the shocks; the filtered one stays
essentially inside the interval without any problem-dependent tuning.
"""

import numpy as np

from tridg.harness import solve_problem

if __name__ == "__main__":
    for oe_mode in ("off", "componentwise"):
        op, res = solve_problem("burgers_riemann1", 2, level=1,
                                oe_mode=oe_mode, t_end=0.25)
        vals = op.interior_values(res.state.coeffs)[..., 0]
        over = max(vals.max() - 0.8, -1.0 - vals.min(), 0.0)
        label = "filtered" if oe_mode != "off" else "bare DG "
        print(f"{label}: range [{vals.min():+.4f}, {vals.max():+.4f}], "
              f"overshoot beyond [-1, 0.8]: {over:.4f} "
              f"({res.steps} steps)")
    print("\ninitial data range is [-1, 0.8]; overshoot ~0 means the "
          "discontinuities are captured without spurious oscillations")
