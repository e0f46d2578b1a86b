"""Grid-refinement study on smooth advection and Burgers problems.

Runs the filtered DG scheme at several polynomial degrees over a sequence of
uniformly refined periodic meshes and prints the L1/L2/Linf errors with their
observed orders. Expect the orders to settle near k+1.
"""

from tridg.harness import convergence_study


def table(name, k, levels):
    print(f"\n{name}, P{k} elements")
    print(f"{'N':>7} {'L1':>11} {'o1':>6} {'L2':>11} {'o2':>6} "
          f"{'Linf':>11} {'oinf':>6}")
    for r in convergence_study(name, k, levels):
        def fmt(o):
            return f"{o:6.2f}" if o == o else "     -"
        print(f"{r.n_cells:7d} {r.l1:11.3e} {fmt(r.order1)} "
              f"{r.l2:11.3e} {fmt(r.order2)} {r.linf:11.3e} {fmt(r.orderinf)}")


if __name__ == "__main__":
    for k in (1, 2, 3):
        table("advection_smooth", k, 4 if k == 3 else 5)
    for k in (1, 2):
        table("burgers_smooth", k, 4)
