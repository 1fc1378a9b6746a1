"""Development calibration: run the desk-scale evaluation configs and print
the per-attribute patterns the acceptance suite asserts."""

import sys
import time

import rdsvar as rv


def report_patterns(rep, label):
    attrs = sorted({r.attribute for r in rep.rows})
    print(f"=== {label} ===")
    print("diagnostics", rep.diagnostics)
    rows95 = {(r.attribute, r.method): r for r in rep.rows if abs(r.level - 0.95) < 1e-9}
    tree_rb_pos = 0
    nb_smaller = 0
    width_order = 0
    width_closer = 0
    nb_cov_in = 0
    nb_closer_cov = 0
    for a in attrs:
        nb = rows95[(a, "neighbourhood")]
        tr = rows95[(a, "tree")]
        print(
            f"{a:12s} treeRB={tr.rel_bias:8.3f} nbRB={nb.rel_bias:8.3f} | "
            f"treeW={tr.mean_width:.4f} nbW={nb.mean_width:.4f} expW={nb.expected_width:.4f} | "
            f"treeCov={tr.coverage:.3f} nbCov={nb.coverage:.3f} mu={rep.truths[a]:.3f}"
        )
        tree_rb_pos += tr.rel_bias > 0
        nb_smaller += abs(nb.rel_bias) < tr.rel_bias
        width_order += tr.mean_width > nb.mean_width
        width_closer += abs(nb.mean_width - nb.expected_width) < abs(tr.mean_width - tr.expected_width)
        nb_cov_in += 0.90 <= nb.coverage <= 0.98
        nb_closer_cov += abs(nb.coverage - 0.95) <= abs(tr.coverage - 0.95)
    k = len(attrs)
    print(f"tree RB>0: {tree_rb_pos}/{k}  |nbRB|<treeRB: {nb_smaller}/{k}  "
          f"treeW>nbW: {width_order}/{k}  nb width closer: {width_closer}/{k}  "
          f"nbCov in [.90,.98]: {nb_cov_in}/{k}  nb closer cov: {nb_closer_cov}/{k}")


def main():
    pop_seed = int(sys.argv[1]) if len(sys.argv) > 1 else 20250810
    master = int(sys.argv[2]) if len(sys.argv) > 2 else 777
    t0 = time.time()
    g, attrs = rv.make_study_population(4000, seed=pop_seed)
    print(f"population: {g.n_nodes} nodes, {g.n_edges} edges ({time.time()-t0:.1f}s)")
    print("truths", {a: round(rv.true_proportion(g, attrs, a), 3) for a in attrs.column_names})

    pmf = (1 / 3, 1 / 6, 1 / 6, 1 / 3)
    t0 = time.time()
    cfg5 = rv.ExperimentConfig(
        design=rv.RdsDesign(10, 3, pmf, 500),
        attributes=tuple(attrs.column_names),
        n_replications=200,
        n_bootstrap=200,
        master_seed=master,
        n_width_reference=1000,
    )
    rep5 = rv.run_full(cfg5, g, attrs, workers=2)
    print(f"criterion 5/6 run: {time.time()-t0:.1f}s")
    report_patterns(rep5, "n=500 R=200 B=200")

    t0 = time.time()
    cfg7 = rv.ExperimentConfig(
        design=rv.RdsDesign(10, 3, pmf, 1000),
        attributes=tuple(attrs.column_names),
        n_replications=300,
        n_bootstrap=500,
        master_seed=master + 1,
        n_width_reference=1000,
    )
    rep7 = rv.run_full(cfg7, g, attrs, workers=2)
    print(f"criterion 7 run: {time.time()-t0:.1f}s")
    report_patterns(rep7, "n=1000 R=300 B=500")


if __name__ == "__main__":
    main()
