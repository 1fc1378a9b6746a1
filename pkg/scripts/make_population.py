"""Write a synthetic study population (edge list + attribute CSV) to disk.

Usage: python scripts/make_population.py OUTDIR [n_nodes] [seed]
"""

import sys
from pathlib import Path

import rdsvar as rv


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 1
    outdir = Path(sys.argv[1])
    n_nodes = int(sys.argv[2]) if len(sys.argv) > 2 else 4000
    seed = int(sys.argv[3]) if len(sys.argv) > 3 else 20250810
    outdir.mkdir(parents=True, exist_ok=True)

    g, attrs = rv.make_study_population(n_nodes, seed=seed)
    edges = outdir / "edges.txt"
    with edges.open("w") as fh:
        fh.write(f"# synthetic power-law population, {g.n_nodes} nodes, seed {seed}\n")
        for i in range(g.n_nodes):
            for j in g.neighbors(i):
                if i < int(j):
                    fh.write(f"{g.node_ids[i]} {g.node_ids[int(j)]}\n")
    attr_path = outdir / "attributes.csv"
    with attr_path.open("w") as fh:
        fh.write("id," + ",".join(attrs.column_names) + "\n")
        for i, nid in enumerate(g.node_ids):
            fh.write(nid + "," + ",".join(str(int(v)) for v in attrs.values[i]) + "\n")
    print(f"{edges} ({g.n_nodes} nodes, {g.n_edges} edges)")
    print(f"{attr_path} ({len(attrs.column_names)} columns)")
    for a in attrs.column_names:
        print(f"  {a}: prevalence {rv.true_proportion(g, attrs, a):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
