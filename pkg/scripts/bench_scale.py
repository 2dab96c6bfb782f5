"""Time preprocessing and a single explain query on a synthetic dataset.

    python scripts/bench_scale.py --exemplars 200 --jobs 4
"""

import argparse
import time

from semcf.costs import CostModel
from semcf.explain import counterfactual
from semcf.kb import build_tbox_graph, dataset_from_dict
from semcf.store import preprocess
from semcf.synthetic import synthetic_dataset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--exemplars", type=int, default=200)
    ap.add_argument("--nodes", type=int, default=10, help="nodes per component, exemplar included")
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = dataset_from_dict(synthetic_dataset(args.exemplars, nodes_per_component=args.nodes, seed=args.seed))
    cm = CostModel(build_tbox_graph(ds))
    t = time.perf_counter()
    cache = preprocess(ds, cm, jobs=args.jobs)
    elapsed = time.perf_counter() - t
    print(f"preprocess: {len(ds.exemplars)} exemplars, {len(cache.paths)} stored paths, "
          f"{elapsed:.1f} s at {args.jobs} jobs")

    source = ds.exemplars[0]
    target = next(c for c in sorted(ds.classes) if c != ds.prediction(source))
    cache.lookups = 0
    t = time.perf_counter()
    [x] = counterfactual(cache, ds, source, target)
    print(f"explain {source} -> {target}: {x.counterfactual} at cost {x.edits.total_cost}, "
          f"{(time.perf_counter() - t) * 1e3:.1f} ms, {cache.lookups} lookups")


if __name__ == "__main__":
    main()
