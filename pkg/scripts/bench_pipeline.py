"""Time the in-memory pipeline (embed + identify + analyze, TOP mode) on a large synthetic world.

Prints one JSON object: world size, per-stage seconds and peak RSS. World
generation is reported separately and not counted against the pipeline.

    python3 scripts/bench_pipeline.py --links 1000000
"""

from __future__ import annotations

import argparse
import json
import resource
import time

from xresil.analysis import cross_layer_impact, intra_inter_impact, risk_profile
from xresil.embedding import embed
from xresil.hazard import build_model
from xresil.identify import Identifier, Scenario
from xresil.model import PredictionMode
from xresil.synth import WorldSpec, generate_world


def world_spec(links: int, seed: int) -> WorldSpec:
    # scale the physical layer with the link count, roughly like a global dataset
    return WorldSpec(
        seed=seed,
        n_countries=150,
        n_stations=max(40, min(1400, links // 700)),
        n_cables=max(20, min(500, links // 2000)),
        n_links=links,
        parallel_cable_groups=20,
        ases_per_country=60,
        n_hot_spots=40,
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--links", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    t0 = time.perf_counter()
    bundle = generate_world(world_spec(args.links, args.seed))
    t_gen = time.perf_counter() - t0

    stages = {}
    t = time.perf_counter()
    maps = embed(bundle, PredictionMode.TOP)
    stages["embed"] = time.perf_counter() - t

    t = time.perf_counter()
    model = build_model("hazard", bundle.grids["hazard"], 6.0, "above", 10.0)
    impacted = Identifier(bundle).identify(Scenario(model))
    stages["identify"] = time.perf_counter() - t

    t = time.perf_counter()
    report = cross_layer_impact(impacted, maps, bundle)
    risk_profile(impacted, maps.cs_nc)
    risk_profile(impacted, maps.cs_as)
    intra_inter_impact(impacted, maps.cs_nc, bundle)
    stages["analyze"] = time.perf_counter() - t

    rss_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    print(
        json.dumps(
            {
                "links": len(bundle.records),
                "segments": len(bundle.segments),
                "stations": len(bundle.stations),
                "impacted_segments": len(impacted.segments),
                "ip_link_fraction": report.ip_links.fraction,
                "generate_s": round(t_gen, 3),
                "stages_s": {k: round(v, 3) for k, v in stages.items()},
                "pipeline_s": round(sum(stages.values()), 3),
                "peak_rss_mb": round(rss_kb / 1024, 1),
            },
            sort_keys=True,
        )
    )


if __name__ == "__main__":
    main()
