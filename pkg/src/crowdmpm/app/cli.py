"""Command-line front end. Thin wrappers over the library:

  crowdmpm simulate --scenario S.json --out DIR [--steps N --seed K]
  crowdmpm train    --flows MANIFEST --config C.json --out MODEL.json
  crowdmpm analyze  --frames DIR --op curl|div|stress --out DIR [--normalized]
  crowdmpm flow     convert|noise ...
  crowdmpm serve    [--port P --data-dir DIR]

Exit codes: 0 success, 2 invalid scenario or input, 3 runtime instability.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from ..errors import (
    CrowdMPMError,
    Diverged,
    InvalidScenario,
    NonFiniteGradient,
    StabilityViolation,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNSTABLE = 3


def cmd_simulate(args) -> int:
    from .runner import run
    from .scenario import load_scenario

    sc = load_scenario(args.scenario)
    overrides = {}
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        sc = load_scenario({**sc.model_dump(), **overrides})
    result = run(sc, args.out)
    r = result.report
    print(
        f"simulated {r['steps_done']}/{r['steps_requested']} steps, "
        f"{len(r['frames'])} frames, {r['exited_total']} exited -> {args.out}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    from ..flow import read_sequence
    from ..learn import ParamModel, TrainConfig, sample_particles_from_flow, train

    with open(args.config) as fh:
        doc = json.load(fh)
    train_doc = dict(doc.get("train", {}))
    if "train_only" in train_doc:
        train_doc["train_only"] = tuple(train_doc["train_only"])
    cfg = TrainConfig(**train_doc)

    seq = read_sequence(args.flows)
    state0 = sample_particles_from_flow(
        seq.frames[0], seq.grid_spec(), cfg.r_a, cfg.r_b, seed=cfg.seed
    )

    model_doc = doc.get("model", {})
    rep = model_doc.get("representation", "global-scalars")
    init = model_doc.get("init", {})
    if rep == "global-scalars":
        model = ParamModel.global_scalars(**init)
    elif rep == "per-particle-table":
        model = ParamModel.per_particle_table(state0.n, **init)
    elif rep == "neighborhood-features":
        model = ParamModel.neighborhood_features(
            hidden=model_doc.get("hidden", 32),
            domain_scale=model_doc.get("domain_scale", 100.0),
            seed=model_doc.get("seed", 0),
            **init,
        )
    else:
        raise InvalidScenario(f"unknown model representation {rep!r}")

    result = train(seq, model, cfg, state0=state0)
    result.model.save(args.out)
    if result.history:
        first, last = result.history[0]["loss"], result.history[-1]["loss"]
        print(f"trained {len(result.history)} iterations, loss {first:g} -> {last:g}")
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    from ..analyze import curl_map, divergence_map, stress_map, write_map
    from ..core.grids import read_field_binary
    from ..material import MaterialParams
    from ..mpm import read_snapshot

    run_dir = args.frames
    fields_dir = os.path.join(run_dir, "fields")
    frames_dir = os.path.join(run_dir, "frames")

    written = 0
    if args.op in ("curl", "div"):
        op = curl_map if args.op == "curl" else divergence_map
        names = sorted(os.listdir(fields_dir)) if os.path.isdir(fields_dir) else []
        for name in names:
            if not name.endswith(".cmf1"):
                continue
            field = read_field_binary(os.path.join(fields_dir, name))
            stem = f"{args.op}_{name.split('_')[-1].split('.')[0]}"
            write_map(op(field, normalized=args.normalized), args.out, stem)
            written += 1
    else:  # stress
        scenario_path = os.path.join(run_dir, "scenario.json")
        eps, k = 1.0, 1.0
        if os.path.exists(scenario_path):
            with open(scenario_path) as fh:
                mat = json.load(fh).get("material", {})
            eps, k = float(mat.get("epsilon", 1.0)), float(mat.get("k", 1.0))
        material = MaterialParams(epsilon=eps, k=k)
        names = sorted(os.listdir(frames_dir)) if os.path.isdir(frames_dir) else []
        spec = None
        for name in names:
            if not name.endswith(".cmp1"):
                continue
            state = read_snapshot(os.path.join(frames_dir, name))
            if spec is None:
                spec = _spec_for_run(run_dir)
            stem = f"stress_{name.split('_')[-1].split('.')[0]}"
            write_map(stress_map(state, material, spec), args.out, stem)
            written += 1

    if written == 0:
        print(f"nothing to analyze under {run_dir}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wrote {written} {args.op} maps to {args.out}")
    return EXIT_OK


def _spec_for_run(run_dir):
    from ..core.grids import GridSpec, read_field_binary

    fields_dir = os.path.join(run_dir, "fields")
    if os.path.isdir(fields_dir):
        for name in sorted(os.listdir(fields_dir)):
            if name.endswith(".cmf1"):
                return read_field_binary(os.path.join(fields_dir, name)).spec
    report_path = os.path.join(run_dir, "report.json")
    with open(report_path) as fh:
        g = json.load(fh)["grid"]
    return GridSpec(g["nx"], g["ny"], g["dx"], tuple(g["origin"]))


def cmd_flow_convert(args) -> int:
    from ..core.grids import write_field_binary
    from ..flow import flow_to_field, read_sequence

    seq = read_sequence(args.flows)
    spec = seq.grid_spec()
    os.makedirs(args.out, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        field = flow_to_field(frame, spec)
        write_field_binary(field, os.path.join(args.out, f"velocity_{i:04d}.cmf1"))
    meta = {"dx": seq.dx, "timestamps": [f.timestamp for f in seq.frames]}
    with open(os.path.join(args.out, "fields_manifest.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    print(f"converted {len(seq.frames)} flow frames to fields in {args.out}")
    return EXIT_OK


def cmd_flow_noise(args) -> int:
    from ..flow import FlowSequence, NoiseSpec, inject_noise, read_sequence, write_sequence

    seq = read_sequence(args.flows)
    spec = NoiseSpec(
        kind=args.kind, std=args.std, prob=args.prob,
        w_g=args.w_gaussian, w_u=args.w_uniform, seed=args.seed,
    )
    corrupted = [
        inject_noise(frame, dataclasses.replace(spec, seed=spec.seed + i))
        for i, frame in enumerate(seq.frames)
    ]
    out_seq = FlowSequence(
        frames=corrupted, dx=seq.dx, width=seq.width, height=seq.height
    )
    manifest = write_sequence(out_seq, args.out)
    print(f"wrote corrupted sequence to {manifest}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crowdmpm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario to a directory")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--steps", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument(
        "--deterministic", action="store_true",
        help="accepted for compatibility; runs are always deterministic",
    )
    sim.set_defaults(fn=cmd_simulate)

    tr = sub.add_parser("train", help="fit parameters to a flow sequence")
    tr.add_argument("--flows", required=True, help="sequence manifest.json")
    tr.add_argument("--config", required=True, help="training config JSON")
    tr.add_argument("--out", required=True, help="output model JSON")
    tr.set_defaults(fn=cmd_train)

    an = sub.add_parser("analyze", help="scalar maps from a run directory")
    an.add_argument("--frames", required=True, help="run directory")
    an.add_argument("--op", required=True, choices=("curl", "div", "stress"))
    an.add_argument("--out", required=True)
    an.add_argument("--normalized", action="store_true")
    an.set_defaults(fn=cmd_analyze)

    fl = sub.add_parser("flow", help="optical-flow utilities")
    fsub = fl.add_subparsers(dest="flow_command", required=True)
    conv = fsub.add_parser("convert", help=".flo sequence -> grid fields")
    conv.add_argument("--flows", required=True, help="sequence manifest.json")
    conv.add_argument("--out", required=True)
    conv.set_defaults(fn=cmd_flow_convert)
    noise = fsub.add_parser("noise", help="corrupt a .flo sequence")
    noise.add_argument("--flows", required=True)
    noise.add_argument("--out", required=True)
    noise.add_argument("--kind", required=True, choices=("gaussian", "uniform", "mixture"))
    noise.add_argument("--std", type=float, default=0.0)
    noise.add_argument("--prob", type=float, default=0.0)
    noise.add_argument("--w-gaussian", type=float, default=0.5)
    noise.add_argument("--w-uniform", type=float, default=0.5)
    noise.add_argument("--seed", type=int, default=0)
    noise.set_defaults(fn=cmd_flow_noise)

    srv = sub.add_parser("serve", help="start the studio HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--data-dir", default=None)
    srv.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InvalidScenario as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (StabilityViolation, Diverged, NonFiniteGradient) as e:
        print(f"unstable: {e}", file=sys.stderr)
        return EXIT_UNSTABLE
    except FileNotFoundError as e:
        print(f"missing input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except CrowdMPMError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
