"""Command-line client for the detection service.

Every subcommand speaks HTTP to the service endpoints. With ``--server`` the
requests go to a running instance; without it the app is mounted in-process,
so the CLI works standalone while exercising the exact same wire format.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(args, path: str, payload: dict) -> dict:
    with _client(args.server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            detail = {"error": resp.text}
        if isinstance(detail, dict) and "stage" in detail:
            message = f"[{detail['stage']}] {detail.get('error', '')}"
        elif isinstance(detail, dict):
            message = str(detail.get("error", detail))
        else:
            message = str(detail)
        raise SystemExit(f"error: {message}")
    return resp.json()


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("oodnorm.service:app", host=args.host, port=args.port)
    return 0


def cmd_select_block(args) -> int:
    doc = _post(
        args,
        "/select-block",
        {
            "model_dir": args.model,
            "manifest": args.manifest,
            "seed": args.seed,
            "max_samples": args.max_samples,
        },
    )
    _write_json(doc, args.out)
    return 0


def cmd_calibrate(args) -> int:
    doc = _post(
        args,
        "/calibrate",
        {
            "model_dir": args.model,
            "manifest": args.manifest,
            "method": args.method,
            "block": args.block,
            "temperature": args.temperature,
            "clip_percentile": args.clip_pct,
            "target_tpr": args.target_tpr,
        },
    )
    _write_json(doc, args.out)
    return 0


def cmd_score(args) -> int:
    if args.detector:
        detector = json.loads(Path(args.detector).read_text())
    elif args.method:
        detector = {
            "method": args.method,
            "selected_block": args.block,
            "temperature": args.temperature,
            "react_clip": args.react_clip,
        }
    else:
        raise SystemExit("error: score needs either --method or --detector")
    doc = _post(
        args,
        "/score",
        {"model_dir": args.model, "manifest": args.manifest, "detector": detector},
    )
    _write_json(doc, args.out)
    return 0


def cmd_evaluate(args) -> int:
    scores = json.loads(Path(args.scores).read_text())
    doc = _post(args, "/evaluate", {"scores": scores, "target_tpr": args.target_tpr})
    _write_json(doc, args.out)
    return 0


def cmd_run(args) -> int:
    doc = _post(
        args,
        "/run",
        {
            "model_dir": args.model,
            "manifest": args.manifest,
            "method": args.method,
            "out_dir": args.out_dir,
            "seed": args.seed,
            "target_tpr": args.target_tpr,
            "max_samples": args.max_samples,
            "temperature": args.temperature,
            "clip_percentile": args.clip_pct,
        },
    )
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_make_jigsaw(args) -> int:
    doc = _post(
        args,
        "/make-jigsaw",
        {
            "inputs": args.inputs,
            "manifest": args.manifest,
            "out_dir": args.out_dir,
            "seed": args.seed,
            "max_samples": args.max_samples,
        },
    )
    for path in doc["outputs"]:
        print(path)
    return 0


def cmd_forward(args) -> int:
    doc = _post(
        args,
        "/forward",
        {"model_dir": args.model, "input": args.input, "include_feature_norms": True},
    )
    _write_json(doc, args.out)
    return 0


def cmd_eval_to_csv(args) -> int:
    doc = json.loads(Path(args.eval).read_text())
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ood_set", "auroc", "fpr_at_tpr", "target_tpr", "n_id", "n_ood"])
        for name, row in doc.items():
            writer.writerow(
                [name, row["auroc"], row["fpr_at_tpr"], row["target_tpr"],
                 row.get("n_id", ""), row.get("n_ood", "")]
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodnorm", description=__doc__)
    parser.add_argument("--server", default=None, help="URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8403)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("select-block", help="rank blocks by mean norm ratio and pick one")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_select_block)

    p = sub.add_parser("calibrate", help="resolve detector parameters and threshold on id_train")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--block", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--clip-pct", type=float, default=None)
    p.add_argument("--target-tpr", type=float, default=0.95)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("score", help="score id_test and every OOD set")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", default=None)
    p.add_argument("--block", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--react-clip", type=float, default=None)
    p.add_argument("--detector", default=None, help="saved detector.json; overrides --method")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="AUROC / FPR from a saved score set")
    p.add_argument("--scores", required=True)
    p.add_argument("--target-tpr", type=float, default=0.95)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline: select, calibrate, score, evaluate")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", default="featurenorm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-tpr", type=float, default=0.95)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--clip-pct", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("make-jigsaw", help="emit shuffled pseudo-OOD tensors for inspection")
    p.add_argument("inputs", nargs="*", help="tensor files to shuffle")
    p.add_argument("--manifest", default=None, help="shuffle the manifest's id_train instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_make_jigsaw)

    p = sub.add_parser("forward", help="single-sample forward pass with per-block norms")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("eval-to-csv", help="flatten eval.json into a CSV table")
    p.add_argument("--eval", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_to_csv)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
