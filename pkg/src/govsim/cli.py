"""Command-line interface.

    govsim run <scenario.json> [--seed N] --out <dir>
    govsim verify <chain.db> [--report report.json]
    govsim inspect <chain.db> (--did X | --proposals | --audits | --balances)
    govsim convert --in legacy.csv --map mapping.json --out messages.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import GovSimError
from .interop import LegacyMapping, convert_legacy
from .ledger import load_chain, save_chain, verify_chain
from .report import ChainFold, export_report
from .simctl import run_scenario, verify_run


def _cmd_run(args: argparse.Namespace) -> int:
    source: str | dict = args.scenario
    if args.rules:
        raw = json.loads(Path(args.scenario).read_text("utf-8"))
        pack = json.loads(Path(args.rules).read_text("utf-8"))
        if not isinstance(pack, list):
            print("error: rule-pack file must be a JSON array of rule modules",
                  file=sys.stderr)
            return 1
        raw.setdefault("rules", []).extend(pack)
        source = raw
    result = run_scenario(source, seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_chain(result.chain, out_dir / "chain.db")
    export_report(result.report, out_dir / "report.json", "json")
    if args.csv:
        export_report(result.report, out_dir / "report.csv", "csv")
    print(f"sealed {len(result.chain.blocks)} blocks, root {result.root_hash}")
    print(f"wrote {out_dir / 'chain.db'} and {out_dir / 'report.json'}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    verification, report_matches = verify_run(args.chain, args.report)
    if not verification.ok:
        print(f"FAIL at height {verification.failed_height}: {verification.reason}")
        return 1
    if report_matches is False:
        print("FAIL: report does not match the chain fold")
        return 1
    extra = "" if report_matches is None else " (report consistent)"
    print(f"OK{extra}")
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    chain = load_chain(args.chain)
    verification = verify_chain(
        chain.blocks, chain.authorities, chain.quorum, chain.scheme_name)
    if not verification.ok:
        print(f"refusing to inspect a broken chain: height "
              f"{verification.failed_height} ({verification.reason})", file=sys.stderr)
        return 1
    fold = ChainFold(chain.blocks)
    if args.audits:
        audits = fold.audits
        if args.did:
            audits = [a for a in audits if a["did"] == args.did]
        out = audits
    elif args.did:
        record = fold.dids.get(args.did)
        if record is None:
            print(f"unknown did: {args.did}", file=sys.stderr)
            return 1
        out = {"record": record, "history": fold.did_events.get(args.did, [])}
    elif args.proposals:
        out = [fold.proposals[k] for k in sorted(fold.proposals)]
    elif args.balances:
        from .encoding import canonical_json_bytes, sha256

        snapshot = fold.tokens.snapshot()
        out = {
            "snapshot": snapshot,
            "conserved": fold.tokens.allocated() == fold.tokens.total_supply,
            "conservation_checksum": sha256(canonical_json_bytes(snapshot)).hex(),
        }
    else:
        out = {
            "blocks": len(chain.blocks),
            "events": sum(len(b.events) for b in chain.blocks),
            "root_hash": chain.head_hash.hex(),
        }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def _cmd_convert(args: argparse.Namespace) -> int:
    mapping = LegacyMapping.from_json(json.loads(Path(args.map).read_text("utf-8")))
    rows = Path(args.infile).read_text("utf-8").splitlines()
    messages = [convert_legacy(row, mapping).to_json() for row in rows if row]
    Path(args.out).write_text(json.dumps(messages, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"converted {len(messages)} rows -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="govsim",
        description="Deterministic AI-governance ledger simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write chain + report")
    run_p.add_argument("scenario")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    run_p.add_argument("--rules", default=None,
                       help="rule-pack JSON (array of rule modules) appended "
                            "to the scenario's rules")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--csv", action="store_true", help="also export report.csv")
    run_p.set_defaults(func=_cmd_run)

    verify_p = sub.add_parser("verify", help="verify a chain file (exit 0/1)")
    verify_p.add_argument("chain")
    verify_p.add_argument("--report", default=None,
                          help="report.json to check against the fold")
    verify_p.set_defaults(func=_cmd_verify)

    inspect_p = sub.add_parser("inspect", help="query a chain file as JSON")
    inspect_p.add_argument("chain")
    inspect_p.add_argument("--did",
                           help="one system record and its history; with "
                                "--audits, filters the audit list")
    inspect_p.add_argument("--proposals", action="store_true")
    inspect_p.add_argument("--audits", action="store_true")
    inspect_p.add_argument("--balances", action="store_true")
    inspect_p.set_defaults(func=_cmd_inspect)

    convert_p = sub.add_parser("convert", help="legacy CSV -> canonical messages")
    convert_p.add_argument("--in", dest="infile", required=True)
    convert_p.add_argument("--map", required=True)
    convert_p.add_argument("--out", required=True)
    convert_p.set_defaults(func=_cmd_convert)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GovSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
