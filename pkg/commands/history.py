import json

import database as db
from utils.errors import UsageError


def run_history(args):
    """Lists recorded runs, prints one stored report with --show <id>, or one source's versions."""
    if args.show:
        report = db.get_run_report(args.show)
        if report is None:
            print(f"No recorded run with id {args.show}")
            return 1
        print(json.dumps(report, indent=2, ensure_ascii=False))
        return 0

    if args.versions:
        if not args.only:
            raise UsageError("--versions needs --only <command>")
        df = db.get_run_history(args.only, args.versions)
        if df.empty:
            print(f"No recorded '{args.only}' runs for {args.versions}.")
            return 0
        print(df.to_string(index=False))
        return 0

    df = db.get_runs_list(command=args.only)
    if df.empty:
        print("No recorded runs.")
        return 0
    print(df.to_string(index=False))
    return 0
