"""Command-line client for running simulations.

By default the HTTP service is mounted in process; ``--server`` points
the same commands at a remote instance instead. Exit codes: 0 success,
1 invalid configuration or arguments, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import yaml

from .config import PRESETS
from .csvio import (
    record_from_dict,
    records_to_csv,
    result_to_json_obj,
    summary_from_dict,
    summary_to_csv,
    summary_to_dict,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class _CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise _CliError(EXIT_INVALID, message)


class _Client:
    """Minimal transport wrapper: in-process app or a remote server."""

    def __init__(self, server: str | None) -> None:
        if server is None:
            from fastapi.testclient import TestClient

            from .service import app

            self._http = TestClient(app)
        else:
            import httpx

            self._http = httpx.Client(base_url=server, timeout=600.0)

    def close(self) -> None:
        self._http.close()

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        import httpx

        try:
            response = self._http.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise _CliError(EXIT_IO, f"cannot reach the service: {exc}") from None
        if response.status_code == 400:
            raise _CliError(EXIT_INVALID, _format_detail(response.json().get("detail")))
        if response.status_code != 200:
            raise _CliError(
                EXIT_INVALID, f"service error {response.status_code}: {response.text}"
            )
        return response.json()

    def expand(
        self,
        yaml_text: str | None,
        preset: str | None,
        overrides: dict[str, Any],
    ) -> list[dict[str, Any]]:
        payload: dict[str, Any] = {"overrides": overrides}
        if preset is not None:
            payload["preset"] = preset
        else:
            payload["yaml"] = yaml_text if yaml_text is not None else "{}"
        return self._post("/config/expand", payload)["configs"]

    def simulate(self, config: dict[str, Any]) -> dict[str, Any]:
        return self._post("/simulate", {"config": config})


def _format_detail(detail: Any) -> str:
    if isinstance(detail, dict):
        message = str(detail.get("message", detail))
        line = detail.get("line")
        column = detail.get("column")
        if line is not None and column is not None and "line" not in message:
            message = f"{message} (line {line}, column {column})"
        return message
    return str(detail)


def _load_kind(load_string: str) -> str:
    return load_string if load_string in ("low", "high") else "custom"


def _slugs(base: str, configs: list[dict[str, Any]]) -> list[str]:
    names = [f"{base}_{c['cluster_size']}_{_load_kind(c['load'])}" for c in configs]
    if len(set(names)) == len(names):
        return names
    names = [
        f"{name}_{c['policy'].partition(':')[0]}" for name, c in zip(names, configs)
    ]
    if len(set(names)) == len(names):
        return names
    return [f"{name}_s{c['seed']}" for name, c in zip(names, configs)]


def _render(payload: dict[str, Any], fmt: str, summary_only: bool) -> str:
    summary = summary_from_dict(payload["summary"])
    if summary_only:
        if fmt == "csv":
            return summary_to_csv(summary)
        return json.dumps(summary_to_dict(summary), indent=2) + "\n"
    records = [record_from_dict(d) for d in payload["records"]]
    if fmt == "csv":
        return records_to_csv(records)
    return json.dumps(result_to_json_obj(records, summary), indent=2) + "\n"


def _json_obj(payload: dict[str, Any], summary_only: bool) -> dict[str, Any]:
    summary = summary_from_dict(payload["summary"])
    if summary_only:
        return summary_to_dict(summary)
    records = [record_from_dict(d) for d in payload["records"]]
    return result_to_json_obj(records, summary)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="regimesim",
        description="Simulate regime-aware energy management of a server cluster.",
    )
    parser.add_argument("--config", metavar="PATH", help="scenario YAML file")
    parser.add_argument(
        "--preset", choices=sorted(PRESETS), help="built-in scenario collection"
    )
    parser.add_argument("--seed", type=int, help="base RNG seed")
    parser.add_argument("--cluster-size", dest="cluster_size", type=int, help="server count")
    parser.add_argument("--load", help="initial load: low, high, or min:max")
    parser.add_argument("--intervals", type=int, help="intervals to simulate")
    parser.add_argument("--policy", help="policy name, optionally name:param=value,...")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--output", metavar="PATH", help="output file, or directory for sweeps")
    parser.add_argument(
        "--summary-only", action="store_true", help="emit the run summary instead of records"
    )
    parser.add_argument(
        "--message-log", dest="message_log", metavar="PATH",
        help="record protocol messages to this file",
    )
    parser.add_argument("--server", metavar="URL", help="use a remote service instead")
    parser.add_argument(
        "--dry-run", dest="dry_run", action="store_true",
        help="print the expanded run configurations and exit",
    )
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.cluster_size is not None:
        overrides["cluster_size"] = args.cluster_size
    if args.load is not None:
        overrides["load"] = args.load
    if args.intervals is not None:
        overrides["intervals"] = args.intervals
    if args.policy is not None:
        overrides["policy"] = args.policy
    if args.message_log is not None:
        overrides["message_log"] = True
    return overrides


def _main(argv: list[str] | None) -> int:
    args = _build_parser().parse_args(argv)
    if args.config is not None and args.preset is not None:
        raise _CliError(EXIT_INVALID, "give either --config or --preset, not both")

    yaml_text = None
    if args.config is not None:
        yaml_text = Path(args.config).read_text(encoding="utf-8")
    overrides = _overrides_from_args(args)

    client = _Client(args.server)
    try:
        configs = client.expand(yaml_text, args.preset, overrides)
        if args.dry_run:
            sys.stdout.write(yaml.safe_dump_all(configs, sort_keys=False))
            return EXIT_OK

        base = args.preset if args.preset is not None else "run"
        slugs = _slugs(base, configs)
        payloads = [client.simulate(config) for config in configs]
    finally:
        client.close()

    fmt = args.format
    if args.message_log is not None:
        lines: list[str] = []
        for slug, payload in zip(slugs, payloads):
            if len(payloads) > 1:
                lines.append(f"# run {slug}")
            lines.extend(payload.get("message_log") or [])
        log_path = Path(args.message_log)
        if log_path.parent != Path(""):
            log_path.parent.mkdir(parents=True, exist_ok=True)
        log_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    if args.output is not None:
        out = Path(args.output)
        if len(payloads) == 1 and not out.is_dir():
            if out.parent != Path(""):
                out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(_render(payloads[0], fmt, args.summary_only), encoding="utf-8")
        else:
            out.mkdir(parents=True, exist_ok=True)
            for slug, payload in zip(slugs, payloads):
                target = out / f"{slug}.{fmt}"
                target.write_text(_render(payload, fmt, args.summary_only), encoding="utf-8")
        return EXIT_OK

    if len(payloads) == 1:
        sys.stdout.write(_render(payloads[0], fmt, args.summary_only))
    elif fmt == "csv":
        for slug, payload in zip(slugs, payloads):
            sys.stdout.write(f"# run {slug}\n")
            sys.stdout.write(_render(payload, fmt, args.summary_only))
    else:
        runs = {
            slug: _json_obj(payload, args.summary_only)
            for slug, payload in zip(slugs, payloads)
        }
        sys.stdout.write(json.dumps({"runs": runs}, indent=2) + "\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return _main(argv)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
