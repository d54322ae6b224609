"""Command-line entry point.

Config files are flat ``key = value`` lines with ``#`` comments. Time-valued
keys carry their unit in the name (``_ms`` or ``_s``). Missing keys take the
defaults of `ScenarioConfig`.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import analysis
from .errors import ConfigError
from .obu import ElectionStrategy, ObuParams
from .sim import Protocol, ScenarioConfig, atomic_write, render_csv, run, sweep

PROB_HEADER = ("n", "closed_form", "monte_carlo", "stderr")
ELECTION_HEADER = ("k", "p", "strategy", "exact", "verifiers", "frequency")


@dataclass(frozen=True)
class _Key:
    attr: str
    kind: str  # "float", "int", "enum", "str", "optional_float"
    scale: int | Fraction = 1  # config value / scale = internal value
    enum: type | None = None
    obu: bool = False


CONFIG_KEYS: dict[str, _Key] = {
    "area_m": _Key("area", "float"),
    "grid_spacing_m": _Key("grid_spacing", "float"),
    "zone_size_m": _Key("zone_size", "float"),
    "vehicle_count": _Key("vehicle_count", "int"),
    "speed_min_kmh": _Key("speed_min", "float"),
    "speed_max_kmh": _Key("speed_max", "float"),
    "coverage_radius_m": _Key("coverage_radius", "float"),
    "bandwidth_mbps": _Key("bandwidth", "float", scale=Fraction(1, 10**6)),
    "duration_s": _Key("duration", "float"),
    "warmup_s": _Key("warmup", "float"),
    "seed": _Key("seed", "int"),
    "protocol": _Key("protocol", "enum", enum=Protocol),
    "verify_cost_ms": _Key("verify_cost", "float", scale=1000),
    "sign_cost_ms": _Key("sign_cost", "float", scale=1000),
    "rx_buffer_capacity": _Key("rx_buffer_capacity", "int"),
    "delta_max_s": _Key("delta_max", "float"),
    "cert_lifetime_s": _Key("cert_lifetime", "float"),
    "mobility_dt_s": _Key("mobility_dt", "float"),
    "forger_fraction": _Key("forger_fraction", "float"),
    "revocation_time_s": _Key("revocation_time", "optional_float"),
    "crypto_scheme": _Key("crypto_scheme", "str"),
    "p": _Key("p", "int", obu=True),
    "delta_t_ms": _Key("delta_t", "float", scale=1000, obu=True),
    "theta_s": _Key("theta", "float", obu=True),
    "beacon_period_ms": _Key("beacon_period", "float", scale=1000, obu=True),
    "neighbor_timeout_s": _Key("neighbor_timeout", "float", obu=True),
    "election_strategy": _Key("election_strategy", "enum", enum=ElectionStrategy, obu=True),
}


def _parse_value(name: str, key: _Key, text: str):
    if key.kind == "enum":
        try:
            return key.enum(text)
        except ValueError:
            choices = ", ".join(m.value for m in key.enum)
            raise ConfigError(name, f"expected one of {choices}, got {text!r}") from None
    if key.kind == "str":
        return text
    if key.kind == "optional_float" and text.lower() == "none":
        return None
    if key.kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(name, f"expected an integer, got {text!r}") from None
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(name, f"expected a number, got {text!r}") from None
    return float(value / key.scale)


def _render_value(key: _Key, value) -> str:
    if value is None:
        return "none"
    if key.kind == "enum":
        return value.value
    if key.kind in ("int", "str"):
        return str(value)
    scaled = Fraction(value) * key.scale
    short = repr(float(scaled))
    if float(Fraction(short) / key.scale) == value:
        return short
    for digits in range(1, 18):
        text = f"{float(scaled):.{digits}g}"
        if float(Fraction(text) / key.scale) == value:
            return text
    return f"{scaled.numerator}/{scaled.denominator}"  # exact, always round-trips


def _split_line(line: str, lineno: int | str) -> tuple[str, str] | None:
    line = line.split("#", 1)[0].strip()
    if not line:
        return None
    if "=" not in line:
        raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
    name, value = (part.strip() for part in line.split("=", 1))
    if name not in CONFIG_KEYS:
        raise ConfigError(name, "unknown config key")
    return name, value


def parse_config(text: str, overrides: Sequence[str] = ()) -> ScenarioConfig:
    """Build a ScenarioConfig from config text plus ``key=value`` overrides."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        item = _split_line(line, lineno)
        if item is not None:
            values[item[0]] = item[1]
    for ov in overrides:
        item = _split_line(ov, "--set")
        if item is not None:
            values[item[0]] = item[1]

    top: dict = {}
    obu: dict = {}
    speed = list(ScenarioConfig.speed_range_kmh)
    for name, text_value in values.items():
        key = CONFIG_KEYS[name]
        value = _parse_value(name, key, text_value)
        if key.attr == "speed_min":
            speed[0] = value
        elif key.attr == "speed_max":
            speed[1] = value
        elif key.obu:
            obu[key.attr] = value
        else:
            top[key.attr] = value
    top["speed_range_kmh"] = tuple(speed)
    if obu:
        try:
            top["obu_params"] = ObuParams(**obu)
        except ValueError as exc:
            attr = str(exc).split(" ", 1)[0]
            field = next((n for n, k in CONFIG_KEYS.items() if k.obu and k.attr == attr), "obu_params")
            raise ConfigError(field, str(exc)) from None
    try:
        return ScenarioConfig(**top)
    except ConfigError as exc:
        # report under the config-file key name
        name = next((n for n, k in CONFIG_KEYS.items() if k.attr == exc.field), exc.field)
        raise ConfigError(name, str(exc).split(": ", 1)[-1]) from None


def render_config(config: ScenarioConfig) -> str:
    lines = []
    for name, key in CONFIG_KEYS.items():
        if key.attr == "speed_min":
            value = config.speed_range_kmh[0]
        elif key.attr == "speed_max":
            value = config.speed_range_kmh[1]
        elif key.obu:
            value = getattr(config.obu_params, key.attr)
        else:
            value = getattr(config, key.attr)
        lines.append(f"{name} = {_render_value(key, value)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# main
# ---------------------------------------------------------------------------


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="coopauth", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        p.add_argument("--config", help="scenario file (key = value lines)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--seed", type=int)
        p.add_argument("-o", "--output", default="-", help="CSV path, '-' for stdout")

    p_run = sub.add_parser("run", help="simulate one scenario")
    scenario_args(p_run)
    p_run.add_argument("--trace", help="write the per-event trace to this file")

    p_sweep = sub.add_parser("sweep", help="simulate one scenario per vehicle count")
    scenario_args(p_sweep)
    p_sweep.add_argument("--loads", required=True, help="comma-separated vehicle counts")
    p_sweep.add_argument("--workers", type=int, default=1)

    p_prob = sub.add_parser("analyze-prob", help="both-sides verifier probability table")
    p_prob.add_argument("--n-max", type=int, default=30)
    p_prob.add_argument("--trials", type=int, default=100_000)
    p_prob.add_argument("--seed", type=int, default=0)
    p_prob.add_argument("-o", "--output", default="-")

    p_el = sub.add_parser("analyze-election", help="verifier-count distributions")
    p_el.add_argument("--k-max", type=int, default=12)
    p_el.add_argument("--p-max", type=int, default=6)
    p_el.add_argument("--trials", type=int, default=1000)
    p_el.add_argument("--seed", type=int, default=0)
    p_el.add_argument("--strategy", choices=["paper", "pnearest", "both"], default="both")
    p_el.add_argument("-o", "--output", default="-")
    return ap


def _load_config(args) -> ScenarioConfig:
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return parse_config(text, overrides)


def _csv(header, rows) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def _cmd_run(args) -> str:
    config = _load_config(args)
    if args.trace:
        with open(args.trace, "w") as fh:
            report = run(config, trace=fh)
    else:
        report = run(config)
    print(f"trace sha256 {report.trace_hash}", file=sys.stderr)
    return render_csv([report])


def _parse_loads(text: str) -> list[int]:
    try:
        loads = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("loads", f"expected comma-separated integers, got {text!r}") from None
    if not loads:
        raise ConfigError("loads", "at least one load is required")
    return loads


def _cmd_sweep(args) -> str:
    config = _load_config(args)
    rows = sweep(_parse_loads(args.loads), config, workers=args.workers)
    return render_csv([r for _, r in rows])


def _cmd_prob(args) -> str:
    if args.n_max < 1 or args.trials < 1:
        raise ConfigError("n-max/trials", "must be >= 1")
    rows = [
        (r.n, repr(r.closed_form), repr(r.monte_carlo), repr(r.mc_stderr))
        for r in analysis.prob_table(args.n_max, args.trials, args.seed)
    ]
    return _csv(PROB_HEADER, rows)


def _cmd_election(args) -> str:
    if args.k_max < 1 or args.p_max < 1 or args.trials < 1:
        raise ConfigError("k-max/p-max/trials", "must be >= 1")
    strategies = (
        list(ElectionStrategy) if args.strategy == "both" else [ElectionStrategy(args.strategy)]
    )
    rows = []
    for strategy in strategies:
        for k in range(1, args.k_max + 1):
            for p in range(1, args.p_max + 1):
                res = analysis.verifier_count_distribution(
                    k, p, strategy, args.trials, args.seed + 1000 * k + p
                )
                for count, freq in res.frequencies().items():
                    rows.append((k, p, strategy.value, res.exact, count, repr(freq)))
    return _csv(ELECTION_HEADER, rows)


_COMMANDS: dict[str, Callable] = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "analyze-prob": _cmd_prob,
    "analyze-election": _cmd_election,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except _UsageError as exc:
        print(f"coopauth: {exc}", file=sys.stderr)
        return 1
    try:
        text = _COMMANDS[args.command](args)
    except (ConfigError, OSError) as exc:
        if isinstance(exc, OSError) and not isinstance(exc, FileNotFoundError):
            print(f"coopauth: runtime failure: {exc}", file=sys.stderr)
            return 2
        print(f"coopauth: invalid input: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - exit code is the contract
        print(f"coopauth: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        _emit(args.output, text)
    except OSError as exc:
        print(f"coopauth: cannot write output: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
