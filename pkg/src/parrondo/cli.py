"""
Command-line front end: argument parsing, scenario defaults, subcommand
dispatch and JSON/CSV emission.

Exit codes: 0 success, 1 computational failure (a ParrondoError, reported
as {"error": {...}} on stdout), 2 usage error.
"""
import argparse
import json
import sys
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from .ergodicity import (
    MAX_BRUTE_FORCE_SIZE,
    brute_force_transient,
    check_spin_ergodicity,
    classify_transient,
    mixed_condition_a,
    transient_summary,
)
from .errors import ParrondoError
from .kernels import MAX_RING_SIZE, MIN_RING_SIZE, Params, Pattern
from .montecarlo import MIN_REPLICAS_FOR_ERROR, SimConfig, convergence_table, simulate_pattern, simulate_ring_spin
from .profit import game_b_baseline, mu_B, mu_mixed, mu_pattern, parrondo_effect
from .report_utils import csv_text, dumps_json, print_status, write_text

CONVERGENCE_HEADER = ("N", "mu_pattern", "mu_mixed", "gap")
RING_FOOTER_HEADER = ("ring_estimate", "ring_se")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class RunSpec(BaseModel):
    """Validated options for one subcommand."""

    subcommand: Literal["exact", "classify", "convergence", "simulate", "spin"]
    params: Params
    n_values: List[int] = Field(default_factory=list)
    pattern: Optional[Pattern] = None
    gamma: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    pure_b: bool = False
    format: Literal["json", "csv"] = "json"
    output: Optional[str] = None
    seed: int = Field(default=0, ge=0, lt=2**64)
    method: Literal["auto", "direct", "power"] = "auto"
    formula: Literal["mu1", "mu2", "mu3", "mu4", "all"] = "all"
    verify: bool = False
    turns: int = Field(default=10**6, gt=0)
    burn_in: Optional[int] = Field(default=None, ge=0)
    replicas: int = Field(default=MIN_REPLICAS_FOR_ERROR, ge=1)
    checkpoints: int = Field(default=0, ge=0)
    mixture: Literal["coin", "mapped"] = "coin"
    with_ring: bool = False
    ring: int = Field(default=512, ge=64)
    sweeps: int = Field(default=20000, gt=0)
    burn_in_sweeps: int = Field(default=1000, ge=0)
    threads: Optional[int] = Field(default=None, ge=1)
    verbose: bool = False

    @model_validator(mode="after")
    def check_modes(self) -> "RunSpec":
        modes = [self.pattern is not None, self.gamma is not None, self.pure_b]
        if self.subcommand in ("exact", "simulate") and sum(modes) != 1:
            raise ValueError("Give exactly one of --pattern, --gamma, --pure-b")
        if self.subcommand == "convergence" and self.pattern is None:
            raise ValueError("convergence needs --pattern")
        if self.subcommand == "spin" and (self.gamma is None) == (not self.pure_b):
            raise ValueError("spin needs exactly one of --gamma, --pure-b")
        if self.subcommand != "spin":
            if not self.n_values:
                raise ValueError("--n is required")
            for N in self.n_values:
                if not MIN_RING_SIZE <= N <= MAX_RING_SIZE:
                    raise ValueError(f"N must lie in [{MIN_RING_SIZE}, {MAX_RING_SIZE}], got {N}")
            if self.subcommand != "convergence" and len(self.n_values) != 1:
                raise ValueError(f"{self.subcommand} takes a single N")
        if self.format == "csv" and self.subcommand != "convergence":
            raise ValueError("CSV output is only available for convergence")
        return self

    @property
    def N(self) -> int:
        return self.n_values[0]

    @property
    def mode(self) -> str:
        if self.pattern is not None:
            return "pattern"
        if self.gamma is not None:
            return "mixed"
        return "pure_b"


def parse_n_range(text: str) -> List[int]:
    """'8' -> [8]; 'start:stop:step' -> inclusive range; '4,6,9' -> list."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise ValueError("expected start:stop[:step] with start <= stop and step > 0")
            start, stop, step = parts
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",")]
    except ValueError as e:
        raise ValueError(f"Cannot parse N range {text!r}: {e}") from e


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", help="Coin biases p0,p1,p2,p3 of game B")
    parser.add_argument("--n", help="Ring size N, or start:stop:step (inclusive) for convergence")
    parser.add_argument("--scenario", help="JSON scenario whose values act as defaults for --p/--n/--pattern/--gamma")
    parser.add_argument("--format", choices=["json", "csv"], default=None, help="Output format")
    parser.add_argument("--output", default=None, help="Write the document here instead of stdout")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (64-bit)")
    parser.add_argument("--verbose", action="store_true", help="Print solver progress to stderr")


def _add_mode(parser: argparse.ArgumentParser, pure_b: bool = True) -> None:
    parser.add_argument("--pattern", help="Periodic schedule r,s (A^r B^s)")
    parser.add_argument("--gamma", type=float, help="Probability of game A in the random mixture")
    if pure_b:
        parser.add_argument("--pure-b", action="store_true", help="Play game B alone")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parrondo",
        description="Exact and Monte Carlo mean profits for cooperative Parrondo games on a ring",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    exact = sub.add_parser("exact", help="Exact mean profit per turn")
    _add_common(exact)
    _add_mode(exact)
    exact.add_argument("--method", choices=["auto", "direct", "power"], default="auto")
    exact.add_argument("--formula", choices=["mu1", "mu2", "mu3", "mu4", "all"], default="all")

    classify = sub.add_parser("classify", help="Transient set and ergodicity conditions")
    _add_common(classify)
    _add_mode(classify, pure_b=False)
    classify.add_argument("--verify", action="store_true", help="Check T against a support-graph search")

    convergence = sub.add_parser("convergence", help="Pattern versus mixture profits over a range of N")
    _add_common(convergence)
    convergence.add_argument("--pattern", help="Periodic schedule r,s (A^r B^s)")
    convergence.add_argument("--method", choices=["auto", "direct", "power"], default="auto")
    convergence.add_argument("--with-ring", action="store_true", help="Append a large-ring estimate of the limit")
    convergence.add_argument("--ring", type=int, default=512, help="Ring size for the limit estimate")
    convergence.add_argument("--sweeps", type=int, default=20000)
    convergence.add_argument("--burn-in-sweeps", type=int, default=1000)
    convergence.add_argument("--replicas", type=int, default=MIN_REPLICAS_FOR_ERROR)

    simulate = sub.add_parser("simulate", help="Monte Carlo average payoff per turn")
    _add_common(simulate)
    _add_mode(simulate)
    simulate.add_argument("--turns", type=int, default=10**6)
    simulate.add_argument("--burn-in", type=int, default=None)
    simulate.add_argument("--replicas", type=int, default=MIN_REPLICAS_FOR_ERROR)
    simulate.add_argument("--checkpoints", type=int, default=0, help="Number of running-mean checkpoints")
    simulate.add_argument("--mixture", choices=["coin", "mapped"], default="coin")
    simulate.add_argument("--threads", type=int, default=None)

    spin = sub.add_parser("spin", help="Large-ring estimate of the infinite-lattice profit")
    _add_common(spin)
    spin.add_argument("--gamma", type=float, help="Mixture weight of game A")
    spin.add_argument("--pure-b", action="store_true", help="Estimate game B alone")
    spin.add_argument("--ring", type=int, default=512)
    spin.add_argument("--sweeps", type=int, default=20000)
    spin.add_argument("--burn-in-sweeps", type=int, default=1000)
    spin.add_argument("--replicas", type=int, default=MIN_REPLICAS_FOR_ERROR)
    spin.add_argument("--threads", type=int, default=None)
    return parser


def load_scenario(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        scenario = json.load(f)
    if not isinstance(scenario, dict):
        raise ValueError(f"Scenario {path} must hold a JSON object")
    return scenario


def _scenario_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    """Merge scenario defaults into the parsed flags and validate."""
    values = vars(args).copy()
    scenario_path = values.pop("scenario", None)
    if scenario_path:
        scenario = load_scenario(scenario_path)
        for key in ("p", "n"):
            if values.get(key) is None and key in scenario:
                values[key] = _scenario_value(scenario[key])
        # a mode flag on the command line overrides the scenario's schedule
        if not any(values.get(k) for k in ("pattern", "gamma", "pure_b")):
            if "pattern" in values and "pattern" in scenario:
                values["pattern"] = _scenario_value(scenario["pattern"])
            elif "gamma" in values and "gamma" in scenario:
                values["gamma"] = float(scenario["gamma"])
    if values.get("p") is None:
        raise ValueError("--p is required (directly or through --scenario)")

    fields = {k: v for k, v in values.items() if k not in ("p", "n", "pattern") and v is not None}
    fields["params"] = Params.from_string(values["p"])
    if values.get("n") is not None:
        fields["n_values"] = parse_n_range(values["n"])
    if values.get("pattern") is not None:
        fields["pattern"] = Pattern.from_string(values["pattern"])
    if fields.get("format") is None:
        fields["format"] = "csv" if args.subcommand == "convergence" else "json"
    return RunSpec(**fields)


def cmd_exact(spec: RunSpec) -> Tuple[int, str]:
    N, params = spec.N, spec.params
    if spec.mode == "pattern":
        report = mu_pattern(N, params, spec.pattern, formula=spec.formula, method=spec.method, verbose=spec.verbose)
    elif spec.mode == "mixed":
        report = mu_mixed(N, params, spec.gamma, method=spec.method, verbose=spec.verbose)
    else:
        report = mu_B(N, params, method=spec.method, verbose=spec.verbose)

    document = {"command": "exact", **report.model_dump(mode="json")}
    if spec.mode == "pure_b":
        document["mu_B"] = report.mu
        document["parrondo_effect"] = None
    else:
        try:
            b, note = game_b_baseline(N, params, method=spec.method, verbose=spec.verbose)
        except ParrondoError as e:
            b, note = None, f"game B alone: {type(e).__name__}: {e}"
        document["mu_B"] = b
        document["parrondo_effect"] = None if b is None else parrondo_effect(b, report.mu)
        if note is not None:
            document["note"] = note
    document["transient"] = transient_summary(N, params, limit=None)
    return EXIT_OK, dumps_json(document)


def cmd_classify(spec: RunSpec) -> Tuple[int, str]:
    N, params = spec.N, spec.params
    t = classify_transient(N, params)
    document = {
        "command": "classify",
        "N": N,
        "params": params.model_dump(),
        "case": t.case_label,
        "exception": t.exception,
        "label": t.label,
        "transient": {"size": len(t.states), "masks": t.masks, "states": t.strings()},
        "spin_ergodicity": check_spin_ergodicity(params).model_dump(),
    }
    if spec.gamma is not None:
        document["gamma"] = spec.gamma
        document["mixed_condition_a"] = mixed_condition_a(params, spec.gamma)
        document["mixed_spin_ergodicity"] = check_spin_ergodicity(params.mixed(spec.gamma)).model_dump()
    if spec.verify:
        if N > MAX_BRUTE_FORCE_SIZE:
            print_status(f"Skipping --verify: support-graph search is limited to N <= {MAX_BRUTE_FORCE_SIZE}")
            document["verified"] = None
        else:
            pattern = spec.pattern or Pattern(r=1, s=1)
            document["verified"] = brute_force_transient(N, params, pattern) == t.states
            document["verify_pattern"] = pattern.model_dump()
    return EXIT_OK, dumps_json(document)


def cmd_convergence(spec: RunSpec) -> Tuple[int, str]:
    table = convergence_table(
        spec.params,
        spec.pattern,
        spec.n_values,
        with_ring=spec.with_ring,
        ring_L=spec.ring,
        sweeps=spec.sweeps,
        burn_in_sweeps=spec.burn_in_sweeps,
        seed=spec.seed,
        replicas=spec.replicas,
        method=spec.method,
        verbose=spec.verbose,
    )
    code = EXIT_FAILURE if table.failed else EXIT_OK
    if spec.format == "json":
        return code, dumps_json({"command": "convergence", **table.model_dump()})
    rows = [(str(row.N), row.mu_pattern, row.mu_mixed, row.gap) for row in table.rows]
    footer = None
    if table.ring is not None:
        footer = [RING_FOOTER_HEADER, (table.ring.mu_limit, table.ring.std_error)]
    return code, csv_text(CONVERGENCE_HEADER, rows, footer)


def cmd_simulate(spec: RunSpec) -> Tuple[int, str]:
    cfg = SimConfig(
        N=spec.N,
        params=spec.params,
        mode=spec.mode,
        pattern=spec.pattern,
        gamma=spec.gamma,
        mixture=spec.mixture,
        turns=spec.turns,
        burn_in=spec.burn_in,
        seed=spec.seed,
        replicas=spec.replicas,
        checkpoints=spec.checkpoints,
        threads=spec.threads,
    )
    result = simulate_pattern(cfg, verbose=spec.verbose)
    document = {"command": "simulate", "config": cfg.model_dump(mode="json", exclude={"threads"}), **result.model_dump()}
    return EXIT_OK, dumps_json(document)


def cmd_spin(spec: RunSpec) -> Tuple[int, str]:
    gamma_params = spec.params if spec.pure_b else spec.params.mixed(spec.gamma)
    estimate = simulate_ring_spin(
        gamma_params,
        L=spec.ring,
        sweeps=spec.sweeps,
        burn_in_sweeps=spec.burn_in_sweeps,
        seed=spec.seed,
        replicas=spec.replicas,
        threads=spec.threads,
        verbose=spec.verbose,
    )
    document = {
        "command": "spin",
        "params": spec.params.model_dump(),
        "gamma": spec.gamma,
        "gamma_params": gamma_params.model_dump(),
        "spin_ergodicity": check_spin_ergodicity(gamma_params).model_dump(),
        **estimate.model_dump(),
    }
    return EXIT_OK, dumps_json(document)


COMMANDS = {
    "exact": cmd_exact,
    "classify": cmd_classify,
    "convergence": cmd_convergence,
    "simulate": cmd_simulate,
    "spin": cmd_spin,
}


def error_document(error: Exception) -> str:
    return dumps_json({"error": {"type": type(error).__name__, "message": str(error)}})


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one subcommand and write its document; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        spec = spec_from_args(args)
    except (ValidationError, ValueError, OSError) as e:
        print(f"{parser.prog} {args.subcommand}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        code, text = COMMANDS[spec.subcommand](spec)
    except ParrondoError as e:
        write_text(error_document(e), None)
        return EXIT_FAILURE
    except ValueError as e:
        print(f"{parser.prog} {spec.subcommand}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    write_text(text, spec.output)
    return code
