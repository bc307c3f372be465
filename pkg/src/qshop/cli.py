"""Command-line front end.

Subcommands: ``simulate`` (single sessions / Monte-Carlo repeats),
``attack-matrix`` (protocol x attack sweep), ``table1`` (efficiency
table reproduction), ``threshold`` (intercept-resend tradeoff).

Reports are deterministic structured text (key=value lines, nested by
dotted prefixes, fractions rendered exactly as p/q); identical configs
produce byte-identical bodies. Exit codes: 0 ran, 1 usage error,
2 internal invariant violation. The environment variable QSHOP_SEED
overrides the default seed.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import analysis
from .adversary import AttackKind, AttackStrategy
from .primitives import Permutation, Subroutine
from .protocols import (
    DEFAULT_THRESHOLD,
    PROTOCOL_NAMES,
    RUNNERS,
    message_length,
)

DEFAULT_N = 8
SEED_ENV = "QSHOP_SEED"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    protocol: str
    n: int = DEFAULT_N
    message: str = "random"
    attack: str | None = None
    seed: int = 0
    threshold: float = DEFAULT_THRESHOLD
    trials: int = 1
    decoy_mode: str = "bb84"
    gv_placement: str = "whole-pair"
    redundant: int = 0

    def validate(self) -> None:
        if self.protocol not in PROTOCOL_NAMES:
            raise UsageError(f"unknown protocol {self.protocol!r}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.message != "random":
            want = message_length(self.protocol, self.n)
            if len(self.message) != want or any(c not in "01" for c in self.message):
                raise UsageError(
                    f"message must be 'random' or a bit string of length {want}"
                )
        if self.decoy_mode not in ("bb84", "gv"):
            raise UsageError("decoy-mode must be bb84 or gv")
        if self.gv_placement not in ("whole-pair", "split-pair"):
            raise UsageError("gv-placement must be whole-pair or split-pair")

    def echo_lines(self) -> list[str]:
        return [
            f"config.protocol={self.protocol}",
            f"config.n={self.n}",
            f"config.message={self.message}",
            f"config.attack={self.attack or '-'}",
            f"config.seed={self.seed}",
            f"config.threshold={self.threshold}",
            f"config.trials={self.trials}",
            f"config.decoy_mode={self.decoy_mode}",
            f"config.gv_placement={self.gv_placement}",
            f"config.redundant={self.redundant}",
        ]


def config_from_echo(text: str) -> RunConfig:
    """Re-parse a report's config echo block (round-trip invariant)."""
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("config."):
            key, _, val = line[len("config."):].partition("=")
            values[key] = val
    cfg = RunConfig(
        protocol=values["protocol"],
        n=int(values["n"]),
        message=values["message"],
        attack=None if values.get("attack", "-") == "-" else values["attack"],
        seed=int(values["seed"]),
        threshold=float(values["threshold"]),
        trials=int(values["trials"]),
        decoy_mode=values.get("decoy_mode", "bb84"),
        gv_placement=values.get("gv_placement", "whole-pair"),
        redundant=int(values.get("redundant", "0")),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Attack spec parsing: "name" or "name:key=val,key=val"
# ---------------------------------------------------------------------------

_ATTACK_NAMES = {k.value: k for k in AttackKind}


def parse_attack(spec: str) -> tuple[AttackStrategy, dict]:
    """Parse an attack spec into a strategy plus extra run() kwargs.

    Parameters: f=<float>, beta2=<float> (|beta|^2), leg=<leg name>,
    basis=<random|computational|diagonal>, K=<bits> (true key),
    Kp=<bits> (announced key), pi=<i-j-k...> (announced permutation).
    """
    name, _, rest = spec.partition(":")
    if name not in _ATTACK_NAMES:
        raise UsageError(
            f"unknown attack {name!r}; known: {', '.join(sorted(_ATTACK_NAMES))}"
        )
    kind = _ATTACK_NAMES[name]
    params: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"malformed attack parameter {item!r}")
            params[key] = val
    kwargs: dict = {"kind": kind}
    run_kwargs: dict = {}
    try:
        if "f" in params:
            kwargs["f"] = float(params.pop("f"))
        if "beta2" in params:
            kwargs["beta"] = float(params.pop("beta2")) ** 0.5
        if "leg" in params:
            kwargs["target_leg"] = params.pop("leg")
        if "basis" in params:
            kwargs["basis_policy"] = params.pop("basis")
        if "Kp" in params:
            kwargs["key_prime"] = params.pop("Kp")
        if "K" in params:
            run_kwargs["key"] = params.pop("K")
        if "pi" in params:
            kwargs["pi_prime"] = Permutation(
                tuple(int(x) for x in params.pop("pi").split("-"))
            )
    except ValueError as exc:
        raise UsageError(f"bad attack parameter: {exc}") from exc
    if params:
        raise UsageError(f"unknown attack parameters: {', '.join(sorted(params))}")
    if kind is AttackKind.CHARLIE_FAKE_SEQUENCE and "target_leg" not in kwargs:
        kwargs["target_leg"] = "alice->bob"
    return AttackStrategy(**kwargs), run_kwargs


def _run_kwargs_for(cfg: RunConfig) -> dict:
    kwargs: dict = {"threshold": cfg.threshold}
    if cfg.protocol == "p2":
        kwargs["gv_placement"] = cfg.gv_placement
        if cfg.redundant:
            kwargs["redundant"] = cfg.redundant
    elif cfg.protocol in ("p3", "p4"):
        kwargs["decoy_subroutine"] = (
            Subroutine.GV if cfg.decoy_mode == "gv" else Subroutine.BB84
        )
    return kwargs


def _trial_message(cfg: RunConfig, rng: np.random.Generator) -> str:
    if cfg.message != "random":
        return cfg.message
    mlen = message_length(cfg.protocol, cfg.n)
    return "".join(str(int(b)) for b in rng.integers(0, 2, size=mlen))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, transcript_path: str | None = None) -> list[str]:
    cfg.validate()
    attack, extra_kwargs = (None, {}) if cfg.attack is None else parse_attack(cfg.attack)
    run = RUNNERS[cfg.protocol]
    run_kwargs = _run_kwargs_for(cfg)
    run_kwargs.update(extra_kwargs)
    msg_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(9,)))

    lines = ["report=simulate", *cfg.echo_lines()]
    decoded_ok = aborted = 0
    for i in range(cfg.trials):
        msg = _trial_message(cfg, msg_rng)
        out = run(cfg.n, msg, attack=attack, seed=cfg.seed + i, **run_kwargs)
        if out.aborted:
            aborted += 1
        elif out.decoded == msg:
            decoded_ok += 1
        lines.append(
            f"trial.{i}.message={msg}"
        )
        lines.append(
            f"trial.{i}.decoded={out.decoded if out.decoded is not None else '-'}"
        )
        lines.append(f"trial.{i}.aborted={int(out.aborted)}")
        lines.append(f"trial.{i}.abort_leg={out.abort_leg or '-'}")
        if out.attack_report is not None:
            r = out.attack_report
            lines.append(f"trial.{i}.attack.detected={int(r.detected)}")
            lines.append(f"trial.{i}.attack.leg_error_rate={r.leg_error_rate:.6f}")
            if r.eve_inferred_bits is not None:
                lines.append(f"trial.{i}.attack.inferred={r.eve_inferred_bits}")
        if i == 0 and transcript_path is not None:
            with open(transcript_path, "w") as fh:
                fh.write(out.transcript.serialize())
            lines.append(f"trial.0.transcript_path={transcript_path}")
    full, qubit = analysis.efficiency(out.ledger)
    lines.append(f"aggregate.trials={cfg.trials}")
    lines.append(f"aggregate.decoded_ok={decoded_ok}")
    lines.append(f"aggregate.aborted={aborted}")
    lines.append(f"efficiency.eta={full}")
    lines.append(f"efficiency.eta_q={qubit}")
    return lines


_MATRIX_ATTACKS = {
    "intercept-resend": lambda: (AttackStrategy(AttackKind.INTERCEPT_RESEND), {}),
    "entangle-measure": lambda: (AttackStrategy(AttackKind.ENTANGLE_MEASURE), {}),
    "x-flip-all": lambda: (
        AttackStrategy(AttackKind.X_FLIP_ALL, target_leg="alice->bob"), {}
    ),
    "charlie-fake-sequence": lambda: (
        AttackStrategy(AttackKind.CHARLIE_FAKE_SEQUENCE, target_leg="alice->bob"), {}
    ),
    "alice-key-change": lambda: (
        AttackStrategy(AttackKind.ALICE_KEY_CHANGE, key_prime=None), {}
    ),
    "alice-wrong-permutation": lambda: (
        AttackStrategy(AttackKind.ALICE_WRONG_PERMUTATION), {}
    ),
    "bob-premature-decode": lambda: (AttackStrategy(AttackKind.BOB_PREMATURE_DECODE), {}),
}

# Which protocols each matrix attack is meaningful for.
_MATRIX_APPLIES = {
    "intercept-resend": set(PROTOCOL_NAMES),
    "entangle-measure": set(PROTOCOL_NAMES),
    "x-flip-all": {"p2"},
    "charlie-fake-sequence": {"clz", "hyj", "p1"},
    "alice-key-change": {"hyj"},
    "alice-wrong-permutation": {"p1", "p2"},
    "bob-premature-decode": {"p2", "p3", "p4"},
}


def _matrix_cell(protocol: str, attack_name: str, trials: int, n: int, seed: int) -> dict:
    attack, _ = _MATRIX_ATTACKS[attack_name]()
    run = RUNNERS[protocol]
    kwargs: dict = {}
    if protocol == "p2" and attack_name == "alice-wrong-permutation":
        kwargs["confirm_order"] = True
    mlen = message_length(protocol, n)
    msg_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(17,)))
    detected = 0
    rates, bers, inferred_eq, order_changed = [], [], 0, 0
    for i in range(trials):
        msg = "".join(str(int(b)) for b in msg_rng.integers(0, 2, size=mlen))
        if attack_name == "alice-key-change":
            kp = "".join(str(int(b)) for b in msg_rng.integers(0, 2, size=mlen))
            if kp == "0" * mlen:
                kp = "1" + kp[1:]
            attack = AttackStrategy(AttackKind.ALICE_KEY_CHANGE, key_prime=kp)
        out = run(n, msg, attack=attack, seed=seed + i, **kwargs)
        if attack_name == "alice-key-change" and out.decoded != msg:
            order_changed += 1
        r = out.attack_report
        detected += int(r.detected)
        rates.append(r.leg_error_rate)
        if r.eve_inferred_bits is not None and r.eve_inferred_bits == msg:
            inferred_eq += 1
        if out.decoded is not None and len(out.decoded) == len(msg):
            bers.append(sum(a != b for a, b in zip(out.decoded, msg)) / len(msg))
    cell = {
        "detected_freq": detected / trials,
        "mean_leg_error": float(np.mean(rates)),
    }
    if attack_name == "charlie-fake-sequence":
        cell["inferred_eq_msg_freq"] = inferred_eq / trials
        cell["label"] = (
            "info=FULL, detected=late" if protocol == "clz" else "info=masked, detected=late"
        )
    elif attack_name == "alice-key-change":
        cell["order_changed_freq"] = order_changed / trials
        cell["label"] = "order changed, detected=never"
    elif attack_name == "alice-wrong-permutation":
        cell["label"] = f"detected {100 * detected / trials:.1f}%"
    elif attack_name == "bob-premature-decode":
        cell["mean_bit_error"] = float(np.mean(bers)) if bers else 0.0
        cell["label"] = "premature decode yields noise"
    elif bers:
        cell["mean_bit_error"] = float(np.mean(bers))
    return cell


def cmd_attack_matrix(protocols, attacks, trials: int, n: int, seed: int) -> list[str]:
    if not protocols or not attacks:
        raise UsageError("protocol and attack lists must be nonempty")
    for p in protocols:
        if p not in PROTOCOL_NAMES:
            raise UsageError(f"unknown protocol {p!r}")
    for a in attacks:
        if a not in _MATRIX_ATTACKS:
            raise UsageError(f"unknown attack {a!r}")
    lines = [
        "report=attack-matrix",
        f"config.protocols={','.join(protocols)}",
        f"config.attacks={','.join(attacks)}",
        f"config.trials={trials}",
        f"config.n={n}",
        f"config.seed={seed}",
    ]
    for p in protocols:
        for a in attacks:
            prefix = f"cell.{p}.{a}"
            if p not in _MATRIX_APPLIES[a]:
                lines.append(f"{prefix}.status=n/a")
                continue
            cell = _matrix_cell(p, a, trials, n, seed)
            lines.append(f"{prefix}.status=ok")
            for key, val in sorted(cell.items()):
                if isinstance(val, float):
                    lines.append(f"{prefix}.{key}={val:.4f}")
                else:
                    lines.append(f"{prefix}.{key}={val}")
    return lines


_EXTERNAL_ROWS = (
    ("semiquantum-1", Fraction(1, 23), Fraction(1, 21)),
    ("semiquantum-2", Fraction(1, 18), Fraction(1, 16)),
)


def cmd_table1(n: int = 4, seed: int = 0) -> list[str]:
    lines = ["report=table1", f"config.n={n}", f"config.seed={seed}",
             f"ledger.convention={LEDGER_CONVENTION}"]
    for row in analysis.efficiency_table(n=n, seed=seed):
        p = row["protocol"]
        exp_full, exp_q = analysis.EXPECTED_EFFICIENCY[p]
        match = row["eta_full"] == exp_full and row["eta_qubit"] == exp_q
        lines.append(
            f"row.{p}=eta={row['eta_full']} eta_q={row['eta_qubit']} "
            f"reference={exp_full},{exp_q} match={'yes' if match else 'NO'}"
        )
    for name, eta, eta_q in _EXTERNAL_ROWS:
        lines.append(f"row.{name}=eta={eta} eta_q={eta_q} external, not reproduced")
    return lines


def cmd_threshold(seed: int = 0) -> list[str]:
    t = analysis.solve_threshold()
    lines = [
        "report=threshold",
        f"f_star={t.f_star:.7f}",
        f"e_star={t.e_star:.7f}",
        f"residual={t.residual:.3e}",
        f"iterations={t.iterations}",
    ]
    for f in (0.0, 0.25, 0.5, 0.75, 1.0):
        emp = analysis.simulate_decoy_error(f, m=8, trials=20_000, seed=seed)
        lines.append(
            f"sweep.f={f:.2f} analytic_e={analysis.detection_probability(f):.4f} "
            f"empirical_e={emp:.4f}"
        )
    return lines


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

from .protocols import LEDGER_CONVENTION  # noqa: E402  (used by cmd_table1)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qshop", description="Quantum online-shopping protocol simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    default_seed = int(os.environ.get(SEED_ENV, "0"))

    sim = sub.add_parser("simulate", help="run protocol sessions")
    sim.add_argument("--protocol", required=True, choices=PROTOCOL_NAMES)
    sim.add_argument("--n", type=int, default=DEFAULT_N)
    sim.add_argument("--message", default="random")
    sim.add_argument("--attack", default=None)
    sim.add_argument("--seed", type=int, default=default_seed)
    sim.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--decoy-mode", default="bb84", choices=("bb84", "gv"))
    sim.add_argument(
        "--gv-placement", default="whole-pair", choices=("whole-pair", "split-pair")
    )
    sim.add_argument("--redundant", type=int, default=0)
    sim.add_argument("--transcript", default=None, help="write first trial's transcript here")
    sim.add_argument("--out", default=None)

    mat = sub.add_parser("attack-matrix", help="protocol x attack sweep")
    mat.add_argument("--protocols", default=",".join(PROTOCOL_NAMES))
    mat.add_argument("--attacks", default=",".join(sorted(_MATRIX_ATTACKS)))
    mat.add_argument("--trials", type=int, default=20)
    mat.add_argument("--n", type=int, default=DEFAULT_N)
    mat.add_argument("--seed", type=int, default=default_seed)
    mat.add_argument("--out", default=None)

    tab = sub.add_parser("table1", help="reproduce the efficiency table")
    tab.add_argument("--n", type=int, default=4)
    tab.add_argument("--seed", type=int, default=default_seed)
    tab.add_argument("--out", default=None)

    thr = sub.add_parser("threshold", help="intercept-resend tradeoff")
    thr.add_argument("--seed", type=int, default=default_seed)
    thr.add_argument("--out", default=None)
    return parser


def _emit(lines: list[str], out: str | None) -> None:
    body = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        if args.command == "simulate":
            cfg = RunConfig(
                protocol=args.protocol,
                n=args.n,
                message=args.message,
                attack=args.attack,
                seed=args.seed,
                threshold=args.threshold,
                trials=args.trials,
                decoy_mode=args.decoy_mode,
                gv_placement=args.gv_placement,
                redundant=args.redundant,
            )
            lines = cmd_simulate(cfg, transcript_path=args.transcript)
        elif args.command == "attack-matrix":
            lines = cmd_attack_matrix(
                [p for p in args.protocols.split(",") if p],
                [a for a in args.attacks.split(",") if a],
                args.trials, args.n, args.seed,
            )
        elif args.command == "table1":
            lines = cmd_table1(args.n, args.seed)
        else:
            lines = cmd_threshold(args.seed)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit(lines, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
