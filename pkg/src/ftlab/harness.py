"""Command-line entry point and report plumbing for every experiment.

Each subcommand declares its parameters once; values come from defaults,
then an optional ``key=value`` config file, then command-line flags. Reports
are written as CSV (header plus rows, floats in round-trip ``repr`` form) or
as one JSON object. The worker count never appears in the output, and all
randomness is drawn from substreams keyed by item index, so reports are
byte-identical for any ``--workers``.

Exit status: 0 when every asserted inequality holds, 1 when one fails,
2 for usage errors, 3 when a computation raises.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import concat, corrtail, ctrlnoise, faultpath, immune, shor
from .seeding import substream

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# --- Parameter parsing ------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def _int(text) -> int:
    return int(float(text)) if "e" in str(text).lower() else int(text)


@dataclass(frozen=True)
class Param:
    parse: Callable[[str], Any]
    default: str | None
    help: str


@dataclass(frozen=True)
class Command:
    help: str
    params: dict[str, Param]
    run: Callable[["ExperimentConfig", dict], tuple[list[dict], dict]]
    stochastic: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    params: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    out: str | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.subcommand not in COMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        spec = COMMANDS[self.subcommand]
        unknown = set(self.params) - set(spec.params)
        if unknown:
            raise ConfigError(f"unknown keys for {self.subcommand}: {', '.join(sorted(unknown))}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.seed is not None and not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if spec.stochastic and self.seed is None:
            raise ConfigError(f"{self.subcommand} needs --seed")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def resolved(self) -> dict:
        spec = COMMANDS[self.subcommand]
        out = {}
        for key, p in spec.params.items():
            raw = self.params.get(key, p.default)
            try:
                out[key] = None if raw is None else p.parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        return out

    def echo(self) -> dict:
        """Configuration as written into reports (worker count deliberately absent)."""
        spec = COMMANDS[self.subcommand]
        params = {k: str(self.params.get(k, p.default)) for k, p in spec.params.items()
                  if self.params.get(k, p.default) is not None}
        return {"subcommand": self.subcommand, "seed": self.seed, "params": params}


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[dict]
    summary: dict
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", True))

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows:
            cols = list(self.rows[0])
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow([_fmt(r.get(c)) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        obj = {"config": self.config.echo(), "rows": self.rows, "summary": self.summary}
        return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"

    def render(self) -> str:
        return self.to_csv() if self.config.format == "csv" else self.to_json()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return v


def _pmap(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- Subcommands ------------------------------------------------------------------

def _shor_demo(cfg, p):
    rows = shor.syndrome_table(cfg.seed or 0)
    worst = min(min(r["fidelity_zero"], r["fidelity_one"], r["fidelity_plus"]) for r in rows)
    return rows, {"passed": worst >= 1 - 1e-10, "min_fidelity": worst, "rows": len(rows)}


def _repetition_demo(cfg, p):
    rows, ok = [], True
    for x in p["p_grid"]:
        prev = x
        for lev in range(1, p["levels"] + 1):
            f = concat.concatenated_repetition_failure(x, lev)
            if 0 < x < 1 / 3:
                ok &= f < prev
            rows.append({"p": x, "level": lev, "failure": f})
            prev = f
    return rows, {"passed": ok}


def _threshold_sweep(cfg, p):
    rows = concat.threshold_sweep(p["m"], p["eps_grid"], p["k_max"], p["trials"], cfg.seed, cfg.workers)
    bad = [r for r in rows if r["mc_estimate"] > r["closed_form_bound"] + 3 * r["std_err"]]
    slopes = {}
    for m in p["m"]:
        A = m * (m - 1) // 2
        for eps in p["eps_grid"]:
            if eps * A >= 1:
                continue
            cells = {r["k"]: r["mc_estimate"] for r in rows
                     if r["m"] == m and r["eps"] == eps and r["mc_estimate"] * p["trials"] >= 10}
            if len(cells) >= 2:
                slopes[f"m={m},eps={eps}"] = concat.loglog_slope(A, cells)
    slope_ok = all(abs(s / math.log(2) - 1) <= 0.15 for s in slopes.values())
    return rows, {"passed": not bad and slope_ok, "violations": len(bad), "slopes": slopes}


def _nonmarkov_threshold(cfg, p):
    rows, ok, prev = [], True, math.inf
    for A in p["A_grid"]:
        eta_star = faultpath.nonmarkov_threshold(A)
        row = {"A": A, "pairs": math.comb(A, 2), "eta_star": eta_star,
               "root_residual": math.comb(A, 2) * eta_star * math.exp((A - 2) * eta_star) - 1,
               "k": None, "delta_bound": None}
        ok &= eta_star < prev
        prev = eta_star
        if p["eta"] is not None and p["eta"] < eta_star:
            params = faultpath.NonMarkovParams(A, p["eta"], L=p["L"], delta=p["delta"])
            lev = faultpath.required_level_nonmarkov(params)
            row["k"], row["delta_bound"] = lev.k, lev.delta_bound
            ok &= lev.delta_bound <= p["delta"] or p["delta"] >= 2
        rows.append(row)
    return rows, {"passed": ok}


def _faultpath_verify(cfg, p):
    def one(idx):
        model = faultpath.random_model(p["system_qubits"], p["bath_qubits"], p["steps"], p["terms"],
                                       p["delta"], p["steps_per_gate"], seed=substream(cfg.seed, idx))
        fps = faultpath.fault_path_expand(model)
        ident = float(np.linalg.norm(fps.sum() - faultpath.trotter_product(model), 2))
        multi = faultpath.multi_fault_check(fps)
        return {
            "model": idx,
            "microlocations": len(model.microlocations),
            "paths": fps.n_paths,
            "identity_error": ident,
            "trotter_ratio": faultpath.trotter_error_ratio(model),
            "path_norm_ratio": faultpath.path_norm_violations(fps, 64, substream(cfg.seed, idx, 1)),
            "locations": multi["locations"],
            "eta_bound": multi["eta"],
            "eta_measured": faultpath.measured_eta(fps, p["eta_samples"], substream(cfg.seed, idx, 2)),
            "multi_fault_norm": multi["f_norm"],
            "multi_fault_bound": multi["bound"],
        }

    rows = _pmap(one, range(p["models"]), cfg.workers)
    ok = all(r["identity_error"] <= 1e-12 and 3.5 <= r["trotter_ratio"] <= 4.5
             and r["path_norm_ratio"] <= 1 + 1e-9 and r["multi_fault_norm"] <= r["multi_fault_bound"]
             for r in rows)
    return rows, {"passed": ok, "max_identity_error": max(r["identity_error"] for r in rows)}


def _mask_hash(mask: np.ndarray) -> str:
    return hashlib.sha1(np.packbits(mask).tobytes()).hexdigest()[:12]


def _cbit_immunity(cfg, p):
    f = immune.search_balanced_low_influence(p["nprime"], p["search_budget"], seed=cfg.seed)
    code = immune.build_code(f, p["B"])
    bound = 1 - code.epsilon
    phis = np.stack([code.random_codeword(substream(cfg.seed, 1, c)) for c in range(p["codewords"])])
    half = 1 << (code.n - 1)
    rows = []
    # singletons: exhaustive, the worst y per qubit over all codewords
    worst = np.full(code.n, np.inf)
    worst_y = np.zeros(code.n, dtype=np.int64)
    for phi in phis:
        m = immune.singleton_margins(code, phi)
        arg = m.argmin(axis=1)
        val = m[np.arange(code.n), arg]
        better = val < worst
        worst[better], worst_y[better] = val[better], arg[better]
    for i in range(code.n):
        rows.append({"kind": "singleton", "i": i, "S": str(int(worst_y[i])),
                     "margin": float(worst[i]), "bound": bound})
    rng = substream(cfg.seed, 2)
    qubits = rng.integers(code.n, size=p["subsets"])
    masks = rng.random((p["subsets"], half)) < rng.random((p["subsets"], 1))
    margins = immune.subset_margins(code, phis, qubits, masks)
    for s in range(p["subsets"]):
        rows.append({"kind": "subset", "i": int(qubits[s]), "S": _mask_hash(masks[s]),
                     "margin": float(margins[s].min()), "bound": bound})
    # proof chain on every sample, plus direct application on a few as a cross-check
    lhs, mid, rhs = immune.subset_chain(code, phis, qubits, masks)
    chain_ok = bool(np.all(lhs <= mid + 1e-9 * np.maximum(mid, 1.0))
                    and np.all(mid <= rhs + 1e-9 * np.maximum(rhs, 1.0)))
    for s in range(min(p["subsets"], 20)):
        c = s % len(phis)
        dev = immune.flip_deviation_check(phis[c], int(qubits[s]), masks[s])
        chain_ok &= dev.passed and abs(dev.lhs - lhs[s, c]) <= 1e-9 * max(dev.rhs, 1.0)
    for phi in phis:
        chain_ok &= immune.code_influence_check(code, phi).passed
    min_margin = min(r["margin"] for r in rows)
    return rows, {"passed": bool(min_margin >= bound - 1e-9 and chain_ok), "chain_ok": bool(chain_ok),
                  "influence": f.influence, "epsilon": code.epsilon, "min_margin": min_margin,
                  "n": code.n}


def _cbit_impossibility(cfg, p):
    if p["code"] == "shor":
        codes = [("shor", lambda: ctrlnoise.shor_code())]
    elif p["code"] == "random":
        ns = p["n"]
        codes = [(f"random-{c}",
                  (lambda c=c: ctrlnoise.random_code(ns[c % len(ns)], 2, substream(cfg.seed, c))))
                 for c in range(p["codes"])]
    else:
        raise ConfigError("code must be shor or random")

    def one(item):
        name, make = item
        code = make()
        rep = ctrlnoise.uniformity_demonstration(code)
        return {"code": name, "n": code.n, "found": rep.found, "i": rep.i, "s": rep.s,
                "value": rep.value, "checked": rep.checked}

    rows = _pmap(one, codes, cfg.workers)
    return rows, {"passed": all(r["found"] and r["value"] > 1e-6 for r in rows)}


def _cphase_separation(cfg, p):
    ns = p["n"]

    def one(c):
        n = ns[c % len(ns)]
        res = ctrlnoise.separation_violation(ctrlnoise.random_code(n, 2, substream(cfg.seed, c)))
        return {"code": c, "n": n, "overlap": res.overlap, "violation": res.violation,
                "floor": res.floor, "max_zeta": float(res.zeta.max())}

    rows = _pmap(one, range(p["codes"]), cfg.workers)
    ok = all(r["violation"] > 0.1 and r["violation"] >= r["floor"] - 1e-9
             and r["max_zeta"] <= math.pi / 4 + 1e-12 for r in rows)
    return rows, {"passed": ok, "min_violation": min(r["violation"] for r in rows)}


def _kalai_tail(cfg, p):
    d = corrtail.parse_distribution(p["dist"], p["n"])
    exact = corrtail.tail_bound_check(d)
    samp = corrtail.tail_bound_sampled(d, p["trials"], cfg.seed, cfg.workers)
    at_exact_s = corrtail.tail_bound_sampled(d, p["trials"], cfg.seed, cfg.workers, s=exact.s)
    terms = corrtail.polynomial_tail_terms(d, 2)
    row = {"dist": p["dist"], "n": p["n"], "s": exact.s, "lhs": exact.lhs, "rhs": exact.rhs,
           "term0": float(terms[0]), "term1": float(terms[1]) if len(terms) > 1 else 0.0,
           "s_sampled": samp.s, "lhs_sampled": samp.lhs, "rhs_sampled": samp.rhs,
           "sigma_sampled": samp.sigma,
           "lhs_sampled_exact_s": at_exact_s.lhs, "rhs_sampled_exact_s": at_exact_s.rhs}
    agree = (abs(at_exact_s.lhs - exact.lhs) <= 3 * at_exact_s.sigma_lhs + 1e-15
             and abs(at_exact_s.rhs - exact.rhs) <= 3 * at_exact_s.sigma_rhs + 1e-15)
    return [row], {"passed": exact.passed and samp.passed and agree}


_SEED_NOTE = "requires --seed"

COMMANDS: dict[str, Command] = {
    "shor-demo": Command(
        "Syndrome and recovery fidelity for all 27 single-qubit Paulis on the nine-qubit code.",
        {}, _shor_demo, stochastic=False),
    "repetition-demo": Command(
        "Failure probability of the concatenated 3-bit repetition code.",
        {"p_grid": Param(_float_list, "0.01,0.1,0.2,0.3,0.33,0.4", "flip probabilities"),
         "levels": Param(_int, "3", "concatenation levels")},
        _repetition_demo, stochastic=False),
    "threshold-sweep": Command(
        "Monte Carlo rectangle badness against the (A eps)^(2^k)/A bound; " + _SEED_NOTE + ".",
        {"m": Param(_int_list, "3,4,5", "locations per rectangle"),
         "eps_grid": Param(_float_list, "0.001,0.01,0.1", "fault probabilities"),
         "k_max": Param(_int, "3", "highest level"),
         "trials": Param(_int, "100000", "trials per cell")},
        _threshold_sweep),
    "nonmarkov-threshold": Command(
        "Threshold of C(A,2) eta exp((A-2) eta) = 1 per A, plus level selection when eta is given.",
        {"A_grid": Param(_int_list, "2..10", "locations per rectangle"),
         "eta": Param(float, None, "noise strength for level selection"),
         "L": Param(_int, "1000", "locations in the circuit"),
         "delta": Param(float, "1e-6", "target error")},
        _nonmarkov_threshold, stochastic=False),
    "faultpath-verify": Command(
        "Fault-path sum against the Trotter product on random system-bath models; " + _SEED_NOTE + ".",
        {"system_qubits": Param(_int, "2", "system qubits"),
         "bath_qubits": Param(_int, "1", "bath qubits"),
         "steps": Param(_int, "4", "Trotter steps"),
         "terms": Param(_int, "2", "interaction terms per step"),
         "delta": Param(float, "0.02", "step length"),
         "steps_per_gate": Param(_int, "2", "steps per location time slot"),
         "models": Param(_int, "5", "random models"),
         "eta_samples": Param(_int, "8", "location sets sampled for the measured strength")},
        _faultpath_verify),
    "cbit-immunity": Command(
        "Immunity margins of the balanced-function product code under controlled bit flips; "
        + _SEED_NOTE + ".",
        {"nprime": Param(_int, "8", "input bits of f"),
         "B": Param(_int, "1", "logical qubits"),
         "search_budget": Param(_int, "20000", "local-search swap proposals"),
         "subsets": Param(_int, "1000", "random control sets"),
         "codewords": Param(_int, "100", "random codewords")},
        _cbit_immunity),
    "cbit-impossibility": Command(
        "Search for a singleton controlled bit flip the code cannot correct; " + _SEED_NOTE + ".",
        {"code": Param(str, "shor", "shor or random"),
         "n": Param(_int_list, "2..6", "qubit counts for random codes, cycled"),
         "codes": Param(_int, "100", "random codes")},
        _cbit_impossibility),
    "cphase-separation": Command(
        "Four-phase partition that breaks separation for random 2-dimensional codes; "
        + _SEED_NOTE + ".",
        {"n": Param(_int_list, "2..6", "qubit counts, cycled over codes"),
         "codes": Param(_int, "1000", "random codes")},
        _cphase_separation),
    "kalai-tail": Command(
        "Weight-tail lower bound from pairwise correlations, exact and sampled; " + _SEED_NOTE + ".",
        {"dist": Param(str, "mixture:0.1,0.1", "mixture:q,r | twopoint:p | iid:r"),
         "n": Param(_int, "8", "string length"),
         "trials": Param(_int, "100000", "samples")},
        _kalai_tail),
}


def run(config: ExperimentConfig) -> ExperimentReport:
    spec = COMMANDS[config.subcommand]
    params = config.resolved()
    t0 = time.perf_counter()
    rows, summary = spec.run(config, params)
    return ExperimentReport(config, rows, summary, time.perf_counter() - t0)


# --- CLI ----------------------------------------------------------------------------

def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ftlab", description="Fault-tolerance numerical experiments.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name, help=spec.help, description=spec.help)
        sp.add_argument("--seed", type=int, default=None, help="master seed (64-bit unsigned)")
        sp.add_argument("--out", default=None, help="report path (stdout if omitted)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--workers", type=int, default=1, help="worker threads (output is unaffected)")
        sp.add_argument("--config", default=None, help="key=value file; flags override it")
        for key, p in spec.params.items():
            flag = "--" + key.replace("_", "-")
            default = "" if p.default is None else f" (default {p.default})"
            sp.add_argument(flag, dest=key, default=None, help=p.help + default)
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    spec = COMMANDS[args.subcommand]
    params: dict[str, str] = {}
    seed, out, fmt = None, None, None
    if args.config:
        for k, v in read_config_file(args.config).items():
            if k == "seed":
                seed = int(v)
            elif k == "out":
                out = v
            elif k == "format":
                fmt = v
            else:
                params[k] = v
    for key in spec.params:
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    seed = args.seed if args.seed is not None else seed
    out = args.out if args.out is not None else out
    fmt = args.format or fmt or "csv"
    return ExperimentConfig(args.subcommand, params, seed, out, fmt, args.workers)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.resolved()
    except (ConfigError, OSError, ValueError) as exc:
        ap.error(str(exc))  # exits with EXIT_USAGE
    try:
        report = run(cfg)
    except Exception as exc:  # noqa: BLE001 - surfaced as an exit category
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = report.render()
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    status = "PASS" if report.passed else "FAIL"
    print(f"{cfg.subcommand}: {status} ({report.duration:.2f}s)", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
