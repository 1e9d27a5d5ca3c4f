"""Command-line experiments.

Every randomised subcommand needs a master seed (``--seed`` or
``master_seed`` in the config); component streams are derived from it by
label. Data files carry the config hash and are listed in ``manifest.json``
next to them. Exit codes: 0 success, 2 configuration error, 3 refusal by a
scale guard.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .. import __version__
from ..prob import Pmf, example_distribution_entropies, min_entropy, renyi2_entropy, shannon_entropy
from ..typical import ScaleGuardError, atypical_probability, atypicality_bound, build_typical_index
from .config import ConfigError, ExperimentConfig, ceil_seed_length, component_seed, load_config_file, parse_pmf
from .io import atomic_write_text, csv_text, fmt, json_text

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3


class Run:
    """Resolved settings plus output bookkeeping for one invocation."""

    def __init__(self, command: str, args: argparse.Namespace, settings: dict):
        self.command = command
        self.args = args
        self.out = Path(args.out)
        self.config = ExperimentConfig(settings.pop("experiment", command), settings)
        self.outputs: list[str] = []
        self.timings: dict[str, float] = {}

    def get(self, key, default=None):
        return self.config.get(key, default)

    def seed(self, label: str) -> int:
        return component_seed(self.config.master_seed, label)

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        atomic_write_text(path, text)
        self.outputs.append(name)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        return self.write(name, json_text({"config_hash": self.config.hash(), **payload}))

    def write_csv(self, name: str, columns, rows) -> Path:
        comments = [f"config_hash={self.config.hash()}", f"wiretapkit {__version__}"]
        return self.write(name, csv_text(columns, rows, comments))

    def manifest(self) -> None:
        if not self.outputs:
            return
        path = self.out / "manifest.json"
        old = {}
        if path.exists():
            try:
                import json

                old = json.loads(path.read_text())
            except ValueError:
                old = {}
        outputs = sorted(set(old.get("outputs", [])) | set(self.outputs))
        timings = {**old.get("timings", {}), **self.timings}
        hashes = {**old.get("config_hashes", {}), self.command: self.config.hash()}
        atomic_write_text(path, json_text({
            "toolkit_version": __version__, "config_hash": self.config.hash(),
            "config_hashes": hashes, "timings": timings, "outputs": outputs,
        }))


def _source(run: Run, key: str = "source", default: str = "bern 0.3") -> Pmf:
    pmf, _ = parse_pmf(str(run.get(key, default)))
    return pmf


def _int_setting(run: Run, key: str, default=None) -> int:
    v = run.get(key, default)
    if v is None:
        raise ConfigError(f"missing required setting {key!r}")
    try:
        return int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"setting {key!r} must be an integer") from None


def _float_setting(run: Run, key: str, default=None) -> float:
    v = run.get(key, default)
    if v is None:
        raise ConfigError(f"missing required setting {key!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"setting {key!r} must be a number") from None


def _method(run: Run) -> str:
    return run.get("method", "exact")


# ---------------------------------------------------------------- commands


def cmd_entropy(run: Run) -> int:
    spec = run.get("pmf")
    if not spec:
        raise ConfigError("entropy needs a pmf spec, e.g. 'bern 0.5'")
    if spec.split()[0] == "example-dist":
        params = _example_params(spec)
        ent = example_distribution_entropies(params["n"], params["alpha"], params["rp"])
        rows = [("H", ent["shannon"]), ("H2", ent["renyi2"]), ("Hinf", ent["min"]), ("H2/n", ent["renyi2"] / params["n"])]
    else:
        p, _ = parse_pmf(spec)
        rows = [("H", shannon_entropy(p)), ("H2", renyi2_entropy(p)), ("Hinf", min_entropy(p))]
    width = max(len(r[0]) for r in rows)
    for name, value in rows:
        print(f"{name:<{width}}  {fmt(value)}")
    return EXIT_OK


def _example_params(spec: str):
    kv = {}
    for tok in spec.split()[1:]:
        if "=" not in tok:
            raise ConfigError(f"expected key=value in {spec!r}")
        k, v = tok.split("=", 1)
        kv[k] = v
    try:
        return {"n": int(kv["n"]), "alpha": float(kv["alpha"]), "rp": float(kv["rp"])}
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed example-dist spec {spec!r}: {exc}") from exc


def cmd_typical(run: Run) -> int:
    p = _source(run)
    n = _int_setting(run, "n", 10)
    eps = _float_setting(run, "eps", 0.3)
    t0 = time.perf_counter()
    index = build_typical_index(p, n, eps)
    run.out.mkdir(parents=True, exist_ok=True)
    index.save(run.out / f"typical-n{n}.bin")
    run.outputs.append(f"typical-n{n}.bin")
    report = {
        "n": n, "eps": eps, "size": index.size, "rate": index.rate,
        "entropy": shannon_entropy(p), "atypical_probability": atypical_probability(p, n, eps),
        "atypicality_bound": atypicality_bound(p, n, eps),
    }
    run.timings["typical"] = time.perf_counter() - t0
    run.write_json("typical.json", {"report": report})
    print(json_text(report), end="")
    return EXIT_OK


def _uc_report(run: Run, code, label: str, extra: dict | None = None) -> dict:
    from ..uniform import evaluate_exact, evaluate_mc

    if _method(run) == "exact":
        rep = evaluate_exact(code)
    else:
        rep = evaluate_mc(code, None, _int_setting(run, "trials", 10_000), run.seed(f"{label}/mc"))
    payload = {"report": rep.to_dict(), "meta": {**rep.meta, **(extra or {})}}
    return payload


def cmd_ucc_binning(run: Run) -> int:
    from ..uniform import UcParams, rb_build

    p = _source(run)
    n = _int_setting(run, "n", 10)
    rate = run.get("rate")
    rate = float(rate) if rate is not None else shannon_entropy(p) + _float_setting(run, "rate_excess", 0.25)
    d = _int_setting(run, "d", 6)
    t0 = time.perf_counter()
    code = rb_build(p, UcParams(n, rate, d), _float_setting(run, "eps1", 0.3), run.seed("ucc-binning/map"),
                    store=p.alphabet_size**n * 2**d <= (1 << 26))
    payload = _uc_report(run, code, "ucc-binning")
    run.timings["ucc-binning"] = time.perf_counter() - t0
    run.write_json("ucc-binning.json", payload)
    print(json_text(payload["report"]), end="")
    return EXIT_OK


def cmd_ucc_extract(run: Run) -> int:
    from ..extractors import make_extractor
    from ..uniform import ExtractorPipeline, min_entropy_target

    p = _source(run)
    n = _int_setting(run, "n", 10)
    eps0 = _float_setting(run, "eps0", 0.3)
    name = run.get("extractor", "gf-affine")
    t0 = time.perf_counter()
    try:
        pipe = ExtractorPipeline.build(p, n, eps0, lambda w: make_extractor(name, w))
    except ScaleGuardError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    delta = atypical_probability(p, n, eps0)
    t = min_entropy_target(p, n, eps0, delta) if delta < 1 else float("-inf")
    extra = {
        "extractor": name, "width": pipe.width, "seed_bits": pipe.seed_bits,
        "min_entropy_target": t,
        "seed_gap_note": "the default affine extractor spends 2m seed bits; seed-optimal "
                         "constructions need about m - t + 2 log m + 2 log(1/eps)",
    }
    payload = _uc_report(run, pipe, "ucc-extract", extra)
    run.timings["ucc-extract"] = time.perf_counter() - t0
    run.write_json("ucc-extract.json", payload)
    print(json_text(payload["report"]), end="")
    return EXIT_OK


def _polar_construction(run: Run, p: Pmf, N: int, label: str):
    from ..polar import build_construction

    method = "exact" if (_method(run) == "exact" and N <= 16) else "monte-carlo"
    return build_construction(
        p, N, _float_setting(run, "beta", 0.25), method, _int_setting(run, "samples", 100_000),
        run.seed(label), cache_dir=run.get("cache_dir", str(run.out / "cache")),
    )


def cmd_polar_construct(run: Run) -> int:
    p = _source(run, default="bern 0.11")
    N = _int_setting(run, "N", 1024)
    t0 = time.perf_counter()
    try:
        c = _polar_construction(run, p, N, f"polar/construct/{N}")
    except ValueError as exc:
        if isinstance(exc, ScaleGuardError):
            raise
        raise ConfigError(str(exc)) from exc
    run.timings["polar-construct"] = time.perf_counter() - t0
    report = {
        "N": N, "beta": c.beta, "delta_N": c.delta_N, "method": c.method, "samples": c.mc_samples,
        "h_fraction": c.h_set.size / N, "v_fraction": c.v_set.size / N, "pad_fraction": c.pad_set.size / N,
        "entropy": shannon_entropy(p), "sum_cond_entropies": float(c.cond_entropies.sum()),
    }
    run.write_json(f"polar-construct-{N}.json", {"report": report})
    print(json_text(report), end="")
    return EXIT_OK


def polar_scaling_rows(run: Run, p: Pmf, sizes, trials: int) -> list[dict]:
    from ..polar import PolarUcCode

    rows = []
    for N in sizes:
        c = _polar_construction(run, p, N, f"polar/construct/{N}")
        code = PolarUcCode(c)
        rng = np.random.Generator(np.random.PCG64(run.seed(f"polar/run/{N}")))
        x = p.sample((trials, N), rng).astype(np.uint8)
        seed = rng.integers(0, 2, (trials, code.seed_len)).astype(np.uint8)
        xhat = code.decode_bits(code.encode_bits(x, seed), seed)
        rows.append({
            "N": N, "h_fraction": c.h_set.size / N, "v_fraction": c.v_set.size / N,
            "pad_fraction": c.pad_set.size / N, "pe": float(np.mean(np.any(xhat != x, axis=1))),
        })
    return rows


def cmd_polar_run(run: Run) -> int:
    p = _source(run, default="bern 0.11")
    sizes = run.get("N_list", [256, 1024, 4096])
    t0 = time.perf_counter()
    rows = polar_scaling_rows(run, p, [int(s) for s in sizes], _int_setting(run, "trials", 1000))
    run.timings["polar-run"] = time.perf_counter() - t0
    run.write_csv("polar-scaling.csv", ["N", "h_fraction", "v_fraction", "pad_fraction", "pe"], rows)
    for r in rows:
        print(" ".join(f"{k}={fmt(v)}" for k, v in r.items()))
    return EXIT_OK


def _channel(run: Run):
    from ..wiretap import channel_from_spec

    try:
        return channel_from_spec(str(run.get("channel", "bsc 0.05 0.2")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _region_payload(res, h_c, h_p) -> dict:
    return {
        "H_c": h_c, "H_p": h_p, "feasible": res.feasible, "slacks": list(res.slacks),
        "witness_q": None if res.witness_q is None else res.witness_q.probs.tolist(),
        "witness_x_given_q": None if res.witness_x_given_q is None else res.witness_x_given_q.tolist(),
    }


def cmd_wiretap_region(run: Run) -> int:
    from ..wiretap import max_confidential_rate, region_feasible

    ch = _channel(run)
    grid = _int_setting(run, "grid", 64)
    h_p = _float_setting(run, "hp")
    t0 = time.perf_counter()
    payload = {}
    if run.get("hc") is not None:
        h_c = _float_setting(run, "hc")
        payload["region"] = _region_payload(region_feasible(h_c, h_p, ch, grid), h_c, h_p)
    best, _ = max_confidential_rate(ch, h_p, grid)
    payload["max_confidential_rate"] = best
    payload["grid"] = grid
    run.timings["wiretap-region"] = time.perf_counter() - t0
    run.write_json("wiretap-region.json", payload)
    print(json_text(payload), end="")
    return EXIT_OK


def cmd_wiretap_sim(run: Run) -> int:
    from ..typical import Dms
    from ..uniform import IdentityCompressor, UcParams, rb_build
    from ..wiretap import make_mux_system, mux_a_run, mux_b_run, region_feasible

    ch = _channel(run)
    arch = str(run.get("architecture", "A")).upper()
    pc = _source(run, "confidential", "bern 0.3")
    pp = _source(run, "public", "bern 0.3")
    k = _int_setting(run, "k", 4)
    n = _int_setting(run, "n", 6)
    eps0 = _float_setting(run, "eps0", 0.4)
    trials = _int_setting(run, "trials", 2000)
    h_c, h_p = k * shannon_entropy(pc) / n, k * shannon_entropy(pp) / n
    region = region_feasible(h_c, h_p, ch, _int_setting(run, "grid", 64))
    payload = {"region": _region_payload(region, h_c, h_p)}
    if not region.feasible and not run.get("force", False):
        print("configuration lies outside the achievable region on this grid; "
              "rerun with --force to simulate anyway", file=sys.stderr)
        payload["simulated"] = False
        run.write_json("wiretap-sim.json", payload)
        return EXIT_OK
    t0 = time.perf_counter()
    p_x = Pmf.uniform(ch.x_size)
    compressor = None
    if arch == "B":
        kind = str(run.get("public_code", "binning"))
        if kind == "identity":
            compressor = IdentityCompressor(pp, k)
        elif kind == "binning":
            d = _int_setting(run, "d", 2)
            rate = _float_setting(run, "public_rate", shannon_entropy(pp) + 0.2)
            compressor = rb_build(pp, UcParams(k, rate, d), _float_setting(run, "eps1", eps0), run.seed("wiretap/public-code"))
        else:
            raise ConfigError(f"public_code must be 'binning' or 'identity', got {kind!r}")
    try:
        system = make_mux_system(arch, Dms(pc, "confidential"), Dms(pp, "public"), k, eps0, ch, n, p_x,
                                 run.seed("wiretap/codebook"), public_compressor=compressor,
                                 eps=_float_setting(run, "eps", 0.3))
    except ValueError as exc:
        if isinstance(exc, ScaleGuardError):
            raise
        raise ConfigError(str(exc)) from exc
    runner = mux_a_run if arch == "A" else mux_b_run
    rep = runner(system, trials, run.seed("wiretap/sim"))
    run.timings["wiretap-sim"] = time.perf_counter() - t0
    payload.update({"simulated": True, "report": rep.to_dict(), "meta": rep.meta})
    if arch == "B":
        b = rep.meta.get("budget", {})
        payload["budget_check"] = b.get("source_budget_holds")
    run.write_json("wiretap-sim.json", payload)
    print(json_text(rep.to_dict()), end="")
    return EXIT_OK


def seed_sweep_rows(run: Run, p: Pmf, ns, exponents, c: float, excess: float, eps1: float, seeds: int) -> list[dict]:
    from ..uniform import UcParams, evaluate_exact, rb_build

    h = shannon_entropy(p)
    rows = []
    for n in ns:
        for e in exponents:
            d = ceil_seed_length(c, n, e)
            pe = ue = 0.0
            for s in range(seeds):
                code = rb_build(p, UcParams(n, h + excess, d), eps1, run.seed(f"seed-sweep/{n}/{e}/{s}"))
                rep = evaluate_exact(code)
                pe += rep.pe / seeds
                ue += rep.ue / seeds
            rows.append({"n": n, "d_n": d, "exponent": e, "pe": pe, "ue": ue})
    return rows


def cmd_seed_sweep(run: Run) -> int:
    if _method(run) != "exact":
        raise ConfigError("seed-sweep evaluates exactly; drop --mc")
    p = _source(run)
    ns = [int(v) for v in run.get("n_list", [8, 12, 16])]
    exps = [float(v) for v in run.get("exponents", [0, 0.25, 0.5, 0.75])]
    t0 = time.perf_counter()
    rows = seed_sweep_rows(run, p, ns, exps, _float_setting(run, "c", 1.0), _float_setting(run, "rate_excess", 0.2),
                           _float_setting(run, "eps1", 0.5), _int_setting(run, "binning_seeds", 10))
    run.timings["seed-sweep"] = time.perf_counter() - t0
    run.write_csv("seed-sweep.csv", ["n", "d_n", "exponent", "pe", "ue"], rows)
    for r in rows:
        print(" ".join(f"{k}={fmt(v)}" for k, v in r.items()))
    return EXIT_OK


COMMANDS = {
    "entropy": (cmd_entropy, False),
    "typical": (cmd_typical, False),
    "ucc-binning": (cmd_ucc_binning, True),
    "ucc-extract": (cmd_ucc_extract, True),
    "polar-construct": (cmd_polar_construct, True),
    "polar-run": (cmd_polar_run, True),
    "wiretap-region": (cmd_wiretap_region, False),
    "wiretap-sim": (cmd_wiretap_sim, True),
    "seed-sweep": (cmd_seed_sweep, True),
}


def _common_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not reset values given before the subcommand
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (overrides config master_seed)", **kw)
    common.add_argument("--out", help="output directory (default: out)", **({"default": "out"} if not suppress else kw))
    common.add_argument("--config", help="JSON config file", **kw)
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="method", action="store_const", const="exact", help="exact evaluation (default)", **kw)
    mode.add_argument("--mc", dest="method", action="store_const", const="monte-carlo", help="Monte Carlo evaluation", **kw)
    common.add_argument("--trials", type=int, help="Monte Carlo trial count", **kw)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="wiretapkit", description=__doc__.splitlines()[0], parents=[_common_flags(False)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", parents=[common], help="H, H2 and Hinf of a pmf spec")
    p.add_argument("pmf", nargs="+", help="e.g. 'bern 0.5', 'uniform 8', 'example-dist n=100 alpha=0.25 rp=1'")

    def source_args(p, default=None):
        p.add_argument("--source", default=default, help="pmf spec of the source")
        p.add_argument("--n", type=int)

    p = sub.add_parser("typical", parents=[common], help="build a typical-set index")
    source_args(p)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("ucc-binning", parents=[common], help="evaluate a random binning code")
    source_args(p)
    p.add_argument("--rate", type=float)
    p.add_argument("--rate-excess", dest="rate_excess", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--eps1", type=float)

    p = sub.add_parser("ucc-extract", parents=[common], help="evaluate a typical-code + extractor pipeline")
    source_args(p)
    p.add_argument("--eps0", type=float)
    p.add_argument("--extractor", choices=["identity", "gf-multiply", "gf-affine"])

    p = sub.add_parser("polar-construct", parents=[common], help="compute polarization sets")
    p.add_argument("--source")
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("polar-run", parents=[common], help="polar set scaling and roundtrip error")
    p.add_argument("--source")
    p.add_argument("--N", dest="N_list", type=int, action="append")
    p.add_argument("--beta", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("wiretap-region", parents=[common], help="rate-region feasibility")
    p.add_argument("--channel")
    p.add_argument("--hc", type=float)
    p.add_argument("--hp", type=float)
    p.add_argument("--grid", type=int)

    p = sub.add_parser("wiretap-sim", parents=[common], help="end-to-end multiplexed wiretap run")
    p.add_argument("--channel")
    p.add_argument("--architecture", choices=["A", "B", "a", "b"])
    p.add_argument("--confidential")
    p.add_argument("--public")
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--eps0", type=float)
    p.add_argument("--public-code", dest="public_code", choices=["binning", "identity"],
                   help="architecture B public compressor (default: binning)")
    p.add_argument("--force", action="store_true", default=None)

    p = sub.add_parser("seed-sweep", parents=[common], help="exact seed-length sweep for random binning")
    p.add_argument("--source")
    p.add_argument("--n", dest="n_list", type=int, action="append")
    p.add_argument("--c", type=float)
    p.add_argument("--binning-seeds", dest="binning_seeds", type=int)
    return parser


_GLOBAL = {"seed", "out", "config", "command", "method", "trials"}


def resolve(args: argparse.Namespace) -> Run:
    settings = load_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in _GLOBAL or value is None:
            continue
        settings[key] = " ".join(value) if key == "pmf" else value
    if args.seed is not None:
        settings["master_seed"] = args.seed
    if args.trials is not None:
        settings["trials"] = args.trials
    if args.method is not None:
        settings["method"] = args.method
    return Run(args.command, args, settings)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func, needs_seed = COMMANDS[args.command]
    try:
        run = resolve(args)
        if needs_seed:
            _ = run.config.master_seed
        code = func(run)
        run.manifest()
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScaleGuardError as exc:
        print(f"refused by scale guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
