"""Command line front end: config ingestion, orchestration, reproduction runs.

Subcommands: conjugate, wsff, rate, duality, tightness, repro.  Configuration
is a flat INI document; every default is materialized into the emitted run
manifest so a run can be reproduced bit-identically from it.
"""

import argparse
import configparser
import hashlib
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import duality as dual
from . import families, lldp, wsff
from .convex import check_essential_smoothness, conjugate
from .grids import GridFunction, grid_1d, grid_2d, read_csv, write_csv
from .logspace import POS_INF
from .rng import derive_seed
from .schedules import ScheduleSpec, ball_power, eps_constant, eps_power

__version__ = "0.1.0"

DEFAULT_SEED = 20240801
LN2 = math.log(2.0)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = ""
    model_params: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    jobs: int = 1
    out: str = "."
    format: str = "csv"
    options: dict = field(default_factory=dict)  # command-specific, defaults resolved

    def canonical_ini(self):
        cp = configparser.ConfigParser()
        cp["run"] = {
            "command": self.command,
            "model": self.model,
            "seed": str(self.seed),
            "jobs": str(self.jobs),
            "out": self.out,
            "format": self.format,
        }
        if self.model_params:
            cp["model"] = {k: repr(v) for k, v in self.model_params.items()}
        if self.options:
            cp[self.command] = {k: _ini_value(v) for k, v in self.options.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _ini_value(v):
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return str(v)


_COMMANDS = ("conjugate", "wsff", "rate", "duality", "tightness", "repro")

# per-command known option keys and their defaults (None = required)
_OPTION_SPEC = {
    "conjugate": {
        "input": None,
        "dual_lower": -1.0,
        "dual_upper": 1.0,
        "dual_count": 201,
    },
    "wsff": {
        "mu_lower": -1.0,
        "mu_upper": 1.0,
        "mu_count": 41,
        "t_ladder": (50.0, 100.0, 200.0),
        "samples": 10000,
        "m_kind": "power",
        "m_exponent": 1.0 / 3.0,
        "m_scale": 1.0,
        "extrapolate": "false",
    },
    "rate": {
        "alpha": (1.0,),
        "eps_kind": "power",
        "eps_exponent": 1.0 / 3.0,
        "eps_scale": 1.0,
        "t_ladder": (50.0, 100.0, 200.0),
        "samples": 10000,
        "method": "naive",
        "m_kind": "power",
        "m_exponent": 1.0 / 3.0,
        "m_scale": 1.0,
    },
    "duality": {
        "mu_lower": -1.0,
        "mu_upper": 1.0,
        "mu_count": 41,
        "t_ladder": (50.0, 100.0, 200.0),
        "samples": 10000,
        "tol": 0.05,
    },
    "tightness": {
        "v_grid": (1.0, 2.0, 4.0),
        "t_ladder": (100.0, 1000.0, 10000.0),
        "samples": 10000,
    },
    "repro": {"example": None},
}

_FLOAT_TUPLE_KEYS = {"t_ladder", "v_grid", "alpha"}
_INT_KEYS = {"samples", "mu_count", "dual_count"}
_STR_KEYS = {"input", "m_kind", "eps_kind", "method", "example", "extrapolate"}


def parse_config(text):
    """Parse and validate an INI config document into a RunConfig.

    Unknown sections or keys are an error (listed by name); schedule
    parameters are validated through ScheduleSpec, so vanishing schedules
    that decay as fast as 1/T are rejected here.
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if "run" not in cp:
        raise ConfigError("missing [run] section")
    run = dict(cp["run"])
    command = run.pop("command", "").strip()
    if command not in _COMMANDS:
        raise ConfigError(f"unknown or missing command {command!r}; one of {_COMMANDS}")
    model = run.pop("model", "").strip()
    seed = int(run.pop("seed", DEFAULT_SEED))
    jobs = int(run.pop("jobs", os.environ.get("LDPLAB_JOBS", "1")))
    out = run.pop("out", ".")
    fmt = run.pop("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    if run:
        raise ConfigError(f"unknown keys in [run]: {sorted(run)}")
    if jobs < 1:
        raise ConfigError("jobs must be a positive integer")

    model_params = {}
    if "model" in cp:
        for k, v in cp["model"].items():
            model_params[k] = float(v)

    if command != "conjugate" and command != "repro":
        if not model:
            raise ConfigError("missing model id")
        if model not in families.MODELS:
            raise ConfigError(
                f"unknown model {model!r}; known: {', '.join(sorted(families.MODELS))}"
            )

    spec = dict(_OPTION_SPEC[command])
    section = dict(cp[command]) if command in cp else {}
    unknown = set(section) - set(spec)
    if unknown:
        raise ConfigError(f"unknown keys in [{command}]: {sorted(unknown)}")
    options = {}
    for key, default in spec.items():
        if key in section:
            raw = section[key]
            if key in _FLOAT_TUPLE_KEYS:
                options[key] = tuple(float(x) for x in raw.split())
            elif key in _INT_KEYS:
                options[key] = int(raw)
            elif key in _STR_KEYS:
                options[key] = raw.strip()
            else:
                options[key] = float(raw)
        else:
            if default is None:
                raise ConfigError(f"missing required key {key!r} in [{command}]")
            options[key] = default

    cfg = RunConfig(command, model, model_params, seed, jobs, out, fmt, options)
    _validate_schedules(cfg)
    extra = set(cp.sections()) - {"run", "model", command}
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    return cfg


def _validate_schedules(cfg):
    opts = cfg.options
    try:
        if "m_kind" in opts:
            ScheduleSpec(opts["m_kind"], "to-infinity", opts["m_scale"], opts["m_exponent"])
        if "eps_kind" in opts:
            ScheduleSpec(opts["eps_kind"], "to-zero", opts["eps_scale"], opts["eps_exponent"])
    except ValueError as exc:
        raise ConfigError(f"invalid schedule: {exc}") from None


# ---------------------------------------------------------------------------
# exact rate functions of the built-in families (test and duality targets)
# ---------------------------------------------------------------------------

def exact_rate_grid(name, window):
    """Closed-form local rate function of a built-in family, sampled on a grid."""
    if name == "mills-tail" or name == "iid-normal":
        return GridFunction.from_callable(window, lambda a: 0.5 * a * a)
    if name == "two-atom-vanishing":
        def f(a):
            if abs(a) < 1e-12:
                return 0.0
            if abs(a - 1.0) < 1e-12:
                return LN2
            return POS_INF
        return GridFunction.from_callable(window, f)
    if name == "two-atom-escaping":
        return GridFunction.from_callable(
            window, lambda a: LN2 if abs(a - 1.0) < 1e-12 else POS_INF
        )
    if name == "markov-occupation":
        def f2(a):
            a0, a1 = a
            if abs(a1) < 1e-12 and 0.0 <= a0 <= 1.0:
                return a0 * LN2
            if abs(a0) < 1e-12 and 0.0 <= a1 <= 1.0:
                return a1 * LN2
            return POS_INF
        return GridFunction.from_callable(window, f2)
    if name == "iid-bernoulli":
        def frel(a, p=0.5):
            if not 0.0 <= a <= 1.0:
                return POS_INF
            out = 0.0
            if a > 0:
                out += a * math.log(a / p)
            if a < 1:
                out += (1 - a) * math.log((1 - a) / (1 - p))
            return out
        return GridFunction.from_callable(window, frel)
    raise ValueError(f"no closed-form rate function for model {name!r}")


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def run(cfg):
    """Execute a RunConfig; returns the process exit status.

    0 success, 1 config error (raised earlier by parse_config), 2 numerical
    failure, 3 failed reproduction assertion.
    """
    os.makedirs(cfg.out, exist_ok=True)
    t0 = time.time()
    try:
        outputs, task_seeds = _dispatch(cfg)
    except (families.CapabilityError, lldp.TiltError, ValueError) as exc:
        print(f"numerical failure: {exc}")
        return 2
    except _ReproFailure as exc:
        print(f"reproduction assertion failed: {exc}")
        _write_manifest(cfg, [], [], time.time() - t0)
        return 3
    _write_manifest(cfg, outputs, task_seeds, time.time() - t0)
    return 0


def _write_manifest(cfg, outputs, task_seeds, wall):
    digest = hashlib.sha256()
    for s in task_seeds:
        digest.update(int(s).to_bytes(8, "little"))
    manifest = {
        "artifact_version": __version__,
        "config_echo": cfg.canonical_ini(),
        "resolved": {**asdict(cfg)},
        "wall_clock_seconds": wall,
        "task_seed_digest": digest.hexdigest(),
        "outputs": [os.path.basename(p) for p in outputs],
    }
    path = os.path.join(cfg.out, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, default=str)
        fh.write("\n")


def _out_path(cfg, stem):
    ext = "csv" if cfg.format == "csv" else "json"
    return os.path.join(cfg.out, f"{stem}.{ext}")


def _write_curve(cfg, curve, stem):
    path = _out_path(cfg, stem)
    if cfg.format == "csv":
        wsff.write_curve_csv(curve, path)
    else:
        wsff.write_curve_json(curve, path)
    return path


def _dispatch(cfg):
    opts = cfg.options
    outputs = []
    task_seeds = []
    if cfg.command == "conjugate":
        f = read_csv(opts["input"])
        dual_spec = (
            grid_1d(opts["dual_lower"], opts["dual_upper"], opts["dual_count"])
            if f.spec.dimension == 1
            else grid_2d(opts["dual_lower"], opts["dual_upper"], opts["dual_count"])
        )
        g = conjugate(f, dual_spec)
        path = os.path.join(cfg.out, "conjugate.csv")
        write_csv(g, path)
        return [path], task_seeds

    if cfg.command == "repro":
        lines, outputs = run_repro(opts["example"], cfg)
        for line in lines:
            print(line)
        if any(line.startswith("FAIL") for line in lines):
            raise _ReproFailure(opts["example"])
        return outputs, task_seeds

    model = families.make_model(cfg.model, **cfg.model_params)

    if cfg.command == "wsff":
        mu = _mu_nodes(model, opts)
        sched = ScheduleSpec(opts["m_kind"], "to-infinity", opts["m_scale"], opts["m_exponent"])
        curve = wsff.estimate_wsff_curve(
            model, mu, opts["t_ladder"], sched, opts["samples"], cfg.seed, jobs=cfg.jobs
        )
        if str(opts.get("extrapolate", "false")).lower() in ("true", "1", "yes"):
            curve = wsff.extrapolate_inverse_T(curve)
        task_seeds = [
            derive_seed(cfg.seed, k, r)
            for k in range(len(mu))
            for r in range(len(opts["t_ladder"]))
        ]
        outputs.append(_write_curve(cfg, curve, "wsff"))
        return outputs, task_seeds

    if cfg.command == "rate":
        eps = ScheduleSpec(opts["eps_kind"], "to-zero", opts["eps_scale"], opts["eps_exponent"])
        alpha = opts["alpha"] if len(opts["alpha"]) > 1 else opts["alpha"][0]
        if np.ndim(alpha) and len(alpha) != model.dimension:
            raise ConfigError(f"alpha dimension {len(opts['alpha'])} != model dimension")
        if opts["method"] == "naive":
            pt = lldp.estimate_local_rate_naive(
                model, alpha, eps, opts["t_ladder"], opts["samples"], cfg.seed
            )
        elif opts["method"] == "tilted":
            if model.dimension != 1:
                raise ConfigError("tilted rate runs support 1-D models only")
            msched = ScheduleSpec(opts["m_kind"], "to-infinity", opts["m_scale"], opts["m_exponent"])
            mu_win = grid_1d(-3.0, 3.0, 601)
            curve = wsff.estimate_wsff_curve(
                model, mu_win.nodes(), opts["t_ladder"], msched, opts["samples"], cfg.seed
            )
            pt = lldp.estimate_local_rate_tilted(
                model, alpha, curve, eps, opts["t_ladder"], msched,
                opts["samples"], cfg.seed,
            )
        else:
            raise ConfigError(f"unknown rate method {opts['method']!r}")
        path = os.path.join(cfg.out, "rate.csv")
        lldp.write_rate_csv([pt], path)
        task_seeds = [derive_seed(cfg.seed, r) for r in range(len(opts["t_ladder"]))]
        return [path], task_seeds

    if cfg.command == "tightness":
        table = lldp.exponential_tightness_probe(
            model, opts["v_grid"], opts["t_ladder"], opts["samples"], cfg.seed
        )
        path = os.path.join(cfg.out, "tightness.csv")
        _write_tightness(table, path)
        return [path], task_seeds

    if cfg.command == "duality":
        mu = _mu_window(model, opts)
        sched = ball_power()
        curve = wsff.estimate_wsff_curve(
            model, mu.nodes(), opts["t_ladder"], sched, opts["samples"], cfg.seed, jobs=cfg.jobs
        )
        rate_window = (
            grid_1d(-2.0, 2.0, 401) if model.dimension == 1 else grid_2d(-0.25, 1.25, 121)
        )
        D = exact_rate_grid(cfg.model, rate_window)
        reports = [
            dual.verify_forward(D, curve, mu, opts["tol"]),
            dual.verify_converse(curve, D, rate_window, opts["tol"]),
            dual.minorant_check(D, mu),
        ]
        path = os.path.join(cfg.out, "duality.json")
        dual.write_duality_json(reports, path)
        return [path], task_seeds

    raise ConfigError(f"unhandled command {cfg.command}")


def _mu_nodes(model, opts):
    return _mu_window(model, opts).nodes()


def _mu_window(model, opts):
    if model.dimension == 1:
        return grid_1d(opts["mu_lower"], opts["mu_upper"], opts["mu_count"])
    return grid_2d(opts["mu_lower"], opts["mu_upper"], opts["mu_count"])


def _write_tightness(table, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("v,T,value,verdict\n")
        for vi, v in enumerate(table.v_grid):
            for r, T in enumerate(table.T_ladder):
                val = table.values[vi][r]
                sval = "-inf" if val == -POS_INF else repr(val)
                fh.write(f"{v!r},{T!r},{sval},{table.verdicts[vi]}\n")


def emit_plot_data(obj, path, with_script=False):
    """Plain-text plot data: two columns in 1-D, three with blank-line row
    breaks in 2-D; optionally a companion gnuplot-style script."""
    lines = []
    if isinstance(obj, wsff.Curve):
        d = obj.arguments.shape[1]
        lines.append("# " + ("mu value" if d == 1 else "mu0 mu1 value"))
        if d == 1:
            order = np.argsort(obj.arguments[:, 0])
            for k in order:
                lines.append(f"{float(obj.arguments[k, 0])!r} {float(obj.estimates[k].value)!r}")
        else:
            prev = None
            order = np.lexsort((obj.arguments[:, 1], obj.arguments[:, 0]))
            for k in order:
                a0, a1 = (float(x) for x in obj.arguments[k])
                if prev is not None and a0 != prev:
                    lines.append("")
                prev = a0
                lines.append(f"{a0!r} {a1!r} {float(obj.estimates[k].value)!r}")
    elif isinstance(obj, GridFunction):
        spec = obj.spec
        if spec.dimension == 1:
            lines.append("# x value")
            for x, v in zip(spec.axis(0), obj.values):
                lines.append(f"{float(x)!r} {float(v)!r}")
        else:
            lines.append("# x0 x1 value")
            for i0, x0 in enumerate(spec.axis(0)):
                for x1, v in zip(spec.axis(1), obj.values[i0]):
                    lines.append(f"{float(x0)!r} {float(x1)!r} {float(v)!r}")
                lines.append("")
    elif isinstance(obj, lldp.TightnessTable):
        lines.append("# v T value")
        for vi, v in enumerate(obj.v_grid):
            for r, T in enumerate(obj.T_ladder):
                lines.append(f"{v!r} {T!r} {obj.values[vi][r]!r}")
    else:
        lines.append("# empty")
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    if with_script:
        sp = path + ".gp"
        style = "with lines" if lines and lines[0].count(" ") == 2 else "with pm3d"
        cmd = "plot" if lines and lines[0].count(" ") == 2 else "splot"
        with open(sp, "w", encoding="utf-8") as fh:
            fh.write(f"set grid\n{cmd} '{os.path.basename(path)}' {style}\n")
        return [path, sp]
    return [path]


# ---------------------------------------------------------------------------
# reproduction runs for the four built-in worked examples
# ---------------------------------------------------------------------------

class _ReproFailure(RuntimeError):
    pass


def _check(lines, label, ok, detail):
    lines.append(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    return ok


def run_repro(example, cfg):
    """Run one of the canned example pipelines and assert its headline numbers."""
    fns = {
        "example1": _repro_example1,
        "example2a": _repro_example2a,
        "example2b": _repro_example2b,
        "example3": _repro_example3,
    }
    if example not in fns:
        raise ConfigError(f"unknown repro example {example!r}; one of {sorted(fns)}")
    return fns[example](cfg)


def _repro_example1(cfg):
    lines, outputs = [], []
    model = families.make_model("mills-tail")
    ladder = (2500.0, 5000.0, 10000.0)
    rp = lldp.estimate_local_rate_naive(model, 1.0, eps_power(), ladder, seed=cfg.seed)
    _check(lines, "rate(1) ~ 0.5", abs(rp.D_hat.value - 0.5) <= 0.05, f"D_hat={rp.D_hat.value:.4f}")
    mu = grid_1d(-2.0, 2.0, 81).nodes()
    curve = wsff.estimate_wsff_curve(model, mu, ladder, ball_power(), seed=cfg.seed, jobs=cfg.jobs)
    err = float(np.max(np.abs(curve.values() - 0.5 * mu[:, 0] ** 2)))
    _check(lines, "moment curve ~ mu^2/2", err <= 0.05, f"max_err={err:.4f}")
    probe = lldp.exponential_tightness_probe(model, [2.0], ladder, seed=cfg.seed)
    _check(
        lines,
        "log tail(2) ~ -2",
        abs(probe.values[0][-1] + 2.0) <= 0.1,
        f"value={probe.values[0][-1]:.4f}",
    )
    diag = wsff.tail_mass_diagnostic(model, 1.0, [1.0, 2.0, 4.0, 8.0], 100.0, seed=cfg.seed)
    nondecaying = diag[-1].value >= diag[0].value - 0.1
    _check(lines, "far-region mass does not decay", nondecaying,
           f"first={diag[0].value}, last={diag[-1].value}")
    outputs.append(_write_curve(cfg, curve, "example1_wsff"))
    path = os.path.join(cfg.out, "example1_rate.csv")
    lldp.write_rate_csv([rp], path)
    outputs.append(path)
    return lines, outputs


def _repro_example2a(cfg):
    lines, outputs = [], []
    model = families.make_model("two-atom-vanishing")
    ladder = (50.0, 100.0, 200.0)
    rp0 = lldp.estimate_local_rate_naive(model, 0.0, eps_constant(0.3), ladder, seed=cfg.seed)
    rp1 = lldp.estimate_local_rate_naive(model, 1.0, eps_constant(0.3), ladder, seed=cfg.seed)
    _check(lines, "rate(0) = 0", abs(rp0.D_hat.value) <= 1e-9, f"D_hat={rp0.D_hat.value:.2e}")
    _check(lines, "rate(1) = ln 2", abs(rp1.D_hat.value - LN2) <= 1e-12, f"D_hat={rp1.D_hat.value:.12f}")
    mu = grid_1d(-1.0, 2.0, 301).nodes()
    curve = wsff.estimate_wsff_curve(model, mu, ladder, ball_power(), seed=cfg.seed, jobs=cfg.jobs)
    rep = check_essential_smoothness(wsff.curve_to_grid(curve))
    kink_at = rep.gap_location[0] if rep.gap_location else float("nan")
    _check(lines, "kink detected near ln 2",
           rep.verdict == "kink-detected" and abs(kink_at - LN2) <= 0.05,
           f"verdict={rep.verdict}, at={kink_at:.4f}")
    D = exact_rate_grid("two-atom-vanishing", grid_1d(-0.5, 1.5, 2001))
    conv = dual.verify_converse(curve, D, grid_1d(-0.5, 1.5, 2001))
    _check(lines, "converse precondition fails", conv.note.startswith("precondition-failed"),
           conv.note or "no note")
    outputs.append(_write_curve(cfg, curve, "example2a_wsff"))
    return lines, outputs


def _repro_example2b(cfg):
    lines, outputs = [], []
    model = families.make_model("two-atom-escaping")
    ladder = (50.0, 100.0, 200.0)
    mu = grid_1d(-1.0, 2.0, 301).nodes()
    curve = wsff.estimate_wsff_curve(model, mu, ladder, ball_power(), seed=cfg.seed, jobs=cfg.jobs)
    err = float(np.max(np.abs(curve.values() - (mu[:, 0] - LN2))))
    _check(lines, "moment curve ~ mu - ln 2", err <= 0.02, f"max_err={err:.2e}")
    win = grid_1d(0.5, 1.5, 1001)
    D = exact_rate_grid("two-atom-escaping", win)
    conv = dual.verify_converse(curve, D, win, tol=0.02)
    _check(lines, "converse holds at the single finite point", conv.passed,
           f"sup={conv.sup_distance:.2e} note={conv.note!r}")
    probe = lldp.exponential_tightness_probe(model, [2.0], ladder, seed=cfg.seed)
    _check(lines, "mass escapes (log tail stays at 0)",
           probe.verdicts[0] == "stagnant-near-zero",
           f"value={probe.values[0][-1]:.2e}")
    outputs.append(_write_curve(cfg, curve, "example2b_wsff"))
    return lines, outputs


def _repro_example3(cfg):
    lines, outputs = [], []
    model = families.make_model("markov-occupation")
    ladder = (100.0, 300.0, 500.0)
    est = wsff.estimate_trunc_log_mgf(model, (1.0, 0.0), 500.0, 2.0)
    _check(lines, "moment value at (1,0) ~ 1 - ln 2",
           abs(est.value - (1.0 - LN2)) <= 0.01, f"value={est.value:.5f}")
    window = grid_2d(-1.0, 1.5, 51)
    curve = wsff.estimate_wsff_curve(model, window.nodes(), ladder, ball_power(),
                                     seed=cfg.seed, jobs=cfg.jobs)
    target = np.array(
        [max(0.0, max(m0, m1) - LN2) for m0, m1 in window.nodes()]
    )
    err = float(np.max(np.abs(curve.values() - target)))
    _check(lines, "moment surface matches", err <= 0.02, f"max_err={err:.4f}")
    Dwin = grid_2d(-0.25, 1.25, 121)
    D = exact_rate_grid("markov-occupation", Dwin)
    fwd = dual.verify_forward(D, curve, window, tol=0.02)
    _check(lines, "forward duality holds", fwd.passed, f"sup={fwd.sup_distance:.4f}")
    mino = dual.minorant_check(D, grid_2d(-1.5, 2.5, 161))
    _check(lines, "biconjugate is a minorant", mino.passed, f"sup={mino.sup_distance:.2e}")
    conv = dual.verify_converse(curve, D, Dwin, tol=0.02)
    _check(lines, "converse is not claimed", not conv.passed,
           conv.note or f"sup={conv.sup_distance:.3f}")
    outputs.append(_write_curve(cfg, curve, "example3_wsff"))
    path = os.path.join(cfg.out, "example3_duality.json")
    dual.write_duality_json([fwd, mino, conv], path)
    outputs.append(path)
    return lines, outputs


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ldplab",
        description="shrinking-ball rate / truncated moment limit laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json"))
        if name == "repro":
            p.add_argument("example", nargs="?", default=None)
        if name == "conjugate":
            p.add_argument("--input")
        if name in ("wsff", "rate", "duality", "tightness"):
            p.add_argument("--model")
    args = parser.parse_args(argv)

    try:
        if args.config:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
            if cfg.command != args.command:
                raise ConfigError(
                    f"config command {cfg.command!r} does not match subcommand {args.command!r}"
                )
        else:
            cfg = _default_config(args)
        for attr in ("seed", "jobs", "out", "format"):
            v = getattr(args, attr, None)
            if v is not None:
                setattr(cfg, attr, v)
        if getattr(args, "model", None):
            cfg.model = args.model
        if args.command == "repro" and args.example:
            cfg.options["example"] = args.example
        if args.command == "conjugate" and getattr(args, "input", None):
            cfg.options["input"] = args.input
        if cfg.command == "repro" and not cfg.options.get("example"):
            raise ConfigError("repro needs an example name")
        if cfg.command == "conjugate" and not cfg.options.get("input"):
            raise ConfigError("conjugate needs an input CSV")
    except ConfigError as exc:
        print(f"config error: {exc}")
        return 1
    return run(cfg)


def _default_config(args):
    options = {}
    for key, default in _OPTION_SPEC[args.command].items():
        options[key] = default
    cfg = RunConfig(command=args.command, options=options)
    if args.command in ("wsff", "rate", "duality", "tightness"):
        cfg.model = getattr(args, "model", None) or "iid-normal"
        if cfg.model not in families.MODELS:
            raise ConfigError(f"unknown model {cfg.model!r}")
    return cfg


if __name__ == "__main__":
    raise SystemExit(main())
