"""Command-line experiment harness.

Each subcommand runs one study and writes headered CSV files (decimal
strings at full working precision) plus a JSON metadata file next to each
CSV.  Parameters come from an optional JSON config and are overridden by
flags.  Exit codes: 0 success, 2 configuration error, 3 numerical
diagnostic (precision judged insufficient, solver failure).
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import gmpy2
import numpy as np

from . import afm, bim, cs, linalg, mpnum, profiles, tfe
from .spectral import Grid, fft_forward, fft_inverse, synthesize

COMMANDS = ("cs-growth", "cs-columns", "cs-sym", "cs-apply", "afm-sweep", "afm-transform",
            "bim-solve", "tfe-run", "demo-divergence", "compare")
METHODS = ("bim", "tfe", "afm", "afmstar", "cs")


class ConfigError(ValueError):
    pass


class DiagnosticFailure(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    profile: str = "pole:0.5"
    bits: int = 53
    grid: int = 256                 # M
    modes: int | None = None        # K
    order: int = 10                 # n_max
    cutoff: int | None = None
    depth: str = "inf"
    cheb: int = 24                  # N, Chebyshev degree for TFE
    eps: str | None = None          # rescaling for cs-growth
    filter: bool = False
    methods: list = field(default_factory=lambda: list(METHODS))
    columns: list = field(default_factory=lambda: [1, 2, 4, 8])
    series_K: list = field(default_factory=lambda: [8, 16, 32, 64])
    ref_bits: int | None = None
    dirichlet_modes: int = 8
    dirichlet_seed: int = 1
    out: str = "out"

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.bits < 24:
            raise ConfigError("bits must be >= 24")
        if self.grid < 4 or self.grid % 2:
            raise ConfigError("grid size M must be even and >= 4")
        K = self.K
        if K < 2 or K % 2 or K > self.grid and self.command not in ("afm-sweep", "afm-transform"):
            raise ConfigError(f"modes K={K} must be even, >= 2 and <= M")
        if self.command in ("afm-sweep", "afm-transform", "compare") and K > self.grid:
            raise ConfigError("AFM needs M >= K")
        if self.order < 0:
            raise ConfigError("order must be >= 0")
        if self.cheb < 2:
            raise ConfigError("Chebyshev degree must be >= 2")
        if self.depth != "inf":
            try:
                if float(self.depth) <= 0:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"depth must be 'inf' or a positive number, got {self.depth!r}")
        if self.command == "tfe-run" and self.depth == "inf":
            raise ConfigError("tfe-run needs a finite depth (the expansion flattens a finite layer)")
        if self.command == "demo-divergence" and self.depth != "inf":
            raise ConfigError("demo-divergence is an infinite-depth study")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if self.command == "compare":
            if len(self.methods) < 2:
                raise ConfigError("compare needs at least two methods")
            if "tfe" in self.methods and self.depth == "inf":
                raise ConfigError("TFE requires finite depth; drop it or set --depth")
        if self.cutoff is not None and self.cutoff < 0:
            raise ConfigError("cutoff must be >= 0")

    @property
    def K(self) -> int:
        if self.modes is not None:
            return self.modes
        if self.command in ("afm-sweep", "afm-transform"):
            return (2 * self.grid // 3) // 2 * 2
        return self.grid

    @property
    def depth_value(self):
        return None if self.depth == "inf" else self.depth


# ---------------------------------------------------------------------------
# problems


@dataclass
class Problem:
    profile: profiles.WaveProfile
    dirichlet: object                 # grid -> samples
    neumann: object = None            # grid -> exact samples, or None
    name: str = ""


def _num(s, what):
    try:
        float(s)
    except ValueError:
        raise ConfigError(f"{what}: {s!r} is not a number") from None
    return s


def make_problem(cfg: ExperimentConfig, ctx: mpnum.PrecisionCtx) -> Problem:
    spec = cfg.profile
    depth = cfg.depth_value
    parts = spec.split(":")
    kind = parts[0]
    rand_D = profiles.random_dirichlet(cfg.dirichlet_modes, cfg.dirichlet_seed)

    def default(prof):
        return Problem(prof, lambda g: synthesize(rand_D, g), None, prof.name)

    try:
        if kind == "pole":
            eps = _num(parts[1] if len(parts) > 1 else "0.5", "pole eps")
            off = _num(parts[2] if len(parts) > 2 else "0", "pole offset")
            pair = profiles.pole_pair(eps, off, depth)
            with ctx:
                pair.check()
            return Problem(pair.profile, lambda g: pair.sample(g)[1],
                           lambda g: pair.sample(g)[2], f"pole pair eps={eps} offset={off}")
        if kind == "flat":
            k = int(parts[1]) if len(parts) > 1 else 1
            fp = profiles.FlatPair(k, depth)
            return Problem(fp.profile, lambda g: fp.sample(g)[1], lambda g: fp.sample(g)[2],
                           f"flat, D = cos {k}x")
        if kind == "cosine":
            return default(profiles.cosine_profile(_num(parts[1], "eps"),
                                                   _num(parts[2] if len(parts) > 2 else "0", "offset"),
                                                   depth))
        if kind == "shifted-cosine":
            return default(profiles.shifted_cosine(depth=depth))
        if kind == "exp-decay":
            return default(profiles.exp_decay_profile(_num(parts[1], "alpha"),
                                                      _num(parts[2], "beta"), depth))
        if kind == "poisson":
            return default(profiles.poisson_profile(depth))
        if kind in ("bandlimited", "analytic", "smooth"):
            return default(profiles.example_profile(kind, depth))
        if kind == "random":
            seed = int(parts[3]) if len(parts) > 3 else 0
            return default(profiles.random_profile(int(parts[1]), _num(parts[2], "amplitude"),
                                                   seed, depth))
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad profile spec {spec!r}: {exc}") from None
    path = Path(spec)
    if path.exists():
        try:
            data = profiles.load_surface_file(path, ctx)
        except profiles.ProfileError as exc:
            raise ConfigError(str(exc)) from None
        if data.L is not None:
            raise ConfigError("profile files must have period 2 pi")
        prof = data.profile if cfg.depth == "inf" and data.profile.depth is None \
            else data.profile.with_depth(depth if depth is not None else data.profile.depth)
        return Problem(prof, data.dirichlet_samples, None, str(path))
    raise ConfigError(f"unknown profile {spec!r}")


# ---------------------------------------------------------------------------
# output


class Writer:
    def __init__(self, cfg: ExperimentConfig, ctx: mpnum.PrecisionCtx):
        self.cfg = cfg
        self.ctx = ctx
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.t0 = time.perf_counter()
        self.files = []

    def fmt(self, v):
        if isinstance(v, (int, np.integer, str)):
            return str(v)
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, type(gmpy2.mpc())):
            v = abs(v)
        return mpnum.format_real(gmpy2.mpfr(v), self.ctx)

    def table(self, stem: str, header: list, rows, extra: dict | None = None):
        path = self.dir / f"{stem}.csv"
        with self.ctx, open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([self.fmt(v) for v in r])
        meta = {"config": asdict(self.cfg), "bits": self.ctx.bits, "csv": path.name,
                "columns": header, "wall_time_s": round(time.perf_counter() - self.t0, 3),
                "versions": {"python": platform.python_version(), "numpy": np.__version__,
                             "gmpy2": gmpy2.version()}}
        if extra:
            meta["summary"] = extra
        (self.dir / f"{stem}.json").write_text(json.dumps(meta, indent=1, default=str))
        self.files.append(path)
        return path


# ---------------------------------------------------------------------------
# subcommands


def _cs_run(cfg, ctx, prob, **kw):
    g = Grid(cfg.grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", mpnum.PrecisionWarning)
        run = cs.gn_recursion(prob.profile.sample(g), cfg.order, g, cfg.K, cfg.depth_value,
                              filter=cfg.filter, **kw)
    return run, [str(w.message) for w in caught]


def cmd_cs_growth(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        run, notes = _cs_run(cfg, ctx, prob, store_rows=1)
        rep = run.report
        eps = cfg.eps or "1"
        rA, rG = rep.rescaled(mpnum.parse_real(eps))
        rows = [(s.n, s.log10_normA, s.log10_normG, float(a), float(b))
                for s, a, b in zip(rep.stats, rA, rG)]
        n = np.array(rep.n[1:], dtype=float)
        lA, lG = rep.log10_normA[1:], rep.log10_normG[1:]
        ok = np.isfinite(lA)
        slope = lambda y, m: float(np.polyfit(n[m], y[m], 1)[0]) if m.sum() > 1 else float("nan")
        summary = {"slope_log10_normA": slope(lA, ok), "slope_log10_normG": slope(lG, np.isfinite(lG)),
                   "warnings": notes}
    out.table("cs_growth", ["n", "log10_normA", "log10_normG", "log10_normA_eps", "log10_normG_eps"],
              rows, summary)
    return 3 if notes else 0


def cmd_cs_columns(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        cols = [j for j in cfg.columns if 0 < j < cfg.K // 2]
        if not cols:
            raise ConfigError("no requested column lies in 0 < j < K/2")
        run, notes = _cs_run(cfg, ctx, prob, cols=cols, normA=False)
        rows = []
        for m in run.matrices:
            for b, j in enumerate(m.cols):
                for r, k in enumerate(m.rows):
                    rows.append((m.n, int(j), int(k), abs(m.entries[r, b])))
    out.table("cs_columns", ["n", "j", "k", "abs_G"], rows, {"warnings": notes})
    return 3 if notes else 0


def cmd_cs_sym(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        run, notes = _cs_run(cfg, ctx, prob, store_rows=1, normA=False)
        rows = [(s.n, s.r, s.noise_ratio) for s in run.report.stats]
    out.table("cs_sym", ["n", "r_n", "noise_ratio"], rows, {"warnings": notes})
    return 3 if notes else 0


def cmd_cs_apply(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        if prob.neumann is None:
            raise ConfigError("cs-apply needs a profile with exact Neumann data (pole, flat)")
        g = Grid(cfg.grid)
        eta, D, N = prob.profile.sample(g), prob.dirichlet(g), prob.neumann(g)
        terms = cs.gn_apply(eta, D, cfg.order, g, cfg.depth_value)
        cut = cfg.cutoff if cfg.cutoff is not None else cfg.K // 2
        errs = cs.apply_partial_sum(terms, D, N, g, cut)
        Nh = fft_forward(N)
        E0 = Nh - terms[0]
        rows = [(n, e) for n, e in enumerate(errs.rms)]
        spec_rows = [(k, abs(Nh[k]), abs(E0[k])) for k in range(cfg.grid // 2)]
        best = int(np.argmin(mpnum.floats(np.array(errs.rms, dtype=object))))
    out.table("cs_apply", ["n", "rms_error"], rows, {"mode_cutoff": cut, "best_order": best})
    out.table("cs_apply_spectrum", ["k", "abs_N_hat", "abs_E0_hat"], spec_rows)
    return 0


def _afm_problem(cfg, ctx):
    prob = make_problem(cfg, ctx)
    sys_ = afm.build_system(prob.profile, cfg.K, cfg.grid, cfg.depth_value)
    g = sys_.grid
    return prob, sys_, g


def cmd_afm_sweep(cfg, ctx, out):
    with ctx:
        prob, s, g = _afm_problem(cfg, ctx)
        D = prob.dirichlet(g)
        N = prob.neumann(g) if prob.neumann else bim.bim_dno(prob.profile, D, g, cfg.depth_value)
        sw = afm.cutoff_sweep(s, D, N)
        sv = s.singular_values()
        x = g.nodes()
        summary = {"best_cutoff_afm": sw.best_afm, "best_cutoff_afmstar": sw.best_star,
                   "min_rms_afm": float(sw.rms_afm[sw.best_afm]),
                   "min_rms_afmstar": float(sw.rms_star[sw.best_star]),
                   "cond": float(s.cond()), "oracle": "exact" if prob.neumann else "bim"}
        rows = list(zip(sw.cutoffs, sw.rms_afm, sw.rms_star))
        srows = list(zip(range(1, len(sv) + 1), sv))
        prow = [(x[j], sw.err_afm[j], sw.err_star[j]) for j in range(g.M)]
    out.table("afm_singular_values", ["index", "sigma"], srows)
    out.table("afm_sweep", ["cutoff", "rms_afm", "rms_afmstar"], rows, summary)
    out.table("afm_pointwise", ["x", "E_afm", "E_afmstar"], prow)
    return 0


def cmd_afm_transform(cfg, ctx, out):
    with ctx:
        prob, s, g = _afm_problem(cfg, ctx)
        D = prob.dirichlet(g)
        N = prob.neumann(g) if prob.neumann else bim.bim_dno(prob.profile, D, g, cfg.depth_value)
        tN, tD = afm.afm_transform(s, N), afm.afm_transform(s, D)
        kk = len(tN)
        fN, fD = afm.fourier_magnitudes(N, kk), afm.fourier_magnitudes(D, kk)
        rows = [(k, abs(tN[k]), fN[k], abs(tD[k]), fD[k]) for k in range(kk)]
    out.table("afm_transform", ["k", "abs_N_afm", "abs_N_fourier", "abs_D_afm", "abs_D_fourier"], rows)
    return 0


def cmd_bim_solve(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        g = Grid(cfg.grid)
        D = prob.dirichlet(g)
        ker = bim.assemble_kernels(prob.profile, g, cfg.depth_value)
        sol = bim.bim_solve(ker, D)
        x = g.nodes()
        summary = {"cond1": float(sol.cond), "residual": float(sol.residual)}
        if prob.neumann:
            N = prob.neumann(g)
            summary["rms_error"] = float(mpnum.rms(sol.N - N))
            rows = [(x[j], D[j], sol.N[j], N[j]) for j in range(g.M)]
            header = ["x", "D", "N", "N_exact"]
        else:
            rows = [(x[j], D[j], sol.N[j]) for j in range(g.M)]
            header = ["x", "D", "N"]
    out.table("bim_solve", header, rows, summary)
    return 0


def _ref_bits(cfg):
    return cfg.ref_bits or 2 * cfg.bits + 64


def cmd_tfe_run(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        g = Grid(cfg.grid)
        f, D = prob.profile.sample(g), prob.dirichlet(g)
        run = tfe.tfe_gn(f, D, cfg.order, g, cfg.depth, cfg.cheb)
        norms = tfe.tfe_norms(run.fields)
        N = prob.neumann(g) if prob.neumann else None
    rctx = mpnum.PrecisionCtx(_ref_bits(cfg))
    with rctx:
        gr = Grid(cfg.grid)
        ref = cs.gn_apply(prob.profile.sample(gr), prob.dirichlet(gr), cfg.order, gr, cfg.depth)
        ref = [mpnum.real(fft_inverse(t)) for t in ref]
    with ctx:
        ref = [np.array([+v for v in r], dtype=object) for r in ref]
        rows, acc = [], mpnum.zeros(cfg.grid)
        for n, t in enumerate(run.terms):
            acc = acc + t
            E = mpnum.rms(N - acc) if N is not None else ""
            rows.append((n, mpnum.rms(t), mpnum.rms(t - ref[n]), E))
        krows = [(n, j, norms.kappa[n, j]) for n in range(len(run.terms)) for j in range(cfg.cheb + 1)]
        grows = [(n, k, norms.gamma[n, k]) for n in range(len(run.terms)) for k in range(cfg.grid // 2)]
    out.table("tfe_terms", ["n", "rms_term", "gamma_vs_cs", "rms_error_partial_sum"], rows,
              {"reference_bits": rctx.bits})
    out.table("tfe_kappa", ["n", "j", "kappa"], krows)
    out.table("tfe_gamma", ["n", "k", "gamma"], grows)
    return 0


def cmd_demo_divergence(cfg, ctx, out):
    with ctx:
        prob = make_problem(cfg, ctx)
        if not cfg.profile.startswith("pole"):
            raise ConfigError("demo-divergence needs a pole profile")
        eps = cfg.profile.split(":")[1] if ":" in cfg.profile else "0.5"
        pair = profiles.pole_pair(eps)
        rep = profiles.divergent_series_demo(pair, cfg.series_K, cfg.grid)
        rows = [(K, b[0], b[1], a[0], a[1]) for K, b, a in zip(rep.K, rep.err_below, rep.err_above)]
        summary = {"converges_below": rep.converges_below(), "diverges_above": rep.diverges_above()}
    out.table("divergence", ["K", "errD_below", "errN_below", "errD_above", "errN_above"], rows, summary)
    return 0


def compare_methods(cfg: ExperimentConfig, ctx: mpnum.PrecisionCtx) -> list[dict]:
    """RMS error of each selected method against the oracle on one problem."""
    with ctx:
        prob = make_problem(cfg, ctx)
        g = Grid(cfg.grid)
        f, D = prob.profile.sample(g), prob.dirichlet(g)
    if prob.neumann is not None:
        with ctx:
            oracle, oname = prob.neumann(g), "exact"
    else:
        with mpnum.PrecisionCtx(_ref_bits(cfg)):
            gr = Grid(cfg.grid)
            Nr = bim.bim_dno(prob.profile, prob.dirichlet(gr), gr, cfg.depth_value)
        with ctx:
            oracle, oname = np.array([+v for v in Nr], dtype=object), f"bim@{_ref_bits(cfg)}"
    table = []
    for m in cfg.methods:
        t0 = time.perf_counter()
        cond = None
        with ctx:
            if m == "bim":
                ker = bim.assemble_kernels(prob.profile, g, cfg.depth_value)
                sol = bim.bim_solve(ker, D)
                N, cond = sol.N, float(sol.cond)
            elif m == "tfe":
                N = tfe.tfe_dno(f, D, g, cfg.depth, cfg.order, cfg.cheb)
            elif m in ("afm", "afmstar"):
                K = cfg.K if cfg.K <= cfg.grid else cfg.grid
                s = afm.build_system(prob.profile, K, cfg.grid, cfg.depth_value)
                fn = afm.afm_neumann if m == "afm" else afm.afmstar_neumann
                N = fn(s, D, cfg.cutoff)
                cond = float(s.cond())
            else:
                N = cs.dno_apply(f, D, g, cfg.order, cfg.depth_value)
            err = mpnum.rms(N - oracle)
        table.append({"method": m, "rms_error": float(err), "seconds": time.perf_counter() - t0,
                      "bits": ctx.bits, "cond": cond, "oracle": oname})
    return table


def cmd_compare(cfg, ctx, out):
    table = compare_methods(cfg, ctx)
    rows = [(r["method"], r["rms_error"], r["bits"], "" if r["cond"] is None else r["cond"])
            for r in table]
    out.table("compare", ["method", "rms_error", "bits", "cond"], rows,
              {"timings_s": {r["method"]: round(r["seconds"], 3) for r in table},
               "oracle": table[0]["oracle"]})
    return 0


HANDLERS = {
    "cs-growth": cmd_cs_growth, "cs-columns": cmd_cs_columns, "cs-sym": cmd_cs_sym,
    "cs-apply": cmd_cs_apply, "afm-sweep": cmd_afm_sweep, "afm-transform": cmd_afm_transform,
    "bim-solve": cmd_bim_solve, "tfe-run": cmd_tfe_run, "demo-divergence": cmd_demo_divergence,
    "compare": cmd_compare,
}


# ---------------------------------------------------------------------------
# argument handling


def _int_list(s):
    try:
        return [int(v) for v in s.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dnomp", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with default parameters")
        sp.add_argument("--bits", type=int)
        sp.add_argument("--grid", type=int, help="number of grid points M")
        sp.add_argument("--modes", type=int, help="number of modes K")
        sp.add_argument("--order", type=int, help="highest expansion order")
        sp.add_argument("--cutoff", type=int)
        sp.add_argument("--depth", help="'inf' or a positive number")
        sp.add_argument("--profile", help="pole:EPS[:OFF] | flat[:K] | cosine:EPS[:OFF] | "
                        "shifted-cosine | exp-decay:A:B | poisson | bandlimited | analytic | smooth | "
                        "random:KMAX:AMP[:SEED] | FILE")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--cheb", type=int, help="Chebyshev degree N (tfe)")
        sp.add_argument("--eps", help="rescaling factor for reported norms (cs-growth)")
        sp.add_argument("--filter", action="store_true", default=None)
        sp.add_argument("--methods", type=lambda s: [m for m in s.split(",") if m])
        sp.add_argument("--columns", type=_int_list)
        sp.add_argument("--series-K", dest="series_K", type=_int_list)
        sp.add_argument("--ref-bits", dest="ref_bits", type=int)
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
    fields_ = set(ExperimentConfig.__dataclass_fields__) - {"command"}
    unknown = set(base) - fields_ - {"command"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    base.pop("command", None)
    for k in fields_:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    if "depth" in base:
        base["depth"] = str(base["depth"])
    try:
        cfg = ExperimentConfig(command=args.command, **base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        ctx = mpnum.PrecisionCtx(cfg.bits)
        out = Writer(cfg, ctx)
        code = HANDLERS[cfg.command](cfg, ctx, out)
    except (ConfigError, profiles.ProfileError, mpnum.PrecisionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (linalg.LinalgError, tfe.TfeError, DiagnosticFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for f in out.files:
        print(f)
    if code == 3:
        print("precision diagnostic tripped; see the JSON summary", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
