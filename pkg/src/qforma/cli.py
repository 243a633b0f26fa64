"""Command-line front end.

Exit codes: 0 success (or test accepted), 1 test rejected or verification
flagged a violation, 2 invalid input (files, config, dimensions), 3 domain
errors in the numeric parameters.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import bounds, hyptest, linalg, matio, montecarlo
from .errors import DimensionError, DomainError, MatrixFormatError, QformaError

EXIT_OK, EXIT_FLAGGED, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3
MAX_GRID_POINTS = 32
SEED_ENV = "QFORMA_SEED"


class ConfigError(QformaError):
    pass


class GridError(DomainError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    gen: str | None = None
    matrix: str | None = None
    data: str | None = None
    p: int | None = None
    q: float = 4.0
    k: int | None = None
    m: int | None = None
    r: float = 0.5
    mp: float | None = None
    c0: float = 1.0
    cq: float = 1.0
    dist: str | None = None
    alpha: float = 0.05
    n: int = 50
    seed: int = 0
    samples: int = montecarlo.DEFAULT_SAMPLES
    draws: int = hyptest.DEFAULT_DRAWS
    method: str | None = None
    family: str = "block"
    grid: str = "16,64,256,1024"
    structure: str = "block"
    simulate: str = "null"
    alt: str = "identity"
    null_matrix: str | None = None
    alt_matrix: str | None = None
    out: str | None = None
    format: str = "json"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def _cast(key: str, raw):
    if raw is None:
        return None
    kind = _FIELD_TYPES[key].split(" ")[0]
    try:
        if kind == "int":
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        return _CASTS[kind](raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def defaults() -> dict:
    return {f.name: f.default for f in fields(RunConfig) if f.name != "command"}


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES or key == "command":
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _cast(key, val)
    return out


def build_config(ns: argparse.Namespace, env=None) -> RunConfig:
    env = os.environ if env is None else env
    values = defaults()
    from_file = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    if "seed" not in from_file and SEED_ENV in env:
        values["seed"] = _cast("seed", env[SEED_ENV])
    values.update(from_file)
    for key in _FIELD_TYPES:
        val = getattr(ns, key, None)
        if val is not None and key != "command":
            values[key] = val
    cfg = RunConfig(command=ns.command, **values)
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.format not in ("json", "table"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    return cfg


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

def _block_shape(cfg: RunConfig) -> tuple[int, int]:
    m, k = cfg.m, cfg.k
    if m is None and k is None and cfg.p is not None:
        root = math.isqrt(cfg.p)
        if root * root != cfg.p:
            raise DomainError(f"p = {cfg.p} is not a perfect square; give --m and --k")
        return root, root
    if m is None and k is not None and cfg.p is not None:
        m = cfg.p // k
    if k is None and m is not None and cfg.p is not None:
        k = cfg.p // m
    if m is None or k is None:
        raise ConfigError("block generator needs --m and --k (or a square --p)")
    return m, k


def load_matrix(cfg: RunConfig) -> linalg.SymmetricMatrix:
    if cfg.matrix:
        return matio.read_matrix(cfg.matrix)
    gen = cfg.gen
    if gen is None:
        raise ConfigError("give a matrix file (--matrix) or a generator (--gen)")
    if gen == "block":
        m, k = _block_shape(cfg)
        return linalg.gen_block_ones(m, k)
    if cfg.p is None:
        raise ConfigError(f"generator {gen!r} needs --p")
    if gen == "identity":
        return linalg.gen_identity(cfg.p)
    if gen == "ones":
        return linalg.gen_ones(cfg.p)
    if gen == "zero":
        return linalg.gen_zero(cfg.p)
    if gen == "sparse":
        mp = cfg.mp if cfg.mp is not None else math.sqrt(cfg.p)
        return linalg.gen_sparse_member(cfg.p, cfg.r, mp, cfg.c0, cfg.seed)
    if gen == "random":
        return linalg.random_symmetric(cfg.p, montecarlo.substream(cfg.seed, 0, 0))
    raise ConfigError(f"unknown generator {gen!r}")


def _dist(cfg: RunConfig, fallback: str | None) -> montecarlo.ComponentDistribution | None:
    spec = cfg.dist or fallback
    return montecarlo.ComponentDistribution.parse(spec) if spec else None


def _profile(cfg: RunConfig) -> bounds.MomentProfile:
    dist = _dist(cfg, None)
    if dist is None:
        return bounds.MomentProfile.unit(cfg.q)
    return montecarlo.analytic_profile(dist, cfg.q)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_bound(cfg: RunConfig) -> tuple[dict, int]:
    method = cfg.method or "theorem1"
    prof = _profile(cfg)
    if method in ("corollary1", "corollary1_tracked"):
        p = cfg.p if cfg.p is not None else load_matrix(cfg).p
        mp = cfg.mp if cfg.mp is not None else math.sqrt(p)
        cor = bounds.corollary1_bound(p, cfg.q, cfg.r, mp, cfg.c0, prof, cfg.cq)
        res = cor.tracked if method == "corollary1_tracked" else cor.scaling
        return res.to_json_dict(), EXIT_OK
    a = load_matrix(cfg)
    if method == "theorem1":
        return bounds.theorem1_bound(a, prof, cfg.cq).to_json_dict(), EXIT_OK
    if method == "bai_silverstein":
        return bounds.bai_silverstein_bound(a, prof, cfg.cq).to_json_dict(), EXIT_OK
    if method == "compare":
        return bounds.compare_bounds(a, prof).to_json_dict(), EXIT_OK
    raise ConfigError(f"unknown bound method {method!r}")


def _parse_grid(text: str) -> list[int]:
    try:
        grid = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    if not grid:
        raise ConfigError("empty grid")
    if len(grid) > MAX_GRID_POINTS or max(grid) > linalg.MAX_DIM or min(grid) < 1:
        raise GridError(f"grid must have at most {MAX_GRID_POINTS} points in [1, {linalg.MAX_DIM}]")
    return grid


def family_matrix(family: str, p: int, cfg: RunConfig) -> linalg.SymmetricMatrix:
    if family == "identity":
        return linalg.gen_identity(p)
    if family == "ones":
        return linalg.gen_ones(p)
    if family == "block":
        k = math.isqrt(p)
        if k * k != p:
            raise DomainError(f"block family needs square p, got {p}")
        return linalg.gen_block_ones(k, k)
    if family == "sparse":
        mp = cfg.mp if cfg.mp is not None else math.sqrt(p)
        return linalg.gen_sparse_member(p, cfg.r, mp, cfg.c0, cfg.seed)
    raise ConfigError(f"unknown family {family!r}")


def _trend(ratios: list[float]) -> str:
    if len(ratios) < 2:
        return "constant"
    diffs = np.diff(ratios)
    # rounding-level wiggle counts as flat
    if np.all(np.abs(diffs) <= 1e-12 * max(abs(x) for x in ratios)):
        return "constant"
    if np.all(diffs < 0):
        return "decreasing"
    if np.all(diffs > 0):
        return "increasing"
    return "mixed"


def cmd_compare_scaling(cfg: RunConfig) -> tuple[dict, int]:
    grid = _parse_grid(cfg.grid)
    prof = _profile(cfg)
    rows = []
    for p in grid:
        cmp = bounds.compare_bounds(family_matrix(cfg.family, p, cfg), prof)
        rows.append({"p": p,
                     "theorem1_total": cmp.theorem1.structural_total,
                     "bs_total": cmp.bai_silverstein.structural_total,
                     "ratio": cmp.ratio,
                     "log_scale": cmp.theorem1.log_scale or cmp.bai_silverstein.log_scale})
    ratios = [row["ratio"] for row in rows]
    return {"family": cfg.family, "q": cfg.q, "rows": rows, "trend": _trend(ratios),
            "ratio_min": min(ratios), "ratio_max": max(ratios)}, EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    a = load_matrix(cfg)
    dist = _dist(cfg, "rademacher")
    emp = montecarlo.empirical_moment(a, dist, cfg.q, cfg.samples, cfg.seed)
    values = montecarlo.sample_quadform_deviations(a, dist, cfg.samples, cfg.seed)
    violations = []
    report = {"p": a.p, "q": cfg.q, "dist": str(dist), "empirical": emp.to_json_dict()}

    oracle = None
    if dist.tag == "rademacher" and a.p <= 12:
        oracle = montecarlo.exact_moment_rademacher(a, cfg.q)
        ok = abs(emp.estimate - oracle) <= 5 * emp.std_error
        report["oracle"] = oracle
        report["oracle_within_5se"] = ok
        if not ok:
            violations.append("oracle_agreement")
    else:
        report["oracle"] = None
        report["oracle_within_5se"] = None

    if cfg.q > 2:
        prof = montecarlo.analytic_profile(dist, cfg.q)
        t1 = bounds.theorem1_bound(a, prof)
        bs = bounds.bai_silverstein_bound(a, prof)
        report["theorem1"] = t1.to_json_dict()
        report["bai_silverstein"] = bs.to_json_dict()
        report["estimate_over_theorem1"] = (
            emp.estimate / t1.structural_total if t1.structural_total > 0 and not t1.log_scale else None)

    base = emp.estimate ** (1.0 / cfg.q) if emp.estimate > 0 else 1.0
    checks = []
    for mult in (0.5, 1.0, 2.0, 4.0):
        chk = montecarlo.markov_tail_check(values, cfg.q, base * mult)
        checks.append({"r": base * mult, **chk.to_json_dict()})
        if not chk.holds:
            violations.append(f"markov_r={base * mult:.17g}")
    report["markov"] = checks
    report["violations"] = violations
    report["pass"] = not violations
    return report, EXIT_OK if not violations else EXIT_FLAGGED


def build_pair(cfg: RunConfig) -> hyptest.HypothesisPair:
    if cfg.null_matrix or cfg.alt_matrix:
        if not (cfg.null_matrix and cfg.alt_matrix):
            raise ConfigError("give both --null-matrix and --alt-matrix")
        return hyptest.HypothesisPair.general(matio.read_matrix(cfg.null_matrix),
                                              matio.read_matrix(cfg.alt_matrix))
    if cfg.structure == "block":
        m = cfg.m if cfg.m is not None else 4
        k = cfg.k if cfg.k is not None else 4
        alt_blocks = None
        if cfg.alt == "ones":
            alt_blocks = [np.ones((k, k)) + np.eye(k)] * m
        elif cfg.alt != "identity":
            raise ConfigError(f"unknown alternative block {cfg.alt!r}")
        return hyptest.HypothesisPair.block(m, k, alt_blocks=alt_blocks)
    if cfg.structure == "sparse":
        if cfg.p is None:
            raise ConfigError("sparse structure needs --p")
        mp = cfg.mp if cfg.mp is not None else math.sqrt(cfg.p)
        return hyptest.sparse_alternative(cfg.p, cfg.r, mp, cfg.seed)
    raise ConfigError(f"unknown structure {cfg.structure!r}")


def cmd_test(cfg: RunConfig) -> tuple[dict, int]:
    pair = build_pair(cfg)
    dist = _dist(cfg, "gaussian")
    if cfg.data:
        data = matio.read_data(cfg.data)
    else:
        omega = {"null": pair.null, "alt": pair.alt}.get(cfg.simulate)
        if omega is None:
            raise ConfigError("--simulate must be 'null' or 'alt'")
        data = hyptest.simulate_observations(omega, dist, cfg.n, cfg.seed)
    if data.shape[1] != pair.p:
        raise DimensionError(f"data has {data.shape[1]} columns, hypotheses have p = {pair.p}")
    outcome = hyptest.run_test(
        data, pair, cfg.method or "gaussian_mc_percentile", alpha=cfg.alpha, q=cfg.q,
        dist=dist, cq=cfg.cq, n_draws=cfg.draws, seed=cfg.seed, m_p=cfg.mp)
    return outcome.to_json_dict(), EXIT_FLAGGED if outcome.reject else EXIT_OK


def cmd_simulate(cfg: RunConfig) -> tuple[str, int]:
    omega = load_matrix(cfg)
    data = hyptest.simulate_observations(omega, _dist(cfg, "gaussian"), cfg.n, cfg.seed)
    return matio.format_data(data), EXIT_OK


def cmd_percentile(cfg: RunConfig) -> tuple[dict, int]:
    g = load_matrix(cfg)
    crit = hyptest.gaussian_null_percentile(g, cfg.n, cfg.alpha, cfg.draws, cfg.seed)
    return {"critical_value": crit, "n": cfg.n, "alpha": cfg.alpha,
            "n_draws": cfg.draws, "seed": cfg.seed}, EXIT_OK


def cmd_defaults(cfg: RunConfig) -> tuple[dict, int]:
    return defaults(), EXIT_OK


COMMANDS = {
    "bound": cmd_bound,
    "compare-scaling": cmd_compare_scaling,
    "verify": cmd_verify,
    "test": cmd_test,
    "simulate": cmd_simulate,
    "percentile": cmd_percentile,
    "defaults": cmd_defaults,
}


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    if isinstance(v, (dict, list)):
        return json.dumps(v)
    return str(v)


def render_table(obj: dict) -> str:
    if "rows" in obj:
        rows = obj["rows"]
        cols = list(rows[0]) if rows else []
        cells = [cols] + [[_cell(r[c]) for c in cols] for r in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
        extra = {k: v for k, v in obj.items() if k != "rows"}
        return "\n".join(lines) + "\n" + render_table(extra)
    width = max((len(k) for k in obj), default=0)
    return "".join(f"{k.ljust(width)}  {_cell(v)}\n" for k, v in obj.items())


def render(result, fmt: str) -> str:
    if isinstance(result, str):
        return result
    if fmt == "table":
        return render_table(result)
    return json.dumps(result, indent=2) + "\n"


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    add = common.add_argument
    add("--config", help="flat key=value config file; flags override it")
    add("--gen", choices=["identity", "ones", "zero", "block", "sparse", "random"])
    add("--matrix", help="matrix file (dense CSV or sparse triplets)")
    add("--data", help="observation CSV with header 'n p'")
    add("--p", type=int)
    add("--q", type=float)
    add("--k", type=int)
    add("--m", type=int)
    add("--r", type=float)
    add("--mp", type=float, help="l^r budget M_p (default sqrt(p))")
    add("--c0", type=float)
    add("--cq", type=float)
    add("--dist", help="gaussian | rademacher | student_t(df) | centered_exponential | uniform_standardized")
    add("--alpha", type=float)
    add("--n", type=int)
    add("--seed", type=int)
    add("--samples", type=int, help="Monte Carlo sample count")
    add("--draws", type=int, help="percentile draws")
    add("--method")
    add("--family", choices=["identity", "ones", "block", "sparse"])
    add("--grid", help="comma-separated list of p values")
    add("--structure", choices=["block", "sparse"])
    add("--simulate", choices=["null", "alt"])
    add("--alt", choices=["identity", "ones"], help="alternative blocks for the block test")
    add("--null-matrix", dest="null_matrix")
    add("--alt-matrix", dest="alt_matrix")
    add("--out")
    add("--format", choices=["json", "table"])

    parser = argparse.ArgumentParser(prog="qforma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None, env=None) -> int:
    parser = make_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = build_config(ns, env)
        result, code = COMMANDS[cfg.command](cfg)
    except (MatrixFormatError, DimensionError, ConfigError) as exc:
        print(f"qforma: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QformaError as exc:
        print(f"qforma: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    text = render(result, cfg.format)
    if cfg.out:
        try:
            Path(cfg.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"qforma: error: cannot write {cfg.out}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
