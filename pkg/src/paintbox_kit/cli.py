"""Command-line front end: ``paintbox-kit {sample,prob,verify,paintbox}``.

Exit codes: 0 success, 1 verification outcome differs from ``--expect``,
2 invalid configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import secrets
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import SCHEMA
from .allocation import FeatureAllocation, OrderedFeatureAllocation, multiplicity_profile, ordering_factor
from .montecarlo import (
    binomial_z,
    empirical,
    mask_counts,
    tally,
    tally_codes,
    total_variation,
)
from .oracle import (
    check_consistency,
    check_efpf_form,
    check_exchangeable,
    exact_distribution_efpf_model,
    exact_distribution_finite_freq,
    exact_distribution_paintbox,
    exact_distribution_two_feature,
    ibp_history_distribution,
)
from .paintbox import (
    KingmanPaintbox,
    build_frequency_paintbox,
    kingman_sample,
    paintbox_cells_product_check,
    paintbox_memberships,
    two_feature_paintbox,
)
from .poisson_binomial import SpikeMeasure, epb_log_pgf, epb_log_pgf_series, epb_pmf_full, epb_sample
from .probability import (
    EfpfValue,
    IbpParams,
    TwoFeatureParams,
    bernoulli_two_feature_efpf,
    efpf_model_efpf,
    frequency_model_efpf,
    ibp_efpf,
    ibp_unordered_prob,
    two_feature_ordered_prob,
    two_feature_unordered_prob,
)
from .samplers import (
    EfpfModel,
    FrequencyModel,
    efpf_model_sample,
    frequency_model_sample,
    ibp_sample_allocation,
    two_feature_sample,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
MODEL_TYPES = ("ibp", "finite_freq", "two_feature", "bernoulli_two_feature", "efpf_model", "kingman", "epb")


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------ config

def parse_number(x):
    """JSON ints stay ints, strings such as "1/10" or "0.1" become exact Fractions."""
    if isinstance(x, bool):
        raise ConfigError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise ConfigError(f"cannot parse number {x!r}") from None
    raise ConfigError(f"expected a number, got {x!r}")


def _numbers(spec: dict, key: str) -> list:
    vals = spec.get(key, [])
    if not isinstance(vals, list):
        raise ConfigError(f"'{key}' must be a list")
    return [parse_number(v) for v in vals]


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=dict)
    n: Optional[int] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    output: Optional[str] = None
    format: str = "json"
    ordered: bool = False
    tol: Optional[float] = None

    @property
    def model_type(self) -> str:
        return self.model.get("type", "")

    def validate(self):
        if self.model and self.model_type not in MODEL_TYPES:
            raise ConfigError(f"unknown model type {self.model_type!r}; expected one of {', '.join(MODEL_TYPES)}")
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be at least 1")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit non-negative integer")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")


def load_config(args) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
    cfg = ExperimentConfig(
        model=base.get("model", {}),
        n=base.get("n"),
        samples=base.get("samples"),
        seed=base.get("seed"),
        output=base.get("output"),
        format=base.get("format", "json"),
    )
    if args.model:
        try:
            cfg.model = json.loads(args.model)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--model is not valid JSON: {exc}") from None
    if not isinstance(cfg.model, dict):
        raise ConfigError("model must be a JSON object with a 'type' field")
    for key in ("n", "samples", "seed", "tol"):
        if getattr(args, key) is not None:
            setattr(cfg, key, getattr(args, key))
    if args.out is not None:
        cfg.output = args.out
    if args.format is not None:
        cfg.format = args.format
    cfg.ordered = args.ordered
    cfg.validate()
    return cfg


def build_model(spec: dict):
    """Turn a tagged model spec into the library object it describes."""
    kind = spec.get("type")
    try:
        if kind == "ibp":
            return IbpParams(
                float(parse_number(spec.get("mass", 1))),
                float(parse_number(spec.get("concentration", 1))),
                float(parse_number(spec.get("discount", 0))),
            )
        if kind == "finite_freq":
            return FrequencyModel(tuple(_numbers(spec, "freqs")))
        if kind == "two_feature":
            return TwoFeatureParams(*(parse_number(spec[k]) for k in ("p10", "p01", "p11", "p00")))
        if kind == "bernoulli_two_feature":
            qa, qb = parse_number(spec["qa"]), parse_number(spec["qb"])
            if not (0 < qa < 1 and 0 < qb < 1):
                raise ValueError("qa and qb must lie in (0, 1)")
            return (qa, qb)
        if kind == "efpf_model":
            rate = parse_number(spec.get("lambda", 0))
            return EfpfModel(FrequencyModel(tuple(_numbers(spec, "freqs"))), rate)
        if kind == "kingman":
            return KingmanPaintbox(tuple(_numbers(spec, "atoms")))
        if kind == "epb":
            atoms = sorted((float(p) for p in _numbers(spec, "atoms")), reverse=True)
            return SpikeMeasure(float(parse_number(spec.get("lambda", 0))), tuple(atoms))
    except KeyError as exc:
        raise ConfigError(f"model {kind!r} is missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} model: {exc}") from None
    raise ConfigError(f"unknown model type {kind!r}")


# ------------------------------------------------------------ output

def write_atomic(path: str, text: str):
    """Write via a temporary file and rename, so failures leave no partial file."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(cfg: ExperimentConfig, text: str, out=None):
    path = out or cfg.output
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _rng(cfg: ExperimentConfig, required: bool) -> np.random.Generator:
    if cfg.seed is None:
        if required:
            raise ConfigError("this command needs an explicit --seed")
        cfg.seed = secrets.randbits(63)
        print(f"seed={cfg.seed}", file=sys.stderr)
    return np.random.default_rng(cfg.seed)


# ------------------------------------------------------------ sample

def _sampler(cfg: ExperimentConfig):
    model = build_model(cfg.model)
    kind = cfg.model_type
    if kind == "ibp":
        return lambda rng: ibp_sample_allocation(model, cfg.n, rng)
    if kind == "finite_freq":
        return lambda rng: frequency_model_sample(model, cfg.n, rng)
    if kind == "two_feature":
        return lambda rng: two_feature_sample(model, cfg.n, rng)
    if kind == "efpf_model":
        return lambda rng: efpf_model_sample(model, cfg.n, rng)
    if kind == "kingman":
        return lambda rng: kingman_sample(model, cfg.n, rng)
    if kind == "epb":
        return lambda rng: int(epb_sample(model, rng))
    raise ConfigError(f"model {kind!r} has no sampler")


def cmd_sample(cfg: ExperimentConfig) -> int:
    if not cfg.model:
        raise ConfigError("sample needs --model")
    if cfg.samples is None:
        raise ConfigError("sample needs --samples")
    if cfg.n is None and cfg.model_type != "epb":
        raise ConfigError("sample needs --n")
    draw = _sampler(cfg)
    rng = _rng(cfg, required=False)
    buf = io.StringIO()
    if cfg.format == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        if cfg.model_type == "epb":
            writer.writerow(["sample", "value"])
            for s in range(cfg.samples):
                writer.writerow([s, draw(rng)])
        else:
            writer.writerow(["sample", "feature", "indices"])
            for s in range(cfg.samples):
                for k, f in enumerate(draw(rng).features, start=1):
                    writer.writerow([s, k, " ".join(map(str, f))])
    else:
        for _ in range(cfg.samples):
            x = draw(rng)
            rec = {"schema": SCHEMA, "value": x} if isinstance(x, int) else {"schema": SCHEMA, **x.to_json()}
            buf.write(json.dumps(rec, sort_keys=True) + "\n")
    emit(cfg, buf.getvalue())
    return EXIT_OK


# ------------------------------------------------------------ prob

def _value_record(value: EfpfValue) -> dict:
    return {
        "log_prob": value.log_prob,
        "prob": value.prob,
        "exact": None if value.exact is None else str(value.exact),
    }


def _prob_value(cfg: ExperimentConfig, sizes, features):
    """(value, ordered) for the query; ``features`` wins over ``sizes``."""
    kind = cfg.model_type
    model = build_model(cfg.model)
    n = cfg.n
    fa = None
    if features is not None:
        fa = FeatureAllocation(n, tuple(tuple(f) for f in features))
        sizes = [len(f) for f in features]
    if sizes is None:
        raise ConfigError("prob needs --sizes or --allocation")
    factor = ordering_factor(multiplicity_profile(fa)) if fa is not None else None
    if kind == "ibp":
        if fa is None or cfg.ordered:
            return ibp_efpf(model, n, sizes), True
        return ibp_unordered_prob(model, fa), False
    if kind == "two_feature":
        if fa is None:
            raise ConfigError("two_feature probabilities need --allocation")
        if cfg.ordered:
            return two_feature_ordered_prob(model, OrderedFeatureAllocation(n, tuple(tuple(f) for f in features))), True
        return two_feature_unordered_prob(model, fa), False
    if kind == "bernoulli_two_feature":
        if len(sizes) != 2 or fa is not None:
            raise ConfigError("bernoulli_two_feature takes --sizes m1,m2")
        return bernoulli_two_feature_efpf(*model, n, sizes), True
    if kind in ("finite_freq", "efpf_model"):
        if kind == "finite_freq":
            value = frequency_model_efpf(model.freqs, n, sizes)
        else:
            value = efpf_model_efpf(model.freq_model.freqs, model.singleton_rate, n, sizes)
        if fa is None or cfg.ordered:
            return value, True
        return value.scaled(1 / factor), False
    raise ConfigError(f"model {kind!r} has no exact allocation probability")


def cmd_prob(cfg: ExperimentConfig, sizes, features, j_max: int) -> int:
    if not cfg.model:
        raise ConfigError("prob needs --model")
    if cfg.model_type == "epb":
        pmf, dropped = epb_pmf_full(build_model(cfg.model), cfg.tol or 1e-12)
        vals = [float(x) for x in pmf[: j_max + 1]] + [0.0] * max(0, j_max + 1 - pmf.size)
        rec = {"schema": SCHEMA, "model": cfg.model_type, "pmf": vals, "truncated_mass": dropped}
    else:
        if cfg.n is None:
            raise ConfigError("prob needs --n")
        value, ordered = _prob_value(cfg, sizes, features)
        rec = {"schema": SCHEMA, "model": cfg.model_type, "n": cfg.n, "ordered": ordered, **_value_record(value)}
        if features is not None:
            rec["features"] = features
        else:
            rec["sizes"] = list(sizes)
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if "pmf" in rec:
            writer.writerow(["j", "pmf"])
            writer.writerows(enumerate(rec["pmf"]))
        else:
            writer.writerow(["log_prob", "prob", "exact"])
            writer.writerow([rec["log_prob"], rec["prob"], rec["exact"] or ""])
        emit(cfg, buf.getvalue())
    else:
        emit(cfg, _json(rec))
    return EXIT_OK


# ------------------------------------------------------------ verify

@dataclass
class Check:
    name: str
    passed: bool
    discrepancy: float = 0.0
    detail: str = ""

    def __post_init__(self):
        # checks often come back as numpy scalars, which json cannot encode
        self.passed = bool(self.passed)
        self.discrepancy = float(self.discrepancy)


def _oracle(cfg: ExperimentConfig, n: int):
    kind = cfg.model_type
    model = build_model(cfg.model)
    if kind == "two_feature":
        return exact_distribution_two_feature(model, n)
    if kind == "finite_freq":
        return exact_distribution_finite_freq(model.freqs, n)
    if kind == "efpf_model":
        return exact_distribution_efpf_model(model.freq_model.freqs, model.singleton_rate, n, max_features=4)
    raise ConfigError(f"no exact oracle for model {kind!r}")


def suite_exchangeability(cfg):
    n = cfg.n or 3
    dist = _oracle(cfg, n)
    return [Check(f"exchangeable n={n}", check_exchangeable(dist))]


def suite_consistency(cfg):
    n = cfg.n or 3
    dists = {m: _oracle(cfg, m) for m in range(1, n + 2)}
    return [Check(f"consistent {m}->{m + 1}", check_consistency(dists[m], dists[m + 1])) for m in range(1, n + 1)]


def suite_efpf_form(cfg):
    n = cfg.n or 2
    res = check_efpf_form(_oracle(cfg, n))
    if res.has_efpf:
        return [Check(f"efpf form n={n}", True, detail=f"{len(res.table)} size profiles")]
    a, b = res.witness
    pa, pb = res.witness_probs
    detail = f"witness {a} -> {pa} vs {b} -> {pb}"
    return [Check(f"efpf form n={n}", False, float(abs(pa - pb)), detail)]


def suite_sampler_vs_closed_form(cfg):
    rng = _rng(cfg, required=True)
    n = cfg.n or 2
    samples = cfg.samples or 100_000
    kind = cfg.model_type
    model = build_model(cfg.model)
    if kind == "ibp":
        if n > 3:
            raise ConfigError("ibp closed-form suite supports n <= 3")
        table, _ = ibp_history_distribution(model, n)
        exact = {fa: ibp_unordered_prob(model, fa).prob for fa in table}
        counts = tally(ibp_sample_allocation(model, n, rng) for _ in range(samples))
    else:
        exact = {fa: float(p) for fa, p in _oracle(cfg, n).probs.items()}
        counts = tally(_sampler(cfg)(rng) for _ in range(samples))
    out = []
    for fa, p in sorted(exact.items(), key=lambda kv: -kv[1]):
        if p < 1e-3:
            continue
        z = binomial_z(counts.get(fa, 0), samples, p)
        out.append(Check(f"P({fa})", abs(z) < 3, abs(z), f"expected {p:.6g}, observed {counts.get(fa, 0) / samples:.6g}"))
    return out


def suite_paintbox_equivalence(cfg):
    rng = _rng(cfg, required=True)
    n = cfg.n or 2
    samples = cfg.samples or 1_000_000
    tol = cfg.tol or 0.01
    if cfg.model_type != "finite_freq":
        raise ConfigError("paintbox-equivalence needs a finite_freq model")
    freqs = build_model(cfg.model).freqs
    pb = build_frequency_paintbox(freqs)
    exact = exact_distribution_finite_freq(freqs, n)
    via_cells = exact_distribution_paintbox(pb, n)
    counts = tally_codes(mask_counts(paintbox_memberships(pb, n, rng, samples)), n)
    tv = total_variation(empirical(counts), exact.probs)
    return [
        Check("cell lengths are products", paintbox_cells_product_check(freqs)),
        Check("cell integration equals oracle", via_cells.probs == exact.probs),
        Check(f"sampled TV < {tol}", tv < tol, tv, f"{samples} draws"),
    ]


def suite_epb(cfg):
    rng = _rng(cfg, required=True)
    mu = build_model(cfg.model)
    samples = cfg.samples or 1_000_000
    pmf, dropped = epb_pmf_full(mu, 1e-12)
    norm = abs(pmf.sum() + dropped - 1)
    gaps = []
    for s in np.arange(1, 10) / 10:
        closed = epb_log_pgf(mu, float(s))
        series, bound = epb_log_pgf_series(mu, float(s))
        gaps.append(abs(closed - series))
    x = np.asarray(epb_sample(mu, rng, size=samples), dtype=float)
    j = np.arange(pmf.size)
    mean, var = mu.mean, mu.variance
    mu4 = float(np.sum(pmf * (j - mean) ** 4))
    z_mean = abs(x.mean() - mean) / math.sqrt(var / samples) if var > 0 else abs(x.mean() - mean)
    se_var = math.sqrt(max(mu4 - var**2, 0) / samples)
    z_var = abs(x.var(ddof=1) - var) / se_var if se_var > 0 else abs(x.var(ddof=1) - var)
    return [
        Check("pmf normalisation", norm < 1e-10, norm),
        Check("pgf closed form vs moment series", max(gaps) < 1e-8, max(gaps)),
        Check("sample mean within 3 se", z_mean < 3, z_mean),
        Check("sample variance within 3 se", z_var < 3, z_var),
    ]


SUITES = {
    "exchangeability": (suite_exchangeability, {"type": "two_feature", "p10": "1/10", "p01": "1/5", "p11": "3/10", "p00": "2/5"}),
    "consistency": (suite_consistency, {"type": "two_feature", "p10": "1/10", "p01": "1/5", "p11": "3/10", "p00": "2/5"}),
    "efpf-form": (suite_efpf_form, {"type": "two_feature", "p10": "1/10", "p01": "1/5", "p11": "3/10", "p00": "2/5"}),
    "sampler-vs-closed-form": (suite_sampler_vs_closed_form, {"type": "ibp", "mass": 1, "concentration": 1, "discount": 0}),
    "paintbox-equivalence": (suite_paintbox_equivalence, {"type": "finite_freq", "freqs": ["1/2", "1/2"]}),
    "epb": (suite_epb, {"type": "epb", "lambda": 1, "atoms": []}),
}


def cmd_verify(cfg: ExperimentConfig, suite: str, expect: str) -> int:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(sorted(SUITES))}")
    fn, default_model = SUITES[suite]
    if not cfg.model:
        cfg.model = default_model
    checks = sorted(fn(cfg), key=lambda c: c.name)
    all_pass = all(c.passed for c in checks)
    width = max(len(c.name) for c in checks)
    lines = [f"suite {suite} seed={cfg.seed}"]
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{c.name:<{width}}  {status}  {c.discrepancy:.3g}  {c.detail}".rstrip())
    lines.append(f"result: {'PASS' if all_pass else 'FAIL'} (expected {expect.upper()})")
    print("\n".join(lines))
    if cfg.output:
        rec = {
            "schema": SCHEMA,
            "suite": suite,
            "seed": cfg.seed,
            "passed": all_pass,
            "checks": [c.__dict__ for c in checks],
        }
        write_atomic(cfg.output, _json(rec))
    return EXIT_OK if all_pass == (expect == "pass") else EXIT_FAIL


# ------------------------------------------------------------ paintbox

def cmd_paintbox(cfg: ExperimentConfig) -> int:
    kind = cfg.model_type
    model = build_model(cfg.model) if cfg.model else None
    if kind == "finite_freq":
        pb = build_frequency_paintbox(model.freqs)
    elif kind == "two_feature":
        pb = two_feature_paintbox(model)
    elif kind == "kingman":
        pb = model.intervals()
    else:
        raise ConfigError(f"paintbox export supports finite_freq, two_feature and kingman, not {kind!r}")
    rec = {"schema": SCHEMA, "model": cfg.model_type, **pb.to_json()}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["feature", "s", "e"])
    for k, c in enumerate(pb.subsets, start=1):
        for s, e in c.intervals:
            writer.writerow([k, repr(float(s)), repr(float(e))])
    if cfg.format == "csv":
        emit(cfg, buf.getvalue())
    elif cfg.output:
        write_atomic(cfg.output, _json(rec))
        write_atomic(str(Path(cfg.output).with_suffix(".csv")), buf.getvalue())
    else:
        emit(cfg, _json(rec))
    return EXIT_OK


# ------------------------------------------------------------ entry point

def _parse_sizes(text: Optional[str]):
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got {text!r}") from None


def _parse_allocation(text: Optional[str]):
    if text is None:
        return None
    try:
        feats = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--allocation is not valid JSON: {exc}") from None
    if not isinstance(feats, list) or not all(isinstance(f, list) for f in feats):
        raise ConfigError("--allocation must be a JSON list of index lists")
    return feats


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="64-bit seed for the random stream")
    common.add_argument("--format", choices=("json", "csv"), help="output format (default json)")
    common.add_argument("--out", help="output path; written atomically")
    common.add_argument("--ordered", action="store_true", help="ordered rather than unordered probability")
    common.add_argument("--samples", type=int, help="number of draws")
    common.add_argument("--tol", type=float, help="tolerance for verify checks or pmf truncation")
    common.add_argument("--n", type=int, help="number of indices")
    common.add_argument("--config", help="JSON file with an ExperimentConfig")
    common.add_argument("--model", help='model spec as JSON, e.g. \'{"type": "ibp", "mass": 1}\'')

    parser = argparse.ArgumentParser(prog="paintbox-kit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="draw allocations as JSON lines")
    p = sub.add_parser("prob", parents=[common], help="exact allocation probability")
    p.add_argument("--sizes", help="comma-separated feature sizes (EFPF query)")
    p.add_argument("--allocation", help="JSON list of features, e.g. [[1,2],[3]]")
    p.add_argument("--jmax", type=int, default=20, help="last pmf index for epb models")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help=f"one of: {', '.join(sorted(SUITES))}")
    v.add_argument("--expect", choices=("pass", "fail"), default="pass", help="outcome that counts as success")
    sub.add_parser("paintbox", parents=[common], help="export paintbox geometry")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "prob":
            return cmd_prob(cfg, _parse_sizes(args.sizes), _parse_allocation(args.allocation), args.jmax)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, args.expect)
        return cmd_paintbox(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
