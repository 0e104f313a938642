"""Command line entry point.

Exit status: 0 on success, 1 for usage errors (bad flags or out-of-range
parameters), 2 for domain errors (infeasible budget, malformed or
unnormalized input files).
"""

from __future__ import annotations

import math
import sys

import click

from . import bounds, dist, ensemble, extremal
from .report import dumps_document, fmt, render_json, render_text, sig

EXIT_USAGE = 1
EXIT_DOMAIN = 2
TIGHT_TOLERANCE = 1e-9


def _emit(ctx: click.Context, text: str):
    path = ctx.obj["output"]
    if path is None:
        click.echo(text, nl=False)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _positions(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated bit positions, got {text!r}") from None


def _status(value: float, bound: float) -> str:
    if abs(value - bound) <= TIGHT_TOLERANCE:
        return "tight"
    return "pass" if value <= bound + 1e-12 else "fail"


@click.group()
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Write the result to this file instead of standard output.")
@click.option("--format", "fmt_", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
@click.option("--precision", type=click.IntRange(3, 17), default=6, show_default=True,
              help="Significant digits for numeric output.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for ensemble sampling.")
@click.pass_context
def cli(ctx, output, fmt_, precision, seed):
    """Operational guarantees implied by a variational-distance level on a key."""
    ctx.ensure_object(dict)
    ctx.obj.update(output=output, format=fmt_, precision=precision, seed=seed)


@cli.command("report")
@click.option("--key-length", "-l", type=int, required=True)
@click.option("--trace-distance", "-d", type=float, required=True)
@click.option("--qber", type=float, default=None)
@click.option("--subset-size", "subset_sizes", type=int, multiple=True,
              help="Subset sizes to tabulate (default 1, 8, 64 and the whole key).")
@click.pass_context
def report_cmd(ctx, key_length, trace_distance, qber, subset_sizes):
    """Closed-form guarantee report for (l, d, QBER)."""
    params = bounds.SecurityParameters(key_length, trace_distance, qber)
    rep = bounds.build_report(params, subset_sizes or None)
    p = ctx.obj["precision"]
    _emit(ctx, render_json(rep, p) if ctx.obj["format"] == "json" else render_text(rep, p))


def analyze_distribution(P, subsets, known=None, target=None) -> dict:
    """Brute-force guarantees of an explicit distribution against the closed forms."""
    delta = dist.distance_to_uniform(P)
    pb = dist.eve_bit_error_rate(P)
    rows = []
    for S in subsets:
        g = dist.optimal_guess_prob(P, S)
        b = bounds.raw_guess_bound(S.size, delta)
        rows.append({
            "positions": list(S.positions),
            "guess_prob": g,
            "bound": b,
            "status": _status(g, b),
        })
    doc = {
        "key_length": P.key_length,
        "distance_to_uniform": delta,
        "is_uniform": dist.is_uniform(P, 0.0),
        "eve_bit_error_rate": pb,
        "ber_gap": 0.5 - pb,
        "ber_gap_bound": bounds.ber_gap_bound(delta),
        "ber_status": _status(0.5 - pb, bounds.ber_gap_bound(delta)),
        "subsets": rows,
    }
    if known is not None:
        g = dist.conditional_guess_prob(P, known, target)
        b = bounds.kpa_guess_bound(target.size, delta)
        # slack delta is only promised on average over the known values
        known_marg = dist.marginal(P, known.subset)
        avg = 0.0
        for v, w in enumerate(known_marg):
            if w > 0.0:
                obs = dist.SubsetOutcome(known.subset, v)
                avg += w * dist.conditional_guess_prob(P, obs, target)
        doc["conditional"] = {
            "known_positions": list(known.subset.positions),
            "known_bits": known.bits(),
            "target_positions": list(target.positions),
            "guess_prob": g,
            "bound": b,
            "status": _status(g, b),
            "averaged_over_known_values": avg,
            "averaged_status": _status(avg, b),
        }
    return doc


def _round_doc(obj, precision):
    if isinstance(obj, float):
        return sig(obj, precision)
    if isinstance(obj, dict):
        return {k: _round_doc(v, precision) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_doc(v, precision) for v in obj]
    return obj


def _analysis_text(doc: dict, p: int) -> str:
    lines = [
        f"key length: {doc['key_length']}",
        f"distance to uniform: {fmt(doc['distance_to_uniform'], p)}",
        f"uniform: {'yes' if doc['is_uniform'] else 'no'}",
        f"eve bit error rate: {fmt(doc['eve_bit_error_rate'], p)} "
        f"(gap {fmt(doc['ber_gap'], p)} vs bound {fmt(doc['ber_gap_bound'], p)}: {doc['ber_status']})",
        "",
        f"{'positions':<24}  {'guess':>12}  {'2^-m + delta':>12}  status",
    ]
    for r in doc["subsets"]:
        pos = ",".join(map(str, r["positions"]))
        if len(pos) > 24:
            pos = pos[:21] + "..."
        lines.append(f"{pos:<24}  {fmt(r['guess_prob'], p):>12}  {fmt(r['bound'], p):>12}  {r['status']}")
    c = doc.get("conditional")
    if c:
        lines += [
            "",
            f"known {c['known_positions']} = {c['known_bits']}, target {c['target_positions']}: "
            f"guess {fmt(c['guess_prob'], p)} vs {fmt(c['bound'], p)}: {c['status']}",
            f"  averaged over known values: {fmt(c['averaged_over_known_values'], p)}: "
            f"{c['averaged_status']}",
        ]
    return "\n".join(lines) + "\n"


@cli.command("analyze")
@click.argument("dist_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--subset", "subsets", multiple=True, help="Comma-separated bit positions.")
@click.option("--subset-size", "sizes", type=int, multiple=True,
              help="Analyze the first m bits (default: 1 and the whole key).")
@click.option("--known", default=None, help="Known segment as POSITIONS=BITS, e.g. 0,1=10.")
@click.option("--target", default=None, help="Positions to guess given --known.")
@click.pass_context
def analyze_cmd(ctx, dist_file, subsets, sizes, known, target):
    """Guess probabilities and BER of an explicit distribution file."""
    P = dist.load_distribution(dist_file)
    l = P.key_length
    chosen = [dist.KeySubset.of(_positions(s), l) for s in subsets]
    if not chosen and not sizes:
        sizes = (1, l)
    for m in sizes:
        if not 1 <= m <= l:
            raise click.BadParameter(f"subset size {m} not in [1, {l}]", param_hint="--subset-size")
        chosen.append(dist.KeySubset.prefix(m, l))
    known_obs = target_set = None
    if (known is None) != (target is None):
        raise click.UsageError("--known and --target go together")
    if known is not None:
        if "=" not in known:
            raise click.BadParameter("expected POSITIONS=BITS", param_hint="--known")
        pos_text, bits = known.split("=", 1)
        known_obs = dist.SubsetOutcome.from_bits(dist.KeySubset.of(_positions(pos_text), l), bits)
        target_set = dist.KeySubset.of(_positions(target), l)
    doc = analyze_distribution(P, chosen, known_obs, target_set)
    p = ctx.obj["precision"]
    if ctx.obj["format"] == "json":
        _emit(ctx, dumps_document(_round_doc(doc, p)))
    else:
        _emit(ctx, _analysis_text(doc, p))


@cli.command("extremal")
@click.option("--key-length", "-l", type=int, required=True)
@click.option("--epsilon", "--budget", "epsilon", type=float, required=True)
@click.option("--positions", default=None, help="Target positions (default: whole key).")
@click.option("--favored", default=None, help="Favored outcome bits (default: all zeros).")
@click.pass_context
def extremal_cmd(ctx, key_length, epsilon, positions, favored):
    """Emit a distribution meeting the subset guessing bound with equality."""
    pos = _positions(positions) if positions else list(range(key_length))
    target = dist.KeySubset.of(pos, key_length)
    outcome = (dist.SubsetOutcome.from_bits(target, favored) if favored is not None
               else dist.SubsetOutcome(target, 0))
    recipe = extremal.ExtremalRecipe(key_length, epsilon, target, outcome)
    P = extremal.construct_equality_distribution(recipe)
    _emit(ctx, dist.dumps_distribution(P))


@cli.command("ensemble")
@click.argument("ensemble_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--threshold", "-t", type=float, default=None,
              help="Exceedance threshold (default: square root of the average).")
@click.option("--sample", type=int, default=None, help="Sample an ensemble of this size instead of reading a file.")
@click.option("--mean", type=float, default=1e-3, show_default=True)
@click.option("--spread", type=float, default=1.0, show_default=True)
@click.option("--write", "write_path", type=click.Path(dir_okay=False), default=None,
              help="Save the sampled ensemble to this file.")
@click.pass_context
def ensemble_cmd(ctx, ensemble_file, threshold, sample, mean, spread, write_path):
    """Markov exceedance check for an ensemble of per-instance distances."""
    if (ensemble_file is None) == (sample is None):
        raise click.UsageError("give exactly one of ENSEMBLE_FILE or --sample")
    if sample is not None:
        e = ensemble.sample_ensemble(sample, mean, ctx.obj["seed"], spread)
        if write_path:
            ensemble.save_ensemble(e, write_path)
    else:
        e = ensemble.load_ensemble(ensemble_file)
    avg = ensemble.average_distance(e)
    if threshold is None:
        if avg == 0.0:
            raise click.BadParameter("average is 0; give a threshold", param_hint="--threshold")
        threshold = math.sqrt(avg)
    if not threshold > 0:
        raise click.BadParameter("must be > 0", param_hint="--threshold")
    frac = ensemble.exceedance_fraction(e, threshold)
    mb = ensemble.markov_bound(e, threshold)
    if abs(frac - mb) <= 1e-12:
        status = "tight"
    else:
        status = "pass" if frac <= mb else "fail"
    doc = {
        "entries": len(e),
        "average_distance": avg,
        "threshold": threshold,
        "exceedance": frac,
        "markov_bound": mb,
        "status": status,
    }
    if 0.0 < avg < 1.0:
        exc, eps = ensemble.individual_guarantee_split(avg)
        doc["split"] = {"exception_probability": exc, "conditional_epsilon": eps}
    if e.distributions is not None:
        subsets = {dist.KeySubset.whole(P.key_length) for P in e.distributions}
        checks = ensemble.check_individual_guarantees(e, sorted(subsets, key=lambda s: s.key_length))
        doc["individual_violations"] = sum(not c["ok"] for c in checks)
    p = ctx.obj["precision"]
    if ctx.obj["format"] == "json":
        _emit(ctx, dumps_document(_round_doc(doc, p)))
        return
    if status == "tight":
        verdict = "exceedance = bound (tight)"
    elif status == "pass":
        verdict = "exceedance <= bound (pass)"
    else:
        verdict = "exceedance > bound (FAIL)"
    lines = [
        f"entries: {len(e)}",
        f"average distance: {fmt(avg, p)}",
        f"threshold: {fmt(threshold, p)}",
        f"exceedance: {fmt(frac, p)}",
        f"Markov bound: {fmt(mb, p)}",
        verdict,
    ]
    if "split" in doc:
        lines.append(
            f"square-root split: exception {fmt(doc['split']['exception_probability'], p)}, "
            f"conditional epsilon {fmt(doc['split']['conditional_epsilon'], p)}"
        )
    if "individual_violations" in doc:
        lines.append(f"individual bound violations: {doc['individual_violations']}")
    _emit(ctx, "\n".join(lines) + "\n")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="keyguarantee", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except bounds.ParameterError as exc:
        click.echo(f"error: invalid parameter {exc}", err=True)
        return EXIT_USAGE
    except (dist.DistributionError, ensemble.EnsembleError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
