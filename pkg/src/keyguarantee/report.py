"""Rendering of guarantee reports as a text table or a JSON document."""

from __future__ import annotations

import json
import math

from .bounds import GuaranteeReport


def sig(x: float | None, precision: int = 6):
    """Round to ``precision`` significant digits; non-finite values become None."""
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.{precision}g}")


def fmt(x: float | None, precision: int = 6) -> str:
    """Compact scientific text, e.g. ``2.154e-7`` rather than ``2.154e-07``."""
    if x is None:
        return "n/a"
    if not math.isfinite(x):
        return str(x)
    s = f"{x:.{precision}g}"
    if "e" in s:
        mant, exp = s.split("e")
        s = f"{mant}e{int(exp)}"
    return s


def _bound_entry(value: float, log2_value: float, precision: int) -> dict:
    return {"value": sig(value, precision), "log2": sig(log2_value, 12)}


def report_to_document(rep: GuaranteeReport, precision: int = 6) -> dict:
    p = rep.params
    claim = rep.wrong_interpretation_claim
    rows = []
    for r in rep.raw_rows:
        rows.append({
            "subset_size": r.subset_size,
            "averaged": _bound_entry(r.averaged, r.log2_averaged, precision),
            "individual": _bound_entry(r.individual, r.log2_individual, precision),
        })
    return {
        "params": {
            "key_length": p.key_length,
            "trace_distance": sig(p.trace_distance, precision),
            "log2_trace_distance": sig(math.log2(p.trace_distance), 12) if p.trace_distance > 0 else None,
            "qber": sig(p.qber, precision),
        },
        "subset_sizes": list(rep.subset_sizes),
        "raw_subset_bound_avg": {str(k): sig(v, precision) for k, v in rep.raw_subset_bound_avg.items()},
        "raw_subset_bound_individual": {str(k): sig(v, precision) for k, v in rep.raw_subset_bound_individual.items()},
        "kpa_bound_avg": {str(k): sig(v, precision) for k, v in rep.kpa_bound_avg.items()},
        "kpa_bound_individual": {str(k): sig(v, precision) for k, v in rep.kpa_bound_individual.items()},
        "subset_bounds": rows,
        "individual_epsilon": sig(rep.individual_epsilon, precision),
        "individual_epsilon_single_avg": sig(rep.individual_epsilon_single_avg, precision),
        "ber_gap_bound": sig(rep.ber_gap_bound, precision),
        "ber_gap_bound_individual": sig(rep.ber_gap_bound_individual, precision),
        "effective_uniform_bits_avg": sig(rep.effective_uniform_bits_avg, precision),
        "effective_uniform_bits_avg_display": rep.effective_uniform_bits_avg_display,
        "effective_uniform_bits_individual": sig(rep.effective_uniform_bits_individual, precision),
        "effective_uniform_bits_individual_display": rep.effective_uniform_bits_individual_display,
        "lambda": sig(rep.lambda_, precision),
        "near_uniform": rep.near_uniform,
        "leak_ec": sig(rep.leak_ec, precision),
        "leak_ec_subtraction_valid": rep.leak_ec_subtraction_valid,
        "wrong_interpretation_claim": {
            "statement": claim.statement,
            "status": claim.status,
            "claimed_probability_ideal": sig(claim.claimed_probability_ideal, precision),
            "actual_probability_ideal": sig(claim.actual_probability_ideal, precision),
            "markov_exponent_under_claim": claim.markov_exponent_under_claim,
            "individual_epsilon_under_claim": sig(claim.individual_epsilon_under_claim, precision),
        },
        "notes": list(rep.notes),
    }


def dumps_document(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_json(rep: GuaranteeReport, precision: int = 6) -> str:
    return dumps_document(report_to_document(rep, precision))


def render_text(rep: GuaranteeReport, precision: int = 6) -> str:
    p = rep.params
    claim = rep.wrong_interpretation_claim
    d = p.trace_distance
    lines = [
        f"key length l: {p.key_length} bits",
        f"trace distance d: {fmt(d, precision)}",
        "",
        f"effective uniform bits: {rep.effective_uniform_bits_avg_display} "
        f"({fmt(rep.effective_uniform_bits_avg, precision)}, averaged)",
        f"effective uniform bits after Markov: {rep.effective_uniform_bits_individual_display} "
        f"({fmt(rep.effective_uniform_bits_individual, precision)}, individual)",
        f"individual (d^1/3): {fmt(rep.individual_epsilon, 4)}",
        f"single average (d^1/2): {fmt(rep.individual_epsilon_single_avg, 4)}",
        f"lambda: {fmt(rep.lambda_, precision)}",
        f"near uniform on the 2^-l scale: {'yes' if rep.near_uniform else 'no'}",
        "",
        "subset guess-probability bounds (2^-m + slack)",
        f"{'m':>8}  {'averaged (d)':>16}  {'individual (d^1/3)':>20}",
    ]
    for r in rep.raw_rows:
        lines.append(
            f"{r.subset_size:>8}  {fmt(r.averaged, precision):>16}  {fmt(r.individual, precision):>20}"
        )
    lines += [
        "known-plaintext bounds have the same values with their own slack set to d",
        "",
        f"BER gap bound 1/2 - p_b <= {fmt(rep.ber_gap_bound, precision)} (averaged), "
        f"{fmt(rep.ber_gap_bound_individual, precision)} (individual)",
    ]
    if rep.leak_ec is not None:
        lines.append(
            f"leak_EC = h(QBER={fmt(p.qber, precision)}): {fmt(rep.leak_ec, precision)} bits per bit; "
            f"subtraction valid: {'yes' if rep.leak_ec_subtraction_valid else 'no'}"
        )
    lines += [
        "",
        "interpretation comparison",
        f"  refuted: {claim.statement}",
        f"    claimed P(ideal) = {fmt(claim.claimed_probability_ideal, precision)}, "
        f"Markov once -> {fmt(claim.individual_epsilon_under_claim, 4)}",
        f"  actual: P(ideal) = {fmt(claim.actual_probability_ideal, precision)}; "
        f"guarantees are the bounds above",
        "",
    ]
    lines += [f"note: {n}" for n in rep.notes]
    return "\n".join(lines) + "\n"
