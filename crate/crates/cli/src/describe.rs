//! Human-readable breakdown of one report row.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::report::{read_row, StoredRow};

/// Meaning of a report column, or `None` for bookkeeping columns.
fn meaning(column: &str) -> Option<&'static str> {
    Some(match column {
        "t" => "exponent t of the multiplier symbol (w/⟨w⟩_I)^t",
        "c1" => "condition (i) of the three-weight characterization: sup_I ⟨u⁻¹⟩_I ⟨v w^{2t}⟩_I / ⟨w⟩_I^{2t}",
        "c2" => "condition (ii): Carleson intensity of |I| |Δ_I(v w^{2t})|² ⟨u⁻¹⟩_I / (⟨v w^{2t}⟩_I ⟨w⟩_I^{2t}) against u⁻¹",
        "c3" => "condition (iii): Carleson intensity of |I| |Δ_I u⁻¹|² ⟨v w^{2t}⟩_I / (⟨u⁻¹⟩_I ⟨w⟩_I^{2t}) against v w^{2t}",
        "c4" => "condition (iv): norm of the positive operator P^t_{w,λ} from L²(u) to L²(v)",
        "c4_method" => "how C₄ was computed",
        "c4_bound" => "whether C₄ is exact or a lower bound",
        "combined" => "√C₁ + √C₂ + √C₃ + C₄, the upper proxy for the uniform norm",
        "sup_sigma" => "sign-search lower bound on sup_σ ‖T^t_{w,σ}‖ from L²(u) to L²(v)",
        "upper_ratio" => "sup_sigma / combined, an empirical constant of the upper estimate",
        "c1_ratio" => "√C₁ / sup_sigma, an empirical constant of the necessity of (i)",
        "c2_ratio" => "√C₂ / sup_sigma, an empirical constant of the necessity of (ii)",
        "c3_ratio" => "√C₃ / sup_sigma, an empirical constant of the necessity of (iii)",
        "one_weight" => "u = v",
        "unweighted" => "u = v ≡ 1",
        "martingale" => "w is constant, so T is a martingale transform",
        "a2" => "[u]_{A₂} = sup_I ⟨u⟩_I ⟨u⁻¹⟩_I",
        "packing_u_inv" => "Buckley packing sum of u⁻¹, finite exactly when u⁻¹ ∈ RH₁",
        "packing_u" => "Buckley packing sum of u",
        "k2" => "C₂ / ([u]_{A₂} · packing of u⁻¹); at most 1 when w is constant",
        "k3" => "C₃ / ([u]_{A₂} · packing of u); at most 1 when w is constant",
        "reverse_margin" => "min_I ⟨u⁻¹⟩_I ⟨u w^{2t}⟩_I / ⟨w⟩_I^{2t}; the reverse of condition (i) requires ≥ 1",
        "c2t" => "[w]_{C_{2t}} = sup_I ⟨w^{2t}⟩_I / ⟨w⟩_I^{2t}, the unweighted characterization",
        "norm" => "sign-search lower bound on sup_σ ‖T^t_{w,σ}‖ on unweighted L²",
        "ratio" => "norm² / [w]_{C_{2t}}",
        "alpha" => "exponent α of the power weight x^α",
        "depth" => "tree depth",
        "rh2" => "[w]_{RH₂} = sup_I ⟨w²⟩_I^{1/2} / ⟨w⟩_I",
        "rh1_w2" => "[w²]_{RH₁}, the entropy characteristic of w²",
        "rh2_packing" => "packing sum equivalent to w ∈ RH₂",
        "rh2_ratio" => "rh2_packing / ([w]²_{RH₂} [w²]_{RH₁})",
        "a2_packing" => "packing sum implied by w ∈ A₂",
        "rh1_w_inv" => "[w⁻¹]_{RH₁}",
        "a2_ratio" => "a2_packing / ([w]_{A₂} [w⁻¹]_{RH₁})",
        "forward" => "full-line testing constant ∫|T(1_I u⁻¹)|² v w^{2t} / u⁻¹(I)",
        "dual" => "dual full-line testing constant with 1_I v w^{2t} against u⁻¹",
        "forward_local" => "testing constant with integration restricted to I",
        "dual_local" => "dual testing constant with integration restricted to I",
        "pairing" => "sup over |I| = |J| of |⟨T(1_I u⁻¹), 1_J v w^{2t}⟩|² / (u⁻¹(I) · v w^{2t}(J))",
        "norm_sq" => "‖T_σ T_{w,t}‖² from L²(u) to L²(v w^{2t}), the ceiling for every testing constant",
        "norm_bound" => "whether norm_sq is exact or a lower bound",
        "testing_ratio" => "largest testing constant / norm_sq; at most 1",
        "haar_gap" => "relative gap in ‖T^t_{w,σ} h_I‖²_{L²(v)} = ⟨v w^{2t}⟩_I / ⟨w⟩_I^{2t}",
        "closed_form" => "¼ Σ_I |I| |Δ_I f|² ⟨v w^{2t}⟩_I / ⟨w⟩_I^{2t}, the expectation over random signs",
        "monte_carlo" => "average over sampled sign patterns",
        "monte_carlo_gap" => "relative gap between the sampled average and the closed form",
        "enumeration" => "average over every sign pattern",
        "enumeration_gap" => "relative gap between enumeration and the closed form",
        "transform_ms" => "Haar transform time",
        "report_ms" => "time for all four conditions, C₄ by power iteration",
        "total_ms" => "transform and report together",
        "wall_ms" => "wall time of the row",
        "passed" => "whether every check of the row held",
        _ => return None,
    })
}

fn specializations(row: &StoredRow) -> Vec<&'static str> {
    let flag = |name| row.get(name) == Some("true");
    let mut notes = Vec::new();
    if flag("one_weight") {
        notes.push("u = v: one-weight specialization; for t ≤ 0 or t ≥ 1 conditions (ii) and (iii) reduce to u, u⁻¹ ∈ RH₁ given (i), and (iv) follows from (i)-(iii)");
    }
    if flag("unweighted") {
        notes.push("u = v ≡ 1: the uniform norm is controlled by [w]_{C_{2t}}");
    }
    if flag("martingale") {
        notes.push("w constant: T^t_{w,σ} is the martingale transform T_σ");
    }
    notes
}

pub fn describe_row(row: &StoredRow, source: &str) -> String {
    let mut out = String::new();
    let id = row.get("id").unwrap_or("?");
    let seed = row.get("seed").unwrap_or("?");
    writeln!(out, "row {id} of {source} (seed {seed})").unwrap();
    let shown: Vec<&(String, String)> = row
        .fields
        .iter()
        .filter(|(n, _)| n != "id" && n != "seed" && !n.ends_with("_witness"))
        .collect();
    let width = shown.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0);
    for (name, value) in shown {
        let mut line = format!("  {name:<width$} = {value}");
        if let Some(w) = row.get(&format!("{name}_witness")) {
            let _ = write!(line, " at interval {w}");
        }
        if let Some(m) = meaning(name) {
            let _ = write!(line, "\n  {:<width$}   {m}", "");
        }
        out.push_str(&line);
        out.push('\n');
    }
    let notes = specializations(row);
    if !notes.is_empty() {
        out.push_str("specializations:\n");
        for note in notes {
            writeln!(out, "  {note}").unwrap();
        }
    }
    out
}

pub fn describe(report: &Path, id: usize) -> Result<String> {
    let row = read_row(report, id)?;
    Ok(describe_row(&row, &report.display().to_string()))
}
