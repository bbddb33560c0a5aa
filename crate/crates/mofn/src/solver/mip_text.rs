//! LP-format export of the full big-M integer program.
//!
//! The combinatorial engine never materializes this program; the export
//! exists so the model can be fed to an external MIP solver and
//! cross-checked. Variables: w_j (rule on), z_i (misclassified), C_i_j
//! (concept bit), t_j (threshold), M. The products w_j*C_i_j appear as
//! quadratic blocks, which LP format accepts in constraints, keeping the
//! variable census exactly as stated instead of introducing linearization
//! variables.

use crate::error::{Error, Result};
use crate::model::Labels;
use crate::solver::candidates::CandidateSet;
use crate::solver::SolverConfig;
use crate::FeatureMatrix;

/// Appends `term` to `line`, flushing onto a continuation line when long.
fn push_term(out: &mut String, line: &mut String, term: &str) {
    if line.len() + term.len() + 1 > 200 {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push(' ');
    }
    if !line.is_empty() && !line.ends_with(' ') {
        line.push(' ');
    }
    line.push_str(term);
}

fn flush_line(out: &mut String, line: &mut String) {
    if !line.trim().is_empty() {
        out.push_str(line);
        out.push('\n');
    }
    line.clear();
}

/// Writes the training program in LP model text.
///
/// Strict inequalities in the source constraints are repaired: the
/// threshold-linking upper row subtracts a margin `delta = 1e-6 * range`,
/// and the misclassification row for negatives uses the `+ 1` form, valid
/// because rule counts and M are integral.
pub fn export_mip_form(
    x: &FeatureMatrix,
    y: &Labels,
    candidates: Option<&CandidateSet>,
    config: &SolverConfig,
) -> Result<String> {
    if y.len() != x.n_rows() {
        return Err(Error::structural(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    if let Some(c) = candidates {
        c.check_against(x)?;
    }
    config.validate(x)?;
    let n = x.n_rows();
    let d = x.n_features();
    let w = &config.weights;
    let big_a = config.resolved_big_a(x);
    let big_b = config.resolved_big_b(x);
    let (col_min, col_max): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|j| {
            let col = x.column(j);
            (
                col.iter().cloned().fold(f64::INFINITY, f64::min),
                col.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            )
        })
        .unzip();
    let delta: Vec<f64> = (0..d).map(|j| 1e-6 * (col_max[j] - col_min[j])).collect();

    let mut out = String::new();
    out.push_str("\\ M-of-N checklist training program\n");
    out.push_str(&format!(
        "\\ rows n={n}  features d={d}  lambda={}  eps_n={}  eps_m={}\n",
        w.lambda, w.eps_n, w.eps_m
    ));
    out.push_str(&format!("\\ B={big_b} (misclassification big-M)\n"));
    for j in 0..d {
        out.push_str(&format!(
            "\\ feature {}: {}  range=[{}, {}]  A={}  delta={}\n",
            j + 1,
            x.feature_names()[j],
            col_min[j],
            col_max[j],
            big_a[j],
            delta[j]
        ));
        if let Some(c) = candidates {
            out.push_str(&format!(
                "\\ feature {}: {} candidate thresholds\n",
                j + 1,
                c.feature(j).len()
            ));
        }
    }

    // objective: sum of z over positives, lambda*z over negatives,
    // eps_n per active rule, eps_m on M
    out.push_str("Minimize\n");
    let mut line = String::from(" obj:");
    let mut first = true;
    let add = |out: &mut String, line: &mut String, coeff: f64, var: &str, first: &mut bool| {
        if coeff == 0.0 {
            return;
        }
        let term = if *first {
            *first = false;
            if coeff == 1.0 { var.to_string() } else { format!("{coeff} {var}") }
        } else if coeff == 1.0 {
            format!("+ {var}")
        } else {
            format!("+ {coeff} {var}")
        };
        push_term(out, line, &term);
    };
    for i in 0..n {
        let coeff = if y.value(i) { 1.0 } else { w.lambda };
        add(&mut out, &mut line, coeff, &format!("z_{}", i + 1), &mut first);
    }
    for j in 0..d {
        add(&mut out, &mut line, w.eps_n, &format!("w_{}", j + 1), &mut first);
    }
    add(&mut out, &mut line, w.eps_m, "M", &mut first);
    if first {
        // degenerate all-zero objective still needs a row
        push_term(&mut out, &mut line, "0 M");
    }
    flush_line(&mut out, &mut line);

    out.push_str("Subject To\n");
    // threshold linking: C_i_j = 1 exactly when X_i_j > t_j
    for i in 0..n {
        for j in 0..d {
            let xij = x.value(i, j);
            out.push_str(&format!(
                " link_lo_{r}_{c}: {a} C_{r}_{c} + t_{c} >= {xij}\n",
                r = i + 1,
                c = j + 1,
                a = big_a[j],
            ));
            out.push_str(&format!(
                " link_hi_{r}_{c}: {a} C_{r}_{c} + t_{c} <= {rhs}\n",
                r = i + 1,
                c = j + 1,
                a = big_a[j],
                rhs = big_a[j] + xij - delta[j],
            ));
        }
    }
    // misclassification indicators: for a positive, z_i = 0 forces at
    // least M satisfied rules; for a negative, z_i = 0 forces at most M - 1
    for i in 0..n {
        let mut line = if y.value(i) {
            format!(" err_pos_{}: [", i + 1)
        } else {
            format!(" err_neg_{}: [", i + 1)
        };
        for j in 0..d {
            let term = if y.value(i) {
                if j == 0 {
                    format!("w_{c} * C_{r}_{c}", r = i + 1, c = j + 1)
                } else {
                    format!("+ w_{c} * C_{r}_{c}", r = i + 1, c = j + 1)
                }
            } else {
                format!("- w_{c} * C_{r}_{c}", r = i + 1, c = j + 1)
            };
            push_term(&mut out, &mut line, &term);
        }
        let tail = if y.value(i) {
            format!("] + {big_b} z_{} - M >= 0", i + 1)
        } else {
            format!("] + {big_b} z_{} + M >= 1", i + 1)
        };
        push_term(&mut out, &mut line, &tail);
        flush_line(&mut out, &mut line);
    }
    // M never exceeds the number of active rules
    let mut line = String::from(" size_m_le_n: M");
    for j in 0..d {
        push_term(&mut out, &mut line, &format!("- w_{}", j + 1));
    }
    push_term(&mut out, &mut line, "<= 0");
    flush_line(&mut out, &mut line);
    if config.max_rules < d {
        let mut line = String::from(" size_n_cap:");
        for j in 0..d {
            let term = if j == 0 { format!("w_{}", j + 1) } else { format!("+ w_{}", j + 1) };
            push_term(&mut out, &mut line, &term);
        }
        push_term(&mut out, &mut line, &format!("<= {}", config.max_rules));
        flush_line(&mut out, &mut line);
    }

    out.push_str("Bounds\n");
    for j in 0..d {
        out.push_str(&format!(
            " {} <= t_{} <= {}\n",
            col_min[j] - 1.0,
            j + 1,
            col_max[j] + 1.0
        ));
    }
    let (m_lo, m_hi) = config.m_range;
    let m_hi = m_hi.min(config.max_rules).min(d);
    out.push_str(&format!(" {m_lo} <= M <= {m_hi}\n"));

    out.push_str("Binaries\n");
    let mut line = String::from(" ");
    for j in 0..d {
        push_term(&mut out, &mut line, &format!("w_{}", j + 1));
    }
    for i in 0..n {
        push_term(&mut out, &mut line, &format!("z_{}", i + 1));
    }
    for i in 0..n {
        for j in 0..d {
            push_term(&mut out, &mut line, &format!("C_{}_{}", i + 1, j + 1));
        }
    }
    flush_line(&mut out, &mut line);
    out.push_str("Generals\n M\nEnd\n");
    Ok(out)
}
