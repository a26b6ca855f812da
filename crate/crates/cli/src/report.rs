use std::fmt::Write;

use corrlab_core::behavior::{validate, BehaviorTolerances, CorrelatorTable};
use corrlab_core::{chsh_all, correlation_coefficient, correlators, ns_residual, Result, Verdict};
use serde_json::{json, Value};

use crate::input::Input;

const DIGITS: usize = 12;

/// `x` with `digits` significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros dropped.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim(&format!("{x:.decimals$}")).to_string()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g(x: f64) -> String {
    sig(x, DIGITS)
}

/// `E00+E01+E10-E11` style label for CHSH expression `k`.
fn chsh_label(k: usize) -> String {
    let names = ["E00", "E01", "E10", "E11"];
    let negate = k >= 4;
    let mut out = String::new();
    for (i, name) in names.iter().enumerate() {
        let minus = (i == k % 4) != negate;
        if i > 0 || minus {
            out.push(if minus { '-' } else { '+' });
        }
        out.push_str(name);
    }
    out
}

fn correlation(input: &Input, x: usize, y: usize) -> Option<f64> {
    correlation_coefficient(&input.behavior, x, y).ok()
}

pub fn analyze_text(input: &Input) -> Result<String> {
    let b = &input.behavior;
    let c: CorrelatorTable = correlators(b)?;
    let chsh = chsh_all(&c);
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "format: {}", input.format).unwrap();
    if let Some((model, class)) = &input.model {
        writeln!(w, "model: {} hidden states, {class:?}", model.len()).unwrap();
    }

    writeln!(w, "normalization:").unwrap();
    for x in 0..2 {
        for y in 0..2 {
            let sum: f64 = b.table()[x][y].iter().flatten().sum();
            writeln!(
                w,
                "  context ({x},{y}): sum {}  deviation {}",
                g(sum),
                g((sum - 1.0).abs())
            )
            .unwrap();
        }
    }
    let findings = validate(b, &BehaviorTolerances::default());
    if findings.is_empty() {
        writeln!(w, "  findings: none").unwrap();
    }
    for f in &findings {
        writeln!(w, "  finding: {f}").unwrap();
    }

    writeln!(w, "correlators:").unwrap();
    for x in 0..2 {
        for y in 0..2 {
            writeln!(w, "  E({x},{y}) = {}", g(c.e[x][y])).unwrap();
        }
    }
    writeln!(w, "marginals:").unwrap();
    for x in 0..2 {
        for y in 0..2 {
            writeln!(
                w,
                "  ({x},{y}): <A> = {}  <B> = {}",
                g(c.ma[x][y]),
                g(c.mb[x][y])
            )
            .unwrap();
        }
    }
    writeln!(w, "chsh:").unwrap();
    for (k, v) in chsh.values.iter().enumerate() {
        writeln!(w, "  {:<17} {}", chsh_label(k), g(*v)).unwrap();
    }
    writeln!(w, "s_max: {}", g(chsh.s_max)).unwrap();
    writeln!(w, "ns_residual: {}", g(ns_residual(b).max_residual)).unwrap();
    writeln!(w, "correlation coefficients:").unwrap();
    for x in 0..2 {
        for y in 0..2 {
            let r = correlation(input, x, y).map_or("undefined".into(), g);
            writeln!(w, "  r({x},{y}) = {r}").unwrap();
        }
    }
    out.pop();
    Ok(out)
}

pub fn analyze_json(input: &Input) -> Result<Value> {
    let b = &input.behavior;
    let c = correlators(b)?;
    let chsh = chsh_all(&c);
    let sums: Vec<f64> = (0..4)
        .map(|k| b.table()[k / 2][k % 2].iter().flatten().sum())
        .collect();
    let findings: Vec<String> = validate(b, &BehaviorTolerances::default())
        .iter()
        .map(ToString::to_string)
        .collect();
    let r: Vec<Option<f64>> = (0..4).map(|k| correlation(input, k / 2, k % 2)).collect();
    let mut doc = json!({
        "format": input.format,
        "context_sums": sums,
        "findings": findings,
        "correlators": c.e,
        "marginals_a": c.ma,
        "marginals_b": c.mb,
        "chsh": chsh.values,
        "s_max": chsh.s_max,
        "ns_residual": ns_residual(b).max_residual,
        "correlation": [[r[0], r[1]], [r[2], r[3]]],
    });
    if let Some((model, class)) = &input.model {
        doc["hidden_states"] = json!(model.len());
        doc["model_class"] = json!(format!("{class:?}"));
    }
    Ok(doc)
}

pub fn verdict_text(v: &Verdict) -> String {
    let e = &v.evidence;
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "tier: {}", v.tier).unwrap();
    writeln!(w, "s_max: {}", g(e.s_max)).unwrap();
    writeln!(w, "ns_residual: {}", g(e.ns_residual)).unwrap();
    let values: Vec<String> = e.chsh.iter().map(|&x| g(x)).collect();
    writeln!(w, "chsh: {}", values.join(" ")).unwrap();
    match &e.lp_weights {
        Some(q) => {
            let support: Vec<String> = q
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(i, &x)| format!("{i}:{}", g(x)))
                .collect();
            writeln!(w, "vertex weights: {}", support.join(" ")).unwrap();
        }
        None => writeln!(w, "vertex weights: none").unwrap(),
    }
    if let Some(n) = &e.npa1 {
        writeln!(
            w,
            "moment matrix: u = {}  v = {}  min eigenvalue = {}",
            g(n.u),
            g(n.v),
            g(n.min_eig)
        )
        .unwrap();
    }
    if let Some(t) = e.tlm {
        writeln!(w, "arcsin criterion: {}", g(t)).unwrap();
    }
    out
}
