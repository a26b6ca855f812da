//! The two-party, two-setting, two-outcome behavior `p(a,b|x,y)` and the
//! quantities derived from it: correlators, marginals, CHSH values,
//! correlation coefficients and no-signalling residuals.
//!
//! Outcomes are indexed `0 ↦ +1`, `1 ↦ −1`; settings are `0` and `1`.
//! Tables are laid out as `p[x][y][a][b]`.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Signed outcome for an outcome index.
pub const OUTCOMES: [i8; 2] = [1, -1];

/// Default slack on individual probabilities.
pub const ENTRY_TOL: f64 = 1e-12;
/// Default slack on per-context normalization.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Default threshold for boolean no-signalling checks.
pub const NS_TOL: f64 = 1e-9;

pub const BEHAVIOR_FORMAT: &str = "corrlab-behavior/1";

pub type Table = [[[[f64; 2]; 2]; 2]; 2];

#[inline]
fn sign(i: usize) -> f64 {
    f64::from(OUTCOMES[i])
}

/// Outcome index for a signed outcome.
#[inline]
pub fn outcome_index(a: i8) -> usize {
    usize::from(a < 0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Behavior {
    p: Table,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehaviorTolerances {
    pub entry: f64,
    pub normalization: f64,
}

impl Default for BehaviorTolerances {
    fn default() -> Self {
        Self {
            entry: ENTRY_TOL,
            normalization: NORMALIZATION_TOL,
        }
    }
}

/// A violated behavior invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Finding {
    NotFinite {
        x: usize,
        y: usize,
        a: i8,
        b: i8,
    },
    Negative {
        x: usize,
        y: usize,
        a: i8,
        b: i8,
        value: f64,
    },
    AboveOne {
        x: usize,
        y: usize,
        a: i8,
        b: i8,
        value: f64,
    },
    Normalization {
        x: usize,
        y: usize,
        sum: f64,
    },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Finding::NotFinite { x, y, a, b } => {
                write!(f, "p({a:+},{b:+}|{x},{y}) is not finite")
            }
            Finding::Negative { x, y, a, b, value } => {
                write!(f, "p({a:+},{b:+}|{x},{y}) = {value:e} is negative")
            }
            Finding::AboveOne { x, y, a, b, value } => {
                write!(f, "p({a:+},{b:+}|{x},{y}) = {value} exceeds 1")
            }
            Finding::Normalization { x, y, sum } => {
                write!(f, "context ({x},{y}) sums to {sum}, off by {:e}", sum - 1.0)
            }
        }
    }
}

/// Lists every violated invariant; empty for a valid table.
pub fn validate_table(p: &Table, tol: &BehaviorTolerances) -> Vec<Finding> {
    let mut out = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            let mut sum = 0.0;
            for ai in 0..2 {
                for bi in 0..2 {
                    let (a, b) = (OUTCOMES[ai], OUTCOMES[bi]);
                    let value = p[x][y][ai][bi];
                    if !value.is_finite() {
                        out.push(Finding::NotFinite { x, y, a, b });
                        continue;
                    }
                    if value < -tol.entry {
                        out.push(Finding::Negative { x, y, a, b, value });
                    }
                    if value > 1.0 + tol.entry {
                        out.push(Finding::AboveOne { x, y, a, b, value });
                    }
                    sum += value;
                }
            }
            if !sum.is_finite() || (sum - 1.0).abs() > tol.normalization {
                out.push(Finding::Normalization { x, y, sum });
            }
        }
    }
    out
}

/// Diagnostics for a behavior; see [`validate_table`].
pub fn validate(b: &Behavior, tol: &BehaviorTolerances) -> Vec<Finding> {
    validate_table(&b.p, tol)
}

impl Behavior {
    /// Validated construction with default tolerances.
    pub fn new(p: Table) -> Result<Self> {
        let findings = validate_table(&p, &BehaviorTolerances::default());
        if let Some(first) = findings.first() {
            return Err(Error::InvalidBehavior(first.to_string()));
        }
        Ok(Self { p })
    }

    /// Skips validation. Useful for diagnosing malformed data with
    /// [`validate`]; the other operations assume a valid table.
    pub fn new_unchecked(p: Table) -> Self {
        Self { p }
    }

    pub fn uniform() -> Self {
        Self {
            p: [[[[0.25; 2]; 2]; 2]; 2],
        }
    }

    /// Builds the table from a closure over signed outcomes.
    pub fn from_fn(mut f: impl FnMut(usize, usize, i8, i8) -> f64) -> Result<Self> {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (x, px) in p.iter_mut().enumerate() {
            for (y, pxy) in px.iter_mut().enumerate() {
                for (ai, row) in pxy.iter_mut().enumerate() {
                    for (bi, v) in row.iter_mut().enumerate() {
                        *v = f(x, y, OUTCOMES[ai], OUTCOMES[bi]);
                    }
                }
            }
        }
        Self::new(p)
    }

    pub fn table(&self) -> &Table {
        &self.p
    }

    /// Probability by outcome indices.
    #[inline]
    pub fn p(&self, x: usize, y: usize, ai: usize, bi: usize) -> f64 {
        self.p[x][y][ai][bi]
    }

    /// Probability by signed outcomes.
    pub fn prob(&self, x: usize, y: usize, a: i8, b: i8) -> f64 {
        self.p[x][y][outcome_index(a)][outcome_index(b)]
    }

    /// Applies a relabeling of settings and outcomes.
    pub fn relabel(&self, r: Relabeling) -> Self {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for ai in 0..2 {
                    for bi in 0..2 {
                        let (sx, sy) = (x ^ r.swap_x as usize, y ^ r.swap_y as usize);
                        let (sa, sb) = (ai ^ r.flip_a as usize, bi ^ r.flip_b as usize);
                        p[sx][sy][sa][sb] = self.p[x][y][ai][bi];
                    }
                }
            }
        }
        Self { p }
    }

    /// Serializes to the `corrlab-behavior/1` JSON document.
    pub fn to_json_value(&self) -> Value {
        let contexts: Vec<Value> = (0..2)
            .flat_map(|x| (0..2).map(move |y| (x, y)))
            .map(|(x, y)| {
                let q = &self.p[x][y];
                json!({
                    "x": x, "y": y,
                    "p_pp": q[0][0], "p_pm": q[0][1],
                    "p_mp": q[1][0], "p_mm": q[1][1],
                })
            })
            .collect();
        json!({ "format": BEHAVIOR_FORMAT, "contexts": contexts })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("behavior serializes")
    }

    /// Parses a `corrlab-behavior/1` document. Errors name the first
    /// offending field.
    pub fn from_json_value(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::format("$", "expected a JSON object"))?;
        check_format(obj, BEHAVIOR_FORMAT)?;
        let contexts = obj
            .get("contexts")
            .ok_or_else(|| Error::format("contexts", "missing"))?
            .as_array()
            .ok_or_else(|| Error::format("contexts", "expected an array"))?;
        if contexts.len() != 4 {
            return Err(Error::format(
                "contexts",
                format!("expected 4 entries, found {}", contexts.len()),
            ));
        }
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (k, ctx) in contexts.iter().enumerate() {
            let path = format!("contexts[{k}]");
            let ctx = ctx
                .as_object()
                .ok_or_else(|| Error::format(&path, "expected an object"))?;
            let (x, y) = (k / 2, k % 2);
            for (key, want) in [("x", x), ("y", y)] {
                let got = ctx.get(key).and_then(Value::as_u64).ok_or_else(|| {
                    Error::format(format!("{path}.{key}"), "missing or not an integer")
                })?;
                if got != want as u64 {
                    return Err(Error::format(
                        format!("{path}.{key}"),
                        format!("expected {want} (contexts must be in (x,y) lexicographic order), found {got}"),
                    ));
                }
            }
            for (key, ai, bi) in [
                ("p_pp", 0, 0),
                ("p_pm", 0, 1),
                ("p_mp", 1, 0),
                ("p_mm", 1, 1),
            ] {
                p[x][y][ai][bi] = ctx.get(key).and_then(Value::as_f64).ok_or_else(|| {
                    Error::format(format!("{path}.{key}"), "missing or not a number")
                })?;
            }
        }
        let findings = validate_table(&p, &BehaviorTolerances::default());
        if let Some(first) = findings.first() {
            let field = match *first {
                Finding::NotFinite { x, y, .. }
                | Finding::Negative { x, y, .. }
                | Finding::AboveOne { x, y, .. }
                | Finding::Normalization { x, y, .. } => format!("contexts[{}]", 2 * x + y),
            };
            return Err(Error::format(field, first.to_string()));
        }
        Ok(Self { p })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(s)?;
        Self::from_json_value(&doc)
    }
}

pub(crate) fn check_format(obj: &Map<String, Value>, expected: &str) -> Result<()> {
    match obj.get("format").and_then(Value::as_str) {
        Some(f) if f == expected => Ok(()),
        Some(f) => Err(Error::format(
            "format",
            format!("expected \"{expected}\", found \"{f}\""),
        )),
        None => Err(Error::format("format", "missing or not a string")),
    }
}

/// A symmetry of the scenario: swap either party's settings and/or flip
/// either party's outcomes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Relabeling {
    pub swap_x: bool,
    pub swap_y: bool,
    pub flip_a: bool,
    pub flip_b: bool,
}

impl Relabeling {
    pub fn all() -> [Relabeling; 16] {
        std::array::from_fn(|i| Relabeling {
            swap_x: i & 1 != 0,
            swap_y: i & 2 != 0,
            flip_a: i & 4 != 0,
            flip_b: i & 8 != 0,
        })
    }
}

/// Correlators and per-context marginals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatorTable {
    /// `E(x,y) = Σ ab·p(a,b|x,y)`
    pub e: [[f64; 2]; 2],
    /// `⟨A⟩` in context `(x,y)`
    pub ma: [[f64; 2]; 2],
    /// `⟨B⟩` in context `(x,y)`
    pub mb: [[f64; 2]; 2],
}

impl CorrelatorTable {
    /// Table with the given correlators and zero marginals.
    pub fn unbiased(e: [[f64; 2]; 2]) -> Self {
        Self {
            e,
            ma: [[0.0; 2]; 2],
            mb: [[0.0; 2]; 2],
        }
    }

    /// Correlators in `[E00, E01, E10, E11]` order.
    pub fn flat(&self) -> [f64; 4] {
        [self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1]]
    }
}

fn moments(b: &Behavior) -> CorrelatorTable {
    let mut c = CorrelatorTable {
        e: [[0.0; 2]; 2],
        ma: [[0.0; 2]; 2],
        mb: [[0.0; 2]; 2],
    };
    for x in 0..2 {
        for y in 0..2 {
            for ai in 0..2 {
                for bi in 0..2 {
                    let p = b.p[x][y][ai][bi];
                    c.e[x][y] += sign(ai) * sign(bi) * p;
                    c.ma[x][y] += sign(ai) * p;
                    c.mb[x][y] += sign(bi) * p;
                }
            }
        }
    }
    c
}

pub fn correlators(b: &Behavior) -> Result<CorrelatorTable> {
    let findings = validate(b, &BehaviorTolerances::default());
    if let Some(first) = findings.first() {
        return Err(Error::InvalidBehavior(first.to_string()));
    }
    Ok(moments(b))
}

/// The eight CHSH expressions and their largest value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Chsh {
    /// `S_k` for the minus sign on correlator `k` (in `E00, E01, E10, E11`
    /// order), followed by `−S_k` in the same order.
    pub values: [f64; 8],
    pub s_max: f64,
}

pub fn chsh_all(c: &CorrelatorTable) -> Chsh {
    let e = c.flat();
    let total: f64 = e.iter().sum();
    let mut values = [0.0; 8];
    for k in 0..4 {
        let s = total - 2.0 * e[k];
        values[k] = s;
        values[k + 4] = -s;
    }
    let s_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Chsh { values, s_max }
}

/// Pearson correlation of the two outcomes in context `(x, y)`.
pub fn correlation_coefficient(b: &Behavior, x: usize, y: usize) -> Result<f64> {
    let c = correlators(b)?;
    let (ma, mb) = (c.ma[x][y], c.mb[x][y]);
    let var_a = 1.0 - ma * ma;
    let var_b = 1.0 - mb * mb;
    if var_a <= ENTRY_TOL {
        return Err(Error::UndefinedCorrelation { x, y, party: 'A' });
    }
    if var_b <= ENTRY_TOL {
        return Err(Error::UndefinedCorrelation { x, y, party: 'B' });
    }
    let r = (c.e[x][y] - ma * mb) / (var_a * var_b).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// One marginal-equality constraint: the party's marginal for `outcome`
/// at `setting` must agree between the two listed contexts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NsConstraint {
    pub party: Party,
    pub setting: usize,
    pub outcome: i8,
    pub contexts: [(usize, usize); 2],
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NsReport {
    pub max_residual: f64,
    pub per_constraint: Vec<NsConstraint>,
}

impl NsReport {
    pub fn is_no_signalling(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

pub fn ns_residual(b: &Behavior) -> NsReport {
    let p = &b.p;
    let mut per_constraint = Vec::with_capacity(8);
    for x in 0..2 {
        for ai in 0..2 {
            let m0 = p[x][0][ai][0] + p[x][0][ai][1];
            let m1 = p[x][1][ai][0] + p[x][1][ai][1];
            per_constraint.push(NsConstraint {
                party: Party::Alice,
                setting: x,
                outcome: OUTCOMES[ai],
                contexts: [(x, 0), (x, 1)],
                residual: (m0 - m1).abs(),
            });
        }
    }
    for y in 0..2 {
        for bi in 0..2 {
            let m0 = p[0][y][0][bi] + p[0][y][1][bi];
            let m1 = p[1][y][0][bi] + p[1][y][1][bi];
            per_constraint.push(NsConstraint {
                party: Party::Bob,
                setting: y,
                outcome: OUTCOMES[bi],
                contexts: [(0, y), (1, y)],
                residual: (m0 - m1).abs(),
            });
        }
    }
    let max_residual = per_constraint
        .iter()
        .map(|c| c.residual)
        .fold(0.0, f64::max);
    NsReport {
        max_residual,
        per_constraint,
    }
}

/// `w·b1 + (1 − w)·b2`.
pub fn mix(b1: &Behavior, b2: &Behavior, w: f64) -> Result<Behavior> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange {
            name: "mixing weight",
            value: w,
            range: "[0, 1]",
        });
    }
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            for ai in 0..2 {
                for bi in 0..2 {
                    p[x][y][ai][bi] = w * b1.p[x][y][ai][bi] + (1.0 - w) * b2.p[x][y][ai][bi];
                }
            }
        }
    }
    Ok(Behavior { p })
}
