//! Deterministic hidden-variable models over a finite set of hidden states.
//!
//! A model assigns each hidden state `λ` a weight `ρ(λ)` and a pair of
//! response tables. Alice's table is indexed `[λ][x][y]` and Bob's
//! `[λ][y][x]`, so a local model is one whose tables are constant along the
//! last (remote-setting) axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::behavior::{check_format, outcome_index, Behavior};
use crate::error::{Error, Result};

pub const MAX_HIDDEN_STATES: usize = 1 << 16;
pub const WEIGHT_TOL: f64 = 1e-12;
pub const HVMODEL_FORMAT: &str = "corrlab-hvmodel/1";

/// `[own setting][remote setting] → ±1`
pub type ResponseTable = [[i8; 2]; 2];

/// Declared dependence of each party's response on the remote setting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub a_depends_on_y: bool,
    pub b_depends_on_x: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelClass {
    /// Responses depend only on the local setting.
    NonContextualLocal,
    NonLocal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HvModel {
    weights: Vec<f64>,
    respond_a: Vec<ResponseTable>,
    respond_b: Vec<ResponseTable>,
    signature: Signature,
}

fn remote_dependent(tables: &[ResponseTable]) -> bool {
    tables.iter().any(|t| t.iter().any(|row| row[0] != row[1]))
}

impl HvModel {
    pub fn new(
        weights: Vec<f64>,
        respond_a: Vec<ResponseTable>,
        respond_b: Vec<ResponseTable>,
        signature: Signature,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || k > MAX_HIDDEN_STATES {
            return Err(Error::InvalidModel(format!(
                "{k} hidden states (supported: 1..={MAX_HIDDEN_STATES})"
            )));
        }
        if respond_a.len() != k || respond_b.len() != k {
            return Err(Error::InvalidModel(format!(
                "response tables have {} and {} rows for {k} weights",
                respond_a.len(),
                respond_b.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(Error::InvalidModel(format!(
                "weight[{i}] = {w} outside [0, 1]"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for (name, tables) in [("respond_a", &respond_a), ("respond_b", &respond_b)] {
            if let Some(v) = tables.iter().flatten().flatten().find(|v| v.abs() != 1) {
                return Err(Error::InvalidModel(format!(
                    "{name} contains {v}; responses must be ±1"
                )));
            }
        }
        if !signature.a_depends_on_y && remote_dependent(&respond_a) {
            return Err(Error::InvalidModel(
                "Alice's responses are declared independent of y but vary with it".into(),
            ));
        }
        if !signature.b_depends_on_x && remote_dependent(&respond_b) {
            return Err(Error::InvalidModel(
                "Bob's responses are declared independent of x but vary with it".into(),
            ));
        }
        Ok(Self {
            weights,
            respond_a,
            respond_b,
            signature,
        })
    }

    /// Builds a model whose signature is read off the tables.
    pub fn with_inferred_signature(
        weights: Vec<f64>,
        respond_a: Vec<ResponseTable>,
        respond_b: Vec<ResponseTable>,
    ) -> Result<Self> {
        let signature = Signature {
            a_depends_on_y: remote_dependent(&respond_a),
            b_depends_on_x: remote_dependent(&respond_b),
        };
        Self::new(weights, respond_a, respond_b, signature)
    }

    /// Local model from per-λ outcome pairs: `alice[λ][x]`, `bob[λ][y]`.
    pub fn local(weights: Vec<f64>, alice: &[[i8; 2]], bob: &[[i8; 2]]) -> Result<Self> {
        let spread = |r: &[i8; 2]| [[r[0], r[0]], [r[1], r[1]]];
        Self::new(
            weights,
            alice.iter().map(spread).collect(),
            bob.iter().map(spread).collect(),
            Signature::default(),
        )
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// Alice's outcome for hidden state `lambda` at settings `(x, y)`.
    pub fn response_a(&self, lambda: usize, x: usize, y: usize) -> i8 {
        self.respond_a[lambda][x][y]
    }

    /// Bob's outcome for hidden state `lambda` at settings `(x, y)`.
    pub fn response_b(&self, lambda: usize, x: usize, y: usize) -> i8 {
        self.respond_b[lambda][y][x]
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "format": HVMODEL_FORMAT,
            "weights": self.weights,
            "respond_a": self.respond_a,
            "respond_b": self.respond_b,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("model serializes")
    }

    /// Parses a `corrlab-hvmodel/1` document; the signature is inferred
    /// from the tables.
    pub fn from_json_value(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::format("$", "expected a JSON object"))?;
        check_format(obj, HVMODEL_FORMAT)?;
        let weights = obj
            .get("weights")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::format("weights", "missing or not an array"))?
            .iter()
            .enumerate()
            .map(|(i, w)| {
                w.as_f64()
                    .ok_or_else(|| Error::format(format!("weights[{i}]"), "not a number"))
            })
            .collect::<Result<Vec<f64>>>()?;
        let table = |key: &str| -> Result<Vec<ResponseTable>> {
            let rows = obj
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::format(key, "missing or not an array"))?;
            if rows.len() != weights.len() {
                return Err(Error::format(
                    key,
                    format!("expected {} entries, found {}", weights.len(), rows.len()),
                ));
            }
            rows.iter()
                .enumerate()
                .map(|(l, row)| {
                    let mut t = [[0i8; 2]; 2];
                    for (i, ti) in t.iter_mut().enumerate() {
                        for (j, v) in ti.iter_mut().enumerate() {
                            let path = format!("{key}[{l}][{i}][{j}]");
                            let raw = row
                                .get(i)
                                .and_then(|r| r.get(j))
                                .and_then(Value::as_i64)
                                .ok_or_else(|| Error::format(&path, "missing or not an integer"))?;
                            if raw != 1 && raw != -1 {
                                return Err(Error::format(
                                    &path,
                                    format!("expected ±1, found {raw}"),
                                ));
                            }
                            *v = raw as i8;
                        }
                    }
                    Ok(t)
                })
                .collect()
        };
        let respond_a = table("respond_a")?;
        let respond_b = table("respond_b")?;
        Self::with_inferred_signature(weights, respond_a, respond_b)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(s)?;
        Self::from_json_value(&doc)
    }
}

/// `p(a,b|x,y) = Σ_λ ρ(λ)·[A(x,y,λ) = a]·[B(x,y,λ) = b]`.
pub fn evaluate(m: &HvModel) -> Behavior {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for (l, &w) in m.weights.iter().enumerate() {
        for (x, px) in p.iter_mut().enumerate() {
            for (y, pxy) in px.iter_mut().enumerate() {
                let a = outcome_index(m.response_a(l, x, y));
                let b = outcome_index(m.response_b(l, x, y));
                pxy[a][b] += w;
            }
        }
    }
    // Weights are validated to sum to one, so every context is normalized.
    Behavior::new_unchecked(p)
}

/// Classifies a model by exhaustive inspection of its response tables.
/// A table that disagrees with the declared signature is an error.
pub fn model_class(m: &HvModel) -> Result<ModelClass> {
    let a_dep = remote_dependent(&m.respond_a);
    let b_dep = remote_dependent(&m.respond_b);
    if a_dep != m.signature.a_depends_on_y || b_dep != m.signature.b_depends_on_x {
        return Err(Error::InvalidModel(format!(
            "declared signature {:?} does not match response tables \
             (a depends on y: {a_dep}, b depends on x: {b_dep})",
            m.signature
        )));
    }
    Ok(if a_dep || b_dep {
        ModelClass::NonLocal
    } else {
        ModelClass::NonContextualLocal
    })
}

/// Outcomes `[a0, a1, b0, b1]` of deterministic strategy `i`; bit `k` of `i`
/// (a0 least significant) set means outcome −1.
pub fn vertex_outcomes(i: usize) -> [i8; 4] {
    std::array::from_fn(|k| if (i >> k) & 1 == 0 { 1 } else { -1 })
}

/// The point distribution of deterministic local strategy `i ∈ 0..16`.
pub fn deterministic_vertex(i: usize) -> Result<Behavior> {
    if i >= 16 {
        return Err(Error::OutOfRange {
            name: "vertex index",
            value: i as f64,
            range: "0..=15",
        });
    }
    let [a0, a1, b0, b1] = vertex_outcomes(i);
    let (a, b) = ([a0, a1], [b0, b1]);
    Behavior::from_fn(|x, y, oa, ob| if oa == a[x] && ob == b[y] { 1.0 } else { 0.0 })
}

/// Two equally likely hidden states; Alice answers `(−1)^λ` and Bob
/// answers `(−1)^(λ ⊕ xy)`, so Bob's table depends on Alice's setting.
pub fn pr_box_model() -> HvModel {
    let sgn = |bit: usize| if bit == 0 { 1i8 } else { -1 };
    let respond_a = (0..2).map(|l| [[sgn(l); 2]; 2]).collect();
    let respond_b = (0..2)
        .map(|l| std::array::from_fn(|y| std::array::from_fn(|x| sgn(l ^ (x * y)))))
        .collect();
    HvModel::new(
        vec![0.5, 0.5],
        respond_a,
        respond_b,
        Signature {
            a_depends_on_y: false,
            b_depends_on_x: true,
        },
    )
    .expect("PR-box model is well formed")
}

/// `p(a,b|x,y) = 1/2` when `ab = (−1)^(xy)`, else 0.
pub fn pr_box() -> Behavior {
    Behavior::from_fn(|x, y, a, b| {
        let parity = if x * y == 1 { -1 } else { 1 };
        if a * b == parity {
            0.5
        } else {
            0.0
        }
    })
    .expect("PR box is a valid behavior")
}

/// The PR box composed with a relabeling; `k ∈ 0..8` enumerates the eight
/// extremal non-local no-signalling boxes (`a ⊕ b = xy ⊕ αx ⊕ βy ⊕ γ`).
pub fn pr_box_variant(k: usize) -> Behavior {
    let (alpha, beta, gamma) = (k & 1, (k >> 1) & 1, (k >> 2) & 1);
    Behavior::from_fn(|x, y, a, b| {
        let parity = (x * y) ^ (alpha * x) ^ (beta * y) ^ gamma;
        let want = if parity == 1 { -1 } else { 1 };
        if a * b == want {
            0.5
        } else {
            0.0
        }
    })
    .expect("PR box variant is a valid behavior")
}

/// `k` hidden states with random normalized weights and random local
/// responses, deterministic in `seed`.
pub fn random_local_model(k: usize, seed: u64) -> Result<HvModel> {
    if !(1..=MAX_HIDDEN_STATES).contains(&k) {
        return Err(Error::OutOfRange {
            name: "hidden-state count",
            value: k as f64,
            range: "1..=65536",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let mut pick =
        || -> [i8; 2] { std::array::from_fn(|_| if rng.random::<bool>() { 1 } else { -1 }) };
    let (alice, bob): (Vec<_>, Vec<_>) = (0..k).map(|_| (pick(), pick())).unzip();
    HvModel::local(weights, &alice, &bob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{chsh_all, correlators, ns_residual};
    use approx::assert_abs_diff_eq;

    fn s_max(b: &Behavior) -> f64 {
        chsh_all(&correlators(b).unwrap()).s_max
    }

    #[test]
    fn constant_model() {
        let m = HvModel::local(vec![1.0], &[[1, 1]], &[[1, 1]]).unwrap();
        let b = evaluate(&m);
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(b.prob(x, y, 1, 1), 1.0);
            }
        }
        assert_eq!(model_class(&m).unwrap(), ModelClass::NonContextualLocal);
    }

    #[test]
    fn two_point_mixture() {
        let m = HvModel::local(vec![0.5, 0.5], &[[1, 1], [-1, -1]], &[[1, 1], [-1, -1]]).unwrap();
        let c = correlators(&evaluate(&m)).unwrap();
        assert_eq!(c.e, [[1.0; 2]; 2]);
        assert_eq!(c.ma, [[0.0; 2]; 2]);
    }

    #[test]
    fn pr_model_matches_closed_form_exactly() {
        let m = pr_box_model();
        assert_eq!(evaluate(&m), pr_box());
        assert_eq!(model_class(&m).unwrap(), ModelClass::NonLocal);
        let c = correlators(&pr_box()).unwrap();
        assert_eq!(c.e, [[1.0, 1.0], [1.0, -1.0]]);
        assert_eq!(c.ma, [[0.0; 2]; 2]);
        assert_eq!(ns_residual(&pr_box()).max_residual, 0.0);
        assert_eq!(s_max(&pr_box()), 4.0);
        assert_eq!(pr_box_variant(0), pr_box());
        for k in 0..8 {
            assert_eq!(s_max(&pr_box_variant(k)), 4.0);
            assert_eq!(ns_residual(&pr_box_variant(k)).max_residual, 0.0);
        }
    }

    #[test]
    fn vertices() {
        let v0 = deterministic_vertex(0).unwrap();
        assert_eq!(s_max(&v0), 2.0);
        let v15 = deterministic_vertex(15).unwrap();
        assert_eq!(correlators(&v15).unwrap().e, [[1.0; 2]; 2]);
        assert_eq!(s_max(&v15), 2.0);
        for i in 0..16 {
            assert!(s_max(&deterministic_vertex(i).unwrap()) <= 2.0 + 1e-12);
        }
        // a0 is the least significant bit
        assert_eq!(vertex_outcomes(1), [-1, 1, 1, 1]);
        assert_eq!(deterministic_vertex(1).unwrap().prob(0, 0, -1, 1), 1.0);
        assert!(deterministic_vertex(16).is_err());
    }

    #[test]
    fn vertex_models_are_local() {
        for i in 0..16 {
            let [a0, a1, b0, b1] = vertex_outcomes(i);
            let m = HvModel::local(vec![1.0], &[[a0, a1]], &[[b0, b1]]).unwrap();
            assert_eq!(model_class(&m).unwrap(), ModelClass::NonContextualLocal);
            assert_eq!(evaluate(&m), deterministic_vertex(i).unwrap());
        }
    }

    #[test]
    fn random_local_models() {
        let m = random_local_model(1, 9).unwrap();
        let b = evaluate(&m);
        assert!((0..16).any(|i| deterministic_vertex(i).unwrap() == b));
        assert_eq!(
            random_local_model(16, 3).unwrap(),
            random_local_model(16, 3).unwrap()
        );
        assert!(random_local_model(0, 1).is_err());
        for seed in 0..200 {
            let m = random_local_model(16, seed).unwrap();
            assert_eq!(model_class(&m).unwrap(), ModelClass::NonContextualLocal);
            let b = evaluate(&m);
            assert!(s_max(&b) <= 2.0 + 1e-12);
            assert!(ns_residual(&b).max_residual < 1e-12);
        }
    }

    #[test]
    fn correlators_match_direct_hidden_variable_sum() {
        for seed in 0..100 {
            let m = random_local_model(1 + (seed as usize % 20), seed).unwrap();
            let c = correlators(&evaluate(&m)).unwrap();
            for x in 0..2 {
                for y in 0..2 {
                    let direct: f64 = (0..m.len())
                        .map(|l| {
                            m.weights()[l]
                                * f64::from(m.response_a(l, x, y))
                                * f64::from(m.response_b(l, x, y))
                        })
                        .sum();
                    assert_abs_diff_eq!(c.e[x][y], direct, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(HvModel::local(vec![0.5, 0.4], &[[1, 1]; 2], &[[1, 1]; 2]).is_err());
        assert!(HvModel::local(vec![1.0], &[[1, 0]], &[[1, 1]]).is_err());
        // declared local, table depends on y
        let err = HvModel::new(
            vec![1.0],
            vec![[[1, -1], [1, 1]]],
            vec![[[1, 1], [1, 1]]],
            Signature::default(),
        );
        assert!(err.is_err());
        // declared non-local, table is local
        let m = HvModel::new(
            vec![1.0],
            vec![[[1, 1], [1, 1]]],
            vec![[[1, 1], [1, 1]]],
            Signature {
                a_depends_on_y: true,
                b_depends_on_x: false,
            },
        )
        .unwrap();
        assert!(model_class(&m).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        for m in [pr_box_model(), random_local_model(5, 2).unwrap()] {
            let back = HvModel::from_json_str(&m.to_json_string()).unwrap();
            assert_eq!(back, m);
        }
        let mut doc = pr_box_model().to_json_value();
        doc["respond_b"][1][0][1] = json!(0);
        match HvModel::from_json_value(&doc) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "respond_b[1][0][1]"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
