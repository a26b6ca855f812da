//! Places a behavior in the nested hierarchy
//! Local ⊆ QuantumCompatible ⊆ NoSignalling ⊆ Signalling, together with
//! the evidence that justifies the verdict.
//!
//! * Local: all eight CHSH expressions are at most 2 and the behavior is
//!   no-signalling. In the two-setting, two-outcome scenario this facet
//!   test is exact; it is cross-checked by an explicit decomposition into
//!   the sixteen deterministic vertices.
//! * QuantumCompatible: the first-level moment matrix admits a PSD
//!   completion. This is a relaxation, so the label is deliberately not
//!   "Quantum". For unbiased marginals the arcsin criterion on the
//!   correlators is evaluated too and must agree.
//! * NoSignalling / Signalling: by the marginal residual.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::behavior::{chsh_all, correlators, ns_residual, Behavior, CorrelatorTable};
use crate::error::{Error, Result};
use crate::hv::deterministic_vertex;
use crate::npa::{search, MomentData, Npa1Witness};
use crate::simplex::phase_one;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Tier {
    Local,
    QuantumCompatible,
    NoSignalling,
    Signalling,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Local => "Local",
            Tier::QuantumCompatible => "QuantumCompatible",
            Tier::NoSignalling => "NoSignalling",
            Tier::Signalling => "Signalling",
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(self) -> i32 {
        match self {
            Tier::Local => 0,
            Tier::QuantumCompatible => 10,
            Tier::NoSignalling => 20,
            Tier::Signalling => 30,
        }
    }
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub ns: f64,
    pub facet: f64,
    pub lp: f64,
    pub psd: f64,
    /// Width around `s_max = 2` inside which the facet and LP tests may
    /// disagree without raising a consistency error.
    pub facet_lp_band: f64,
    /// Width around the arcsin boundary value π inside which the arcsin and
    /// moment-matrix tests may disagree.
    pub tlm_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ns: 1e-9,
            facet: 1e-9,
            lp: 1e-9,
            psd: 1e-9,
            facet_lp_band: 1e-7,
            tlm_band: 1e-6,
        }
    }
}

impl Tolerances {
    /// Sets the four decision tolerances to `t`, keeping the consistency
    /// bands.
    pub fn uniform(t: f64) -> Self {
        Self {
            ns: t,
            facet: t,
            lp: t,
            psd: t,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub tolerances: Tolerances,
    /// Run the vertex-decomposition LP alongside the facet test.
    pub lp_evidence: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            lp_evidence: true,
        }
    }
}

/// Evidence accompanying a verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub s_max: f64,
    pub chsh: [f64; 8],
    pub ns_residual: f64,
    pub lp_weights: Option<[f64; 16]>,
    pub npa1: Option<Npa1Witness>,
    pub tlm: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub tier: Tier,
    #[serde(flatten)]
    pub evidence: Evidence,
}

impl Verdict {
    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(self).expect("verdict serializes")
    }
}

/// True iff the behavior is no-signalling and every CHSH expression is at
/// most `2 + tol`.
pub fn check_local_facets(b: &Behavior, tol: f64) -> bool {
    if ns_residual(b).max_residual > tol {
        return false;
    }
    match correlators(b) {
        Ok(c) => chsh_all(&c).values.iter().all(|&s| s <= 2.0 + tol),
        Err(_) => false,
    }
}

/// Convex weights over the sixteen deterministic vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalDecomposition {
    pub weights: [f64; 16],
    /// `max |Σ_i q_i D_i − p|` over all sixteen table entries.
    pub reconstruction_error: f64,
}

fn vertex_tables() -> [Behavior; 16] {
    std::array::from_fn(|i| deterministic_vertex(i).expect("index in range"))
}

/// Phase-1 simplex search for `q ≥ 0`, `Σq = 1`, `Σ q_i D_i = p`.
/// Returns the weights when the total violation is within `tol`.
pub fn check_local_lp(b: &Behavior, tol: f64) -> Option<LocalDecomposition> {
    let vertices = vertex_tables();
    let mut rows = Vec::with_capacity(17);
    let mut rhs = Vec::with_capacity(17);
    for x in 0..2 {
        for y in 0..2 {
            for ai in 0..2 {
                for bi in 0..2 {
                    rows.push(vertices.iter().map(|v| v.p(x, y, ai, bi)).collect());
                    rhs.push(b.p(x, y, ai, bi));
                }
            }
        }
    }
    rows.push(vec![1.0; 16]);
    rhs.push(1.0);

    let sol = phase_one(&rows, &rhs);
    if !sol.is_feasible(tol) {
        return None;
    }
    let weights: [f64; 16] = std::array::from_fn(|i| sol.x[i]);
    let reconstruction_error = rows[..16]
        .iter()
        .zip(&rhs)
        .map(|(row, target)| {
            let got: f64 = row.iter().zip(&weights).map(|(d, q)| d * q).sum();
            (got - target).abs()
        })
        .fold(0.0, f64::max);
    Some(LocalDecomposition {
        weights,
        reconstruction_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TlmResult {
    /// `max_{x*,y*} |Σ arcsin E(x,y) − 2 arcsin E(x*,y*)|`
    pub value: f64,
    pub passes: bool,
}

/// Arcsin criterion for the unbiased correlator slice:
/// `|Σ arcsin E(x,y) − 2 arcsin E(x*,y*)| ≤ π` for every distinguished
/// context. Only applicable when every marginal is below `tol` in modulus.
pub fn check_quantum_tlm(c: &CorrelatorTable, tol: f64) -> Result<TlmResult> {
    let biggest =
        c.ma.iter()
            .chain(c.mb.iter())
            .flatten()
            .map(|m| m.abs())
            .fold(0.0, f64::max);
    if biggest >= tol {
        return Err(Error::BiasedMarginals { marginal: biggest });
    }
    let angles = c.flat().map(|e| e.clamp(-1.0, 1.0).asin());
    let total: f64 = angles.iter().sum();
    let value = angles
        .iter()
        .map(|t| (total - 2.0 * t).abs())
        .fold(0.0, f64::max);
    Ok(TlmResult {
        value,
        passes: value <= PI + tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Npa1Result {
    pub feasible: bool,
    pub witness: Npa1Witness,
}

/// First-level moment-matrix test; signalling behaviors are rejected.
pub fn check_quantum_npa1(b: &Behavior, tol: f64) -> Result<Npa1Result> {
    let residual = ns_residual(b).max_residual;
    if residual > tol {
        return Err(Error::Signalling { residual });
    }
    let c = correlators(b)?;
    let witness = search(&MomentData::from_correlators(&c), tol);
    Ok(Npa1Result {
        feasible: witness.min_eig >= -tol,
        witness,
    })
}

/// The innermost tier admitting the behavior.
pub fn classify(b: &Behavior, config: &ClassifierConfig) -> Result<Verdict> {
    let tol = &config.tolerances;
    let c = correlators(b)?;
    let chsh = chsh_all(&c);
    let ns = ns_residual(b).max_residual;
    let mut evidence = Evidence {
        s_max: chsh.s_max,
        chsh: chsh.values,
        ns_residual: ns,
        lp_weights: None,
        npa1: None,
        tlm: None,
    };
    if ns > tol.ns {
        return Ok(Verdict {
            tier: Tier::Signalling,
            evidence,
        });
    }
    let tlm = check_quantum_tlm(&c, tol.psd).ok();
    evidence.tlm = tlm.map(|t| t.value);

    let facet = chsh.values.iter().all(|&s| s <= 2.0 + tol.facet);
    if config.lp_evidence {
        let lp = check_local_lp(b, tol.lp);
        if facet != lp.is_some() && (chsh.s_max - 2.0).abs() > tol.facet_lp_band {
            return Err(Error::Inconsistent(format!(
                "facet test says {} but vertex LP says {} (s_max = {})",
                if facet { "local" } else { "non-local" },
                if lp.is_some() {
                    "feasible"
                } else {
                    "infeasible"
                },
                chsh.s_max
            )));
        }
        evidence.lp_weights = lp.map(|d| d.weights);
    }
    if facet {
        return Ok(Verdict {
            tier: Tier::Local,
            evidence,
        });
    }

    let witness = search(&MomentData::from_correlators(&c), tol.psd);
    let npa = Npa1Result {
        feasible: witness.min_eig >= -tol.psd,
        witness,
    };
    evidence.npa1 = Some(npa.witness);
    if let Some(t) = tlm {
        if t.passes != npa.feasible && (t.value - PI).abs() > tol.tlm_band {
            return Err(Error::Inconsistent(format!(
                "arcsin criterion ({}) and moment matrix (min eigenvalue {:e}) disagree",
                t.value, npa.witness.min_eig
            )));
        }
    }
    let tier = if npa.feasible {
        Tier::QuantumCompatible
    } else {
        Tier::NoSignalling
    };
    Ok(Verdict { tier, evidence })
}

/// Classifies many behaviors in parallel, preserving order.
pub fn classify_many(behaviors: &[Behavior], config: &ClassifierConfig) -> Vec<Result<Verdict>> {
    behaviors.par_iter().map(|b| classify(b, config)).collect()
}
