//! Weight matrices and max-min integer programs for the lower and upper
//! bounding hierarchies.
//!
//! Both programs have the shape
//!
//! ```text
//! max  x
//! s.t. x <= Σ_c y_c W[c][p]   for every constraint site p ∈ Γ
//!      Σ_c y_c = N,  0 <= y_c <= u_c,  y integer
//! ```
//!
//! with `W[c][p] = f(‖c − p‖) ∓ g_{c,p}(ε)`. The lower program subtracts the
//! control function at the resolution of Γ, the upper program adds it at the
//! resolution of Λ.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainTag, Point, SampleNet};
use crate::potential::{control_g, PotentialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// Constructive lower bound: weights shifted down.
    Lower,
    /// Upper bound: weights shifted up.
    Upper,
    /// Hand-built matrix with no geometric provenance.
    Custom,
}

impl Sense {
    pub fn sign(self) -> f64 {
        match self {
            Sense::Lower => -1.0,
            Sense::Upper => 1.0,
            Sense::Custom => 0.0,
        }
    }
}

/// Dense `|Λ| × |Γ|` matrix stored row-major by candidate site.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<WeightMatrix> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::Empty("weight matrix has no entries"));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidArgument("ragged weight matrix".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite weight".into()));
        }
        Ok(WeightMatrix {
            rows: n,
            cols: m,
            data: rows.concat(),
        })
    }

    /// Number of candidate sites `|Λ|`.
    pub fn n_lambda(&self) -> usize {
        self.rows
    }

    /// Number of constraint sites `|Γ|`.
    pub fn n_gamma(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, c: usize, p: usize) -> f64 {
        self.data[c * self.cols + p]
    }

    /// All weights of candidate `c` against every constraint site.
    #[inline]
    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.cols..(c + 1) * self.cols]
    }

    /// Copy stored row-major by constraint site.
    pub fn transposed(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.data.len()];
        for c in 0..self.rows {
            for p in 0..self.cols {
                t[p * self.rows + c] = self.data[c * self.cols + p];
            }
        }
        t
    }
}

/// `W[c][p] = f(‖c − p‖) + sign·g(‖c − p‖, eps)` over `c ∈ Λ`, `p ∈ Γ`.
pub fn weight_matrix(
    spec: &PotentialSpec,
    lambda: &[Point],
    gamma: &[Point],
    eps: f64,
    sign: f64,
) -> Result<WeightMatrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if lambda.is_empty() || gamma.is_empty() {
        return Err(Error::Empty("nets must be nonempty"));
    }
    let mut data = Vec::with_capacity(lambda.len() * gamma.len());
    for &c in lambda {
        for &p in gamma {
            let d = c.dist(p);
            data.push(spec.f(d) + sign * control_g(spec, d, eps));
        }
    }
    Ok(WeightMatrix {
        rows: lambda.len(),
        cols: gamma.len(),
        data,
    })
}

/// A max-min integer program over a weight matrix.
#[derive(Debug, Clone)]
pub struct MipInstance {
    pub weights: WeightMatrix,
    /// Per-candidate capacity `u_c`.
    pub upper_bounds: Vec<u32>,
    /// Configuration size `N`.
    pub n: u32,
    pub sense: Sense,
    pub binary: bool,
    pub lambda_points: Vec<Point>,
    pub gamma_points: Vec<Point>,
    /// ε plugged into the control function (0 for custom instances).
    pub epsilon_used: f64,
    pub potential: Option<PotentialSpec>,
}

/// Debug-dump metadata written alongside the weight CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub sense: Sense,
    #[serde(rename = "N")]
    pub n: u32,
    pub binary: bool,
    pub epsilon_used: f64,
    pub n_lambda: usize,
    pub n_gamma: usize,
}

impl MipInstance {
    /// Instance from an explicit matrix, without geometry attached.
    pub fn from_matrix(weights: WeightMatrix, upper_bounds: Vec<u32>, n: u32) -> Result<MipInstance> {
        if upper_bounds.len() != weights.n_lambda() {
            return Err(Error::InvalidArgument(format!(
                "{} capacities for {} candidates",
                upper_bounds.len(),
                weights.n_lambda()
            )));
        }
        let inst = MipInstance {
            binary: upper_bounds.iter().all(|&u| u <= 1),
            weights,
            upper_bounds,
            n,
            sense: Sense::Custom,
            lambda_points: vec![],
            gamma_points: vec![],
            epsilon_used: 0.0,
            potential: None,
        };
        inst.check_feasible()?;
        Ok(inst)
    }

    pub fn n_lambda(&self) -> usize {
        self.weights.n_lambda()
    }

    pub fn n_gamma(&self) -> usize {
        self.weights.n_gamma()
    }

    pub fn check_feasible(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        let total: u64 = self.upper_bounds.iter().map(|&u| u as u64).sum();
        if total < self.n as u64 {
            return Err(Error::Infeasible(format!(
                "capacities sum to {total} < N = {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `min_p Σ_c y_c W[c][p]` for an allocation `y`.
    pub fn objective(&self, y: &[u32]) -> f64 {
        let mut sums = vec![0.0; self.n_gamma()];
        for (c, &k) in y.iter().enumerate() {
            if k > 0 {
                for (s, w) in sums.iter_mut().zip(self.weights.row(c)) {
                    *s += k as f64 * w;
                }
            }
        }
        sums.into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            sense: self.sense,
            n: self.n,
            binary: self.binary,
            epsilon_used: self.epsilon_used,
            n_lambda: self.n_lambda(),
            n_gamma: self.n_gamma(),
        }
    }

    /// Writes `W` as CSV, one row per candidate site, no header.
    pub fn dump_weights_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for c in 0..self.n_lambda() {
            wtr.write_record(self.weights.row(c).iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_tags(lambda: &SampleNet, gamma: &SampleNet) -> Result<()> {
    if lambda.tag() != DomainTag::OnConvA {
        return Err(Error::NetPrecondition(format!(
            "candidate net must be tagged on-conv-A, got {}",
            lambda.tag()
        )));
    }
    if gamma.tag() != DomainTag::OnA {
        return Err(Error::NetPrecondition(format!(
            "constraint net must be tagged on-A, got {}",
            gamma.tag()
        )));
    }
    if !gamma.is_validated() {
        return Err(Error::NetPrecondition("constraint net is not validated".into()));
    }
    Ok(())
}

fn build(
    spec: &PotentialSpec,
    lambda: &SampleNet,
    gamma: &SampleNet,
    n: u32,
    binary: bool,
    sense: Sense,
    eps: f64,
) -> Result<MipInstance> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let weights = weight_matrix(spec, lambda.points(), gamma.points(), eps, sense.sign())?;
    let cap = if binary { 1 } else { n };
    let inst = MipInstance {
        upper_bounds: vec![cap; lambda.len()],
        weights,
        n,
        sense,
        binary,
        lambda_points: lambda.points().to_vec(),
        gamma_points: gamma.points().to_vec(),
        epsilon_used: eps,
        potential: Some(*spec),
    };
    inst.check_feasible()?;
    Ok(inst)
}

/// Lower-bound program: weights `f − g(ε_Γ)`, capacities 1 (binary) or N.
pub fn build_lower_instance(
    spec: &PotentialSpec,
    lambda: &SampleNet,
    gamma: &SampleNet,
    n: u32,
    binary: bool,
) -> Result<MipInstance> {
    check_tags(lambda, gamma)?;
    build(spec, lambda, gamma, n, binary, Sense::Lower, gamma.epsilon())
}

/// Upper-bound program: weights `f + g(ε_Λ)`. The binary variant needs Λ to
/// be an (ε_Λ, N)-net so that N distinct nearby candidates always exist.
pub fn build_upper_instance(
    spec: &PotentialSpec,
    lambda: &SampleNet,
    gamma: &SampleNet,
    n: u32,
    binary: bool,
) -> Result<MipInstance> {
    check_tags(lambda, gamma)?;
    if !lambda.is_validated() {
        return Err(Error::NetPrecondition("candidate net is not validated".into()));
    }
    if binary && (lambda.multiplicity() as u64) < n as u64 {
        return Err(Error::NetPrecondition(format!(
            "binary upper bound needs an (eps, {n})-net, candidate net has multiplicity {}",
            lambda.multiplicity()
        )));
    }
    build(spec, lambda, gamma, n, binary, Sense::Upper, lambda.epsilon())
}
