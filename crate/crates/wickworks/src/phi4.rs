//! Perturbative Φ⁴_d: partition-function ratios, the linked-cluster logarithm,
//! two-point functions, counterterms at d = 3, thresholds for d ∈ (3, 4) and
//! Monte Carlo at d = 1, 2.
//!
//! Series are in powers of α for Z(α)/Z(0) = E[exp(−α ∫:φ_N⁴:)]; coefficient n
//! is (−1)ⁿ/n! E[(∫:φ_N⁴:)ⁿ] = (−1)ⁿ/n! Σ count·Π_N(Γ).

use std::collections::HashMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::budget::Budget;
use crate::cumulants::{self, Functional};
use crate::error::{Error, Result};
use crate::feynman::{
    bphz_valuate, canonical, degree, degree_symbolic, generate_with, lattice_model, named,
    two_point_value, Antipode, Diagram, DiagramSum, Forest, Valuator,
};
use crate::lattice::{self, kahan};
use crate::mc::run_batched_vec;
use crate::mpoly::{MPoly, Monomial};
use crate::polyalg::hermite;
use crate::rational::{factorial, rbig, ri, rq, to_f64};
use crate::torusfield::{
    green_truncated, hermite_scaled_f64, sample_with_rng, FieldSample, ModeLattice,
    SpectralProfile, Synthesis,
};
use crate::Rational;

pub const DEFAULT_MAX_ORDER: usize = 4;
pub const SERIES_SCHEMA: &str = "wickworks.phi4/1";

/// β = +48 α² Π_N(bubble); see the commutativity check for why the sign is +.
pub const BETA2_FACTOR: i64 = 48;
pub const GAMMA2_FACTOR: i64 = 12;
pub const GAMMA3_FACTOR: i64 = -288;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyVariant {
    /// Vertices are :φ⁴:, so self-contractions are absent.
    Wick,
    /// Vertices are φ⁴; self-contractions give C_N factors. Orders ≤ 2 only.
    Plain,
}

#[derive(Clone, Debug)]
pub struct SeriesOptions {
    pub variant: EnergyVariant,
    pub max_order: usize,
    pub budget: Budget,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            variant: EnergyVariant::Wick,
            max_order: DEFAULT_MAX_ORDER,
            budget: Budget::from_env(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeriesCoefficient {
    pub n: usize,
    /// Already multiplied by (−1)ⁿ/n!.
    pub diagrams: DiagramSum,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct ExpansionSeries {
    pub d: f64,
    pub n_cut: usize,
    pub variant: EnergyVariant,
    pub coefficients: Vec<SeriesCoefficient>,
}

impl ExpansionSeries {
    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn coefficient(&self, n: usize) -> Option<&SeriesCoefficient> {
        self.coefficients.get(n)
    }

    pub fn value(&self, n: usize) -> f64 {
        self.coefficients.get(n).map_or(0.0, |c| c.value)
    }

    /// Σ_{n ≤ order} c_n αⁿ
    pub fn eval(&self, alpha: f64) -> f64 {
        kahan(
            self.coefficients
                .iter()
                .map(|c| c.value * alpha.powi(c.n as i32)),
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "d": self.d,
            "N": self.n_cut,
            "order": self.order(),
            "variant": self.variant,
            "coefficients": self.coefficients.iter().map(|c| json!({
                "n": c.n,
                "diagrams": diagram_sum_json(&c.diagrams),
                "value": c.value,
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn diagram_sum_json(s: &DiagramSum) -> Value {
    Value::Array(
        s.iter()
            .map(|(g, c)| json!({"coefficient": c.to_string(), "diagram": g.to_json(true), "text": g.to_string()}))
            .collect(),
    )
}

fn sign_over_factorial(n: usize) -> Rational {
    let s = if n % 2 == 0 { ri(1) } else { ri(-1) };
    s / rbig(factorial(n))
}

/// Σ c·Π_N(Γ) over a vacuum diagram sum.
pub fn valuate_sum(s: &DiagramSum, val: &Valuator) -> Result<f64> {
    let mut terms = Vec::with_capacity(s.len());
    for (g, c) in s.iter() {
        terms.push(to_f64(c) * val.value(g)?);
    }
    Ok(kahan(terms))
}

fn check_order(order: usize, opts: &SeriesOptions) -> Result<()> {
    if order > opts.max_order {
        return Err(Error::Precondition(format!(
            "order {order} exceeds the configured maximum {}",
            opts.max_order
        )));
    }
    if opts.variant == EnergyVariant::Plain && order > 2 {
        return Err(Error::Precondition(
            "the plain energy is expanded to order 2 only".into(),
        ));
    }
    Ok(())
}

/// E[Xⁿ] as a diagram sum (leg-matching counts).
pub fn moment_diagrams(n: usize, variant: EnergyVariant, budget: Budget) -> Result<DiagramSum> {
    if n == 0 {
        let mut s = DiagramSum::new();
        s.add_canonical(Diagram::empty(), Rational::one());
        return Ok(s);
    }
    generate_with(&vec![4; n], &[], variant == EnergyVariant::Plain, budget)
}

pub fn partition_ratio_series(d: f64, n_cut: usize, order: usize) -> Result<ExpansionSeries> {
    let val = Valuator::new(d, n_cut)?;
    partition_ratio_series_with(&val, order, &SeriesOptions::default())
}

pub fn partition_ratio_series_with(
    val: &Valuator,
    order: usize,
    opts: &SeriesOptions,
) -> Result<ExpansionSeries> {
    check_order(order, opts)?;
    let mut coefficients = Vec::new();
    for n in 0..=order {
        let diagrams =
            moment_diagrams(n, opts.variant, opts.budget)?.scale(&sign_over_factorial(n));
        let value = valuate_sum(&diagrams, val)?;
        coefficients.push(SeriesCoefficient { n, diagrams, value });
    }
    Ok(ExpansionSeries {
        d: val.d,
        n_cut: val.n,
        variant: opts.variant,
        coefficients,
    })
}

/// Connected diagrams as polynomial variables.
#[derive(Default)]
pub struct DiagramInterner {
    pub list: Vec<Diagram>,
    index: HashMap<Diagram, usize>,
}

impl DiagramInterner {
    pub fn id(&mut self, g: &Diagram) -> usize {
        let c = canonical(g);
        if let Some(&i) = self.index.get(&c) {
            return i;
        }
        self.list.push(c.clone());
        self.index.insert(c, self.list.len() - 1);
        self.list.len() - 1
    }

    /// Each diagram becomes the monomial of its connected components.
    pub fn to_mpoly(&mut self, s: &DiagramSum) -> MPoly {
        let mut p = MPoly::zero();
        for (g, c) in s.iter() {
            let mut exps: Vec<u32> = Vec::new();
            for comp in Forest::of(g).0 {
                let i = self.id(&comp);
                if exps.len() <= i {
                    exps.resize(i + 1, 0);
                }
                exps[i] += 1;
            }
            p.add_term(Monomial::new(exps), c.clone());
        }
        p
    }

    pub fn to_diagram_sum(&self, p: &MPoly) -> DiagramSum {
        let mut s = DiagramSum::new();
        for (m, c) in p.terms() {
            let mut g = Diagram::empty();
            for (i, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    g = g.disjoint_union(&self.list[i]);
                }
            }
            s.add(&g, c.clone());
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct LinkedClusterReport {
    pub full: ExpansionSeries,
    /// Connected filter of the full series.
    pub connected: ExpansionSeries,
    /// log⋆ of the moment functional, coefficients (−1)ⁿ/n! κ_n.
    pub via_log: ExpansionSeries,
    pub routes_agree: bool,
    /// exp⋆ of the cumulants reproduces the moments exactly.
    pub exp_roundtrip: bool,
    /// Full minus connected, per order (unscaled moments).
    pub disconnected: Vec<DiagramSum>,
}

pub fn linked_cluster(d: f64, n_cut: usize, order: usize) -> Result<LinkedClusterReport> {
    let val = Valuator::new(d, n_cut)?;
    linked_cluster_with(&val, order, &SeriesOptions::default())
}

pub fn linked_cluster_with(
    val: &Valuator,
    order: usize,
    opts: &SeriesOptions,
) -> Result<LinkedClusterReport> {
    let full = partition_ratio_series_with(val, order, opts)?;
    let mut interner = DiagramInterner::default();
    let mut moments = Vec::new();
    let mut connected_coeffs = Vec::new();
    let mut disconnected = Vec::new();
    for c in &full.coefficients {
        let unscaled = c.diagrams.scale(&sign_over_factorial(c.n).recip());
        let conn = if c.n == 0 {
            DiagramSum::new()
        } else {
            c.diagrams.connected_part()
        };
        let value = valuate_sum(&conn, val)?;
        connected_coeffs.push(SeriesCoefficient {
            n: c.n,
            diagrams: conn.clone(),
            value,
        });
        let conn_unscaled = conn.scale(&sign_over_factorial(c.n).recip());
        let mut rest = unscaled.clone();
        for (g, v) in conn_unscaled.iter() {
            rest.add_canonical(g.clone(), -v.clone());
        }
        if c.n > 0 {
            disconnected.push(rest);
        } else {
            disconnected.push(DiagramSum::new());
        }
        moments.push(interner.to_mpoly(&unscaled));
    }
    let mu = Functional::new(moments);
    let kappa = cumulants::cumulants_from_moments(&mu)?;
    let exp_roundtrip = cumulants::moments_from_cumulants(&kappa)? == mu;
    let mut log_coeffs = Vec::new();
    let mut routes_agree = true;
    for (n, conn) in connected_coeffs.iter().enumerate() {
        let k = kappa.get(n)?;
        let diagrams = interner.to_diagram_sum(k).scale(&sign_over_factorial(n));
        if diagrams != conn.diagrams {
            routes_agree = false;
        }
        let value = valuate_sum(&diagrams, val)?;
        log_coeffs.push(SeriesCoefficient { n, diagrams, value });
    }
    let mk = |coefficients| ExpansionSeries {
        d: val.d,
        n_cut: val.n,
        variant: opts.variant,
        coefficients,
    };
    Ok(LinkedClusterReport {
        full,
        connected: mk(connected_coeffs),
        via_log: mk(log_coeffs),
        routes_agree,
        exp_roundtrip,
        disconnected,
    })
}

/// log Z(α)/Z(0): connected diagrams only. Both routes are computed and must agree.
pub fn log_partition_series(d: f64, n_cut: usize, order: usize) -> Result<ExpansionSeries> {
    let r = linked_cluster(d, n_cut, order)?;
    if !r.routes_agree {
        return Err(Error::Invalid(
            "connected filter and log⋆ routes disagree".into(),
        ));
    }
    Ok(r.connected)
}

/// Diagrams of E[φ(x)φ(y) Xⁿ] whose every component touches x or y.
pub fn two_point_diagrams(n: usize, budget: Budget) -> Result<DiagramSum> {
    let all = generate_with(&vec![4; n], &["x", "y"], false, budget)?;
    let mut out = DiagramSum::new();
    for (g, c) in all.iter() {
        let linked = g
            .components()
            .iter()
            .all(|comp| comp.iter().any(|&v| g.vertices[v].is_external()));
        if linked {
            out.add_canonical(g.clone(), c.clone());
        }
    }
    Ok(out)
}

/// ⟨φ(x)φ(y)⟩_α to order 2, with value Σ_p cos(2πp·(x−y)) Π_N(Γ; p).
pub fn two_point_series(
    d: usize,
    n_cut: usize,
    order: usize,
    x: &[f64],
    y: &[f64],
) -> Result<ExpansionSeries> {
    if order > 2 {
        return Err(Error::Precondition(
            "two-point series is available to order 2".into(),
        ));
    }
    if x.len() != d || y.len() != d {
        return Err(Error::Invalid(format!("points must have {d} coordinates")));
    }
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let budget = Budget::from_env();
    let mut coefficients = Vec::new();
    for n in 0..=order {
        let diagrams = two_point_diagrams(n, budget)?.scale(&sign_over_factorial(n));
        let value = if n == 0 {
            green_truncated(&xy, d, n_cut)?
        } else {
            let mut terms = Vec::new();
            for (g, c) in diagrams.iter() {
                terms.push(to_f64(c) * two_point_value(g, d, n_cut, &xy)?);
            }
            kahan(terms)
        };
        coefficients.push(SeriesCoefficient { n, diagrams, value });
    }
    Ok(ExpansionSeries {
        d: d as f64,
        n_cut,
        variant: EnergyVariant::Wick,
        coefficients,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CountertermSet {
    pub n_cut: usize,
    pub alpha: f64,
    pub pi_bubble: f64,
    pub pi_fgiv: f64,
    pub pi_fgvi: f64,
    /// β = beta2·α²
    pub beta2: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CountertermSet {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain numbers")
    }
}

pub fn counterterms_d3(alpha: f64, n_cut: usize) -> Result<CountertermSet> {
    let val = Valuator::new(3.0, n_cut)?;
    counterterms_with(&val, alpha)
}

pub fn counterterms_with(val: &Valuator, alpha: f64) -> Result<CountertermSet> {
    if val.d != 3.0 {
        return Err(Error::Precondition(
            "counterterms are defined at d = 3".into(),
        ));
    }
    let pi_bubble = val.value(&named::fgiii())?;
    let pi_fgiv = val.value(&named::fgiv())?;
    let pi_fgvi = val.value(&named::fgvi())?;
    let beta2 = BETA2_FACTOR as f64 * pi_bubble;
    let gamma2 = GAMMA2_FACTOR as f64 * pi_fgiv;
    let gamma3 = GAMMA3_FACTOR as f64 * pi_fgvi;
    Ok(CountertermSet {
        n_cut: val.n,
        alpha,
        pi_bubble,
        pi_fgiv,
        pi_fgvi,
        beta2,
        gamma2,
        gamma3,
        beta: beta2 * alpha * alpha,
        gamma: gamma2 * alpha * alpha + gamma3 * alpha.powi(3),
    })
}

/// Least-squares slope and intercept of y against x.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    /// Slope of value against log N.
    pub log_slope: f64,
    /// Slope of log(value(2N) − value(N)) against log N: the exponent of the divergent part.
    pub increment_exponent: Option<f64>,
}

pub fn growth_fit(ns: &[usize], values: &[f64]) -> GrowthFit {
    let logs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let (log_slope, _) = fit_line(&logs, values);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 1..ns.len() {
        let inc = values[i] - values[i - 1];
        if inc > 0.0 {
            xs.push(logs[i]);
            ys.push(inc.ln());
        }
    }
    let increment_exponent =
        (xs.len() >= 2 && xs.len() == ns.len() - 1).then(|| fit_line(&xs, &ys).0);
    GrowthFit {
        ns: ns.to_vec(),
        values: values.to_vec(),
        log_slope,
        increment_exponent,
    }
}

/// 4 − 4/(n+1): deg 𝒫(Xⁿ) ≤ 0 iff d ≥ this.
pub fn d_star_e(n: usize) -> Rational {
    ri(4) - rq(4, n as i64 + 1)
}

/// 4 − 2/n
pub fn d_star_m(n: usize) -> Rational {
    assert!(n >= 1, "d*_m is defined for n ≥ 1");
    ri(4) - rq(2, n as i64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub d_star_e: String,
    pub d_star_m: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thresholds {
    pub d: f64,
    pub n_star_e: usize,
    pub n_star_m: usize,
    pub table: Vec<ThresholdRow>,
}

pub fn thresholds(d: f64) -> Result<Thresholds> {
    if !(3.0..4.0).contains(&d) {
        return Err(Error::Precondition(format!(
            "thresholds need 3 ≤ d < 4, got {d}"
        )));
    }
    let n_star_e = (d / (4.0 - d)).floor() as usize;
    let n_star_m = (2.0 / (4.0 - d)).floor() as usize;
    let table = (1..=6)
        .map(|n| ThresholdRow {
            n,
            d_star_e: d_star_e(n).to_string(),
            d_star_m: d_star_m(n).to_string(),
        })
        .collect();
    Ok(Thresholds {
        d,
        n_star_e,
        n_star_m,
        table,
    })
}

/// A two-leg ("mass type") subdiagram class with V vertices of arity 4.
#[derive(Clone, Debug)]
pub struct MassClass {
    pub vertices: usize,
    /// With the two legs as arity-1 vertices labelled "leg".
    pub with_legs: Diagram,
    /// The induced subgraph on the arity-4 vertices.
    pub internal: Diagram,
    /// Leg-matching count with distinguishable legs.
    pub count: Rational,
    pub degree_symbolic: (i64, i64),
    pub legs_on_one_vertex: bool,
}

impl MassClass {
    pub fn degree(&self, d: f64) -> f64 {
        degree(&self.internal, d)
    }

    pub fn degree_text(&self) -> String {
        let (a, b) = self.degree_symbolic;
        match a {
            0 => format!("{b}"),
            1 => format!("{b} + d"),
            -1 => format!("{b} − d"),
            a if a < 0 => format!("{b} − {}d", -a),
            a => format!("{b} + {a}d"),
        }
    }
}

fn has_bridge(g: &Diagram) -> bool {
    let m = g.multiplicity_matrix();
    let n = g.num_vertices();
    for u in 0..n {
        for v in u + 1..n {
            if m[u][v] == 1 {
                let edges: Vec<(usize, usize)> =
                    g.edges.iter().copied().filter(|&e| e != (u, v)).collect();
                let h = Diagram::from_edges(n, &edges);
                if !h.is_connected() {
                    return true;
                }
            }
        }
    }
    false
}

/// One-particle-irreducible two-leg classes with 2..=max_vertices arity-4 vertices.
pub fn mass_type_classes(max_vertices: usize) -> Result<Vec<MassClass>> {
    let budget = Budget::from_env();
    let mut out = Vec::new();
    for v in 2..=max_vertices {
        let all = generate_with(&vec![4; v], &["leg", "leg"], false, budget)?;
        for (g, c) in all.iter() {
            if !g.is_connected() {
                continue;
            }
            let inner: Vec<usize> = (0..g.num_vertices())
                .filter(|&i| !g.vertices[i].is_external())
                .collect();
            let internal = g.induced(&inner);
            if has_bridge(&internal) {
                continue;
            }
            let legs: Vec<usize> = g
                .edges
                .iter()
                .filter_map(|&(a, b)| {
                    if g.vertices[a].is_external() {
                        Some(b)
                    } else if g.vertices[b].is_external() {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect();
            out.push(MassClass {
                vertices: v,
                with_legs: g.clone(),
                internal: canonical(&internal),
                count: c.clone(),
                degree_symbolic: degree_symbolic(&internal),
                legs_on_one_vertex: legs.len() == 2 && legs[0] == legs[1],
            });
        }
    }
    Ok(out)
}

/// Mass-type classes with deg ≤ 0 at dimension d.
pub fn divergent_classes(d: f64, max_vertices: usize) -> Result<Vec<MassClass>> {
    Ok(mass_type_classes(max_vertices)?
        .into_iter()
        .filter(|c| c.degree(d) <= 1e-12)
        .collect())
}

/// σ_n(N) model: normalization · Σ over n-vertex mass classes of (count/2)·Π_N(internal).
///
/// With this normalization σ₂ = 96 Π_N(bubble), so β = (−α)²/2!·σ₂ reproduces the d = 3
/// counterterm.
pub fn sigma_n(d: f64, n_cut: usize, n: usize, normalization: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Precondition("σ_n starts at n = 2".into()));
    }
    let val = Valuator::new(d, n_cut)?;
    let classes: Vec<MassClass> = mass_type_classes(n)?
        .into_iter()
        .filter(|c| c.vertices == n)
        .collect();
    let mut terms = Vec::new();
    for c in &classes {
        terms.push(to_f64(&c.count) / 2.0 * val.value(&c.internal)?);
    }
    Ok(normalization * kahan(terms))
}

/// β_{N,d}(α) = Σ_{n=2}^{n*_m(d)} (−α)ⁿ/n! σ_n(N)
pub fn beta_fractional(d: f64, n_cut: usize, alpha: f64, normalization: f64) -> Result<f64> {
    let th = thresholds(d)?;
    let mut acc = 0.0;
    for n in 2..=th.n_star_m.max(2) {
        let s = sigma_n(d, n_cut, n, normalization)?;
        acc += (-alpha).powi(n as i32) / to_f64(&rbig(factorial(n))) * s;
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaRate {
    pub d: f64,
    pub n: usize,
    pub fit: GrowthFit,
    /// 2 − (4 − d)n
    pub predicted: f64,
    /// Power counting of the ℤ³ model: 3L − (5 − d)E for the two-leg internal graphs.
    pub model_exponent: f64,
}

pub fn sigma_rate(d: f64, n: usize, ns: &[usize]) -> Result<SigmaRate> {
    let (_, s) = lattice_model(d)?;
    let values = ns
        .iter()
        .map(|&nc| sigma_n(d, nc, n, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let e = 2 * n - 1;
    let loops = e + 1 - n;
    Ok(SigmaRate {
        d,
        n,
        fit: growth_fit(ns, &values),
        predicted: 2.0 - (4.0 - d) * n as f64,
        model_exponent: 3.0 * loops as f64 - 2.0 * s * e as f64,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutativityRow {
    pub n: usize,
    /// Π∘𝒫(e^{−αX−βY}) − γ at order n.
    pub route_wick: f64,
    /// Π^BPHZ∘𝒫(e^{−αX}) at order n.
    pub route_bphz: f64,
    /// The lemma's closed form of route_bphz.
    pub route_bphz_lemma: f64,
    pub difference: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutativityReport {
    pub n_cut: usize,
    pub order: usize,
    pub beta2: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// γ recomputed as −Π𝒜̃∘𝒫(e^{−αX}), per order.
    pub gamma_from_twisted: Vec<f64>,
    pub rows: Vec<CommutativityRow>,
}

impl CommutativityReport {
    pub fn max_relative(&self) -> f64 {
        self.rows.iter().map(|r| r.relative).fold(0.0, f64::max)
    }
}

/// Connected part of 𝒫(X^k Y^j): k arity-4 and j arity-2 vertices.
pub fn connected_xy(k: usize, j: usize, budget: Budget) -> Result<DiagramSum> {
    let mut ar = vec![4u32; k];
    ar.extend(std::iter::repeat_n(2u32, j));
    if ar.is_empty() {
        return Ok(DiagramSum::new());
    }
    Ok(generate_with(&ar, &[], false, budget)?.connected_part())
}

/// Both sides of the commutative diagram at d = 3, per order n ≤ order.
pub fn wick_map_commutativity_check(n_cut: usize, order: usize) -> Result<CommutativityReport> {
    if order > DEFAULT_MAX_ORDER {
        return Err(Error::Precondition(format!("order ≤ {DEFAULT_MAX_ORDER}")));
    }
    let val = Valuator::new(3.0, n_cut)?;
    let ap = Antipode::new(3.0);
    let ct = counterterms_with(&val, 1.0)?;
    let budget = Budget::from_env();
    let gamma = |n: usize| match n {
        2 => ct.gamma2,
        3 => ct.gamma3,
        _ => 0.0,
    };
    // 𝒲(Xⁿ) with κ(x²) = 2·b·Y, b = variable 2, Y = variable 3: gives e^{−αX−bα²Y}
    let mut kappa = Functional::zero(order.max(2));
    kappa.set(2, MPoly::term(Monomial::new(vec![0, 0, 1, 1]), ri(2)));
    let mut rows = Vec::new();
    let mut gamma_from_twisted = Vec::new();
    for n in 1..=order {
        let w = cumulants::wick_map(&kappa, n)?;
        let mut wick_terms = Vec::new();
        for (xpow, coeff) in w.coeffs.iter().enumerate() {
            for (m, c) in coeff.terms() {
                let j = m.exp(3) as usize;
                debug_assert_eq!(m.exp(2) as usize, j);
                let s = connected_xy(xpow, j, budget)?;
                let v = valuate_sum(&s, &val)?;
                wick_terms
                    .push(to_f64(&(c * sign_over_factorial(n))) * ct.beta2.powi(j as i32) * v);
            }
        }
        let route_wick = kahan(wick_terms) - gamma(n);
        let conn = connected_xy(n, 0, budget)?;
        let mut direct = Vec::new();
        let mut lemma = Vec::new();
        let mut twisted = Vec::new();
        for (g, c) in conn.iter() {
            let (a, b) = bphz_valuate(g, &val, &ap)?;
            let w = to_f64(&(c * sign_over_factorial(n)));
            direct.push(w * a);
            lemma.push(w * b);
            twisted.push(-w * ap.twisted(g)?.valuate(&val)?);
        }
        gamma_from_twisted.push(kahan(twisted));
        let route_bphz = kahan(direct);
        let difference = route_wick - route_bphz;
        let scale = route_wick.abs().max(route_bphz.abs()).max(gamma(2).abs());
        rows.push(CommutativityRow {
            n,
            route_wick,
            route_bphz,
            route_bphz_lemma: kahan(lemma),
            difference,
            relative: difference.abs() / scale,
        });
    }
    Ok(CommutativityReport {
        n_cut,
        order,
        beta2: ct.beta2,
        gamma2: ct.gamma2,
        gamma3: ct.gamma3,
        gamma_from_twisted,
        rows,
    })
}

/// 𝒲(Xⁿ) = H_n(X; 2bY) and Σ (−α)ⁿ/n! 𝒲(Xⁿ) = e^{−αX−bα²Y}, both checked symbolically to order n.
///
/// Variables: X = 1, b = 2, Y = 3, α = 4.
pub fn wick_map_hermite_identity(order: usize) -> Result<bool> {
    let mut kappa = Functional::zero(order.max(2));
    kappa.set(2, MPoly::term(Monomial::new(vec![0, 0, 1, 1]), ri(2)));
    let s2 = MPoly::term(Monomial::new(vec![0, 0, 1, 1]), ri(2));
    let x = MPoly::var(1);
    let alpha = MPoly::var(4);
    let mut lhs = MPoly::zero();
    for n in 2..=order {
        let w = cumulants::wick_map(&kappa, n)?.to_mpoly(1);
        let h = hermite(n);
        let mut expect = MPoly::zero();
        for (j, c) in h.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let term = x.pow(j).scale(c);
            expect = &expect + &(&term * &s2.pow((n - j) / 2));
        }
        if w != expect {
            return Ok(false);
        }
    }
    for n in 0..=order {
        let w = cumulants::wick_map(&kappa, n)?.to_mpoly(1);
        lhs = &lhs + &(&w * &alpha.pow(n)).scale(&sign_over_factorial(n));
    }
    // exp(z) with z = −αX − bα²Y, truncated at total α-degree ≤ order
    let z = &(&alpha * &x).scale(&ri(-1)) - &MPoly::term(Monomial::new(vec![0, 0, 1, 1, 2]), ri(1));
    let mut rhs = MPoly::zero();
    for k in 0..=order {
        rhs = &rhs + &z.pow(k).scale(&rbig(factorial(k)).recip());
    }
    let trunc = |p: &MPoly| {
        let mut q = MPoly::zero();
        for (m, c) in p.terms() {
            if (m.exp(4) as usize) <= order {
                q.add_term(m.clone(), c.clone());
            }
        }
        q
    };
    Ok(trunc(&lhs) == trunc(&rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct McEstimate {
    pub d: usize,
    pub n_cut: usize,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: usize,
    pub estimate: f64,
    pub stderr: f64,
}

/// Grid size per axis for exact quadrature of ∫:φ_N⁴: (a trigonometric polynomial of degree 4N).
pub fn quadrature_grid(n_cut: usize) -> usize {
    lattice::fft_size(4 * n_cut + 1)
}

/// ∫:φ_N⁴: by grid quadrature.
pub fn wick_quartic_integral(sample: &FieldSample, m: usize, c_n: f64, coef: &[f64]) -> f64 {
    let how = if sample.lattice.d == 1 {
        Synthesis::Direct
    } else {
        Synthesis::Fft
    };
    let grid = sample.grid_values(m, how);
    kahan(grid.iter().map(|&x| hermite_scaled_f64(coef, x, c_n))) / grid.len() as f64
}

/// ∫:φ_N²: = Σ a_k² − C_N, exactly in mode space.
pub fn wick_quadratic_integral_modes(sample: &FieldSample) -> f64 {
    let c = kahan(sample.lattice.lambdas.iter().map(|l| 1.0 / l));
    kahan(sample.coeffs.iter().map(|a| a * a)) - c
}

/// E[exp(−α∫:φ_N⁴:)] for several α from the same field samples.
pub fn mc_partition_ratios(
    d: usize,
    n_cut: usize,
    alphas: &[f64],
    samples: usize,
    seed: u64,
    grid: Option<usize>,
) -> Result<Vec<McEstimate>> {
    if !(1..=2).contains(&d) {
        return Err(Error::Precondition(
            "Monte Carlo is provided for d = 1, 2".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::Precondition("samples must be positive".into()));
    }
    let m = grid.unwrap_or_else(|| quadrature_grid(n_cut));
    if m < 4 * n_cut + 1 {
        return Err(Error::Precondition(format!(
            "quadrature grid must be at least 4N+1 = {}",
            4 * n_cut + 1
        )));
    }
    let lat = ModeLattice::new(d, n_cut)?;
    let c_n = kahan(lat.lambdas.iter().map(|l| 1.0 / l));
    let coef: Vec<f64> = hermite(4).coeffs().iter().map(to_f64).collect();
    let stats = run_batched_vec(samples, seed, alphas.len(), |rng, out| {
        let s = sample_with_rng(SpectralProfile::Gff, &lat, rng);
        let x = wick_quartic_integral(&s, m, c_n, &coef);
        for (o, a) in out.iter_mut().zip(alphas) {
            *o = (-a * x).exp();
        }
    });
    Ok(alphas
        .iter()
        .zip(stats)
        .map(|(&alpha, s)| McEstimate {
            d,
            n_cut,
            alpha,
            samples,
            seed,
            grid: m,
            estimate: s.mean,
            stderr: s.stderr(),
        })
        .collect())
}

pub fn mc_partition_ratio(
    d: usize,
    n_cut: usize,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_partition_ratios(d, n_cut, &[alpha], samples, seed, None)?.remove(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticRow {
    pub alpha: f64,
    pub mc: f64,
    pub stderr: f64,
    pub series3: f64,
    pub difference: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub n_cut: usize,
    /// Exact order-4 coefficient of the ratio series.
    pub c4: f64,
    /// The single constant used for every α.
    pub c: f64,
    pub rows: Vec<AsymptoticRow>,
}

impl AsymptoticReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }
}

/// |MC − order-3 series| ≤ max(4·stderr, C·α⁴) at d = 1, with C = `c_factor`·|c₄| fixed
/// from the exact order-4 coefficient before any sampling.
pub fn asymptotic_check(
    n_cut: usize,
    alphas: &[f64],
    samples: usize,
    seed: u64,
    c_factor: f64,
) -> Result<AsymptoticReport> {
    let series = partition_ratio_series(1.0, n_cut, 4)?;
    let c4 = series.value(4);
    let c = c_factor * c4.abs();
    let mc = mc_partition_ratios(1, n_cut, alphas, samples, seed, None)?;
    let rows = mc
        .iter()
        .map(|e| {
            let s3 = kahan((0..=3).map(|n| series.value(n) * e.alpha.powi(n as i32)));
            let difference = e.estimate - s3;
            let bound = (4.0 * e.stderr).max(c * e.alpha.powi(4));
            AsymptoticRow {
                alpha: e.alpha,
                mc: e.estimate,
                stderr: e.stderr,
                series3: s3,
                difference,
                bound,
                ok: difference.abs() <= bound,
            }
        })
        .collect();
    Ok(AsymptoticReport { n_cut, c4, c, rows })
}

/// Full JSON report for the phi4 command.
pub fn report_json(d: f64, n_cut: usize, order: usize, mc: Option<&McEstimate>) -> Result<Value> {
    let val = Valuator::new(d, n_cut)?;
    let opts = SeriesOptions::default();
    let lc = linked_cluster_with(&val, order, &opts)?;
    let mut out = json!({
        "schema": SERIES_SCHEMA,
        "d": d,
        "N": n_cut,
        "order": order,
        "partition_ratio": lc.full.to_json(),
        "log_partition": lc.connected.to_json(),
        "linked_cluster_routes_agree": lc.routes_agree,
    });
    if d == 3.0 {
        out["counterterms"] = counterterms_with(&val, 1.0)?.to_json();
    }
    if (3.0..4.0).contains(&d) {
        out["thresholds"] = serde_json::to_value(thresholds(d)?).expect("plain data");
    }
    if let Some(m) = mc {
        out["mc"] = serde_json::to_value(m).expect("plain data");
    }
    Ok(out)
}

/// Coefficient/Π ratio of a single-diagram coefficient, as an exact rational.
pub fn displayed_factor(c: &SeriesCoefficient) -> Option<Rational> {
    if c.diagrams.len() == 1 {
        c.diagrams.iter().next().map(|(_, v)| v.clone())
    } else {
        None
    }
}

/// |r| as f64, for reporting.
pub fn rational_abs_f64(r: &Rational) -> f64 {
    r.abs().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_series_low_orders() {
        let s = partition_ratio_series(1.0, 4, 3).unwrap();
        assert_eq!(s.value(0), 1.0);
        assert!(s.coefficient(1).unwrap().diagrams.is_empty());
        assert_eq!(displayed_factor(s.coefficient(2).unwrap()), Some(ri(12)));
        assert_eq!(displayed_factor(s.coefficient(3).unwrap()), Some(ri(-288)));
        let v = Valuator::new(1.0, 4).unwrap();
        let p = v.value(&named::fgiv()).unwrap();
        assert!((s.value(2) - 12.0 * p).abs() < 1e-12);
    }

    #[test]
    fn plain_variant_has_tadpoles() {
        let val = Valuator::new(1.0, 4).unwrap();
        let opts = SeriesOptions {
            variant: EnergyVariant::Plain,
            ..Default::default()
        };
        let s = partition_ratio_series_with(&val, 1, &opts).unwrap();
        let c = crate::torusfield::c_variance(1, 4).unwrap();
        assert!((s.value(1) + 3.0 * c * c).abs() < 1e-12);
        assert!(partition_ratio_series_with(&val, 3, &opts).is_err());
    }

    #[test]
    fn linked_cluster_routes() {
        let r = linked_cluster(1.0, 3, 4).unwrap();
        assert!(r.routes_agree);
        assert!(r.exp_roundtrip);
        let mut expect = DiagramSum::new();
        expect.add(
            &named::fgiv().disjoint_union(&named::fgiv()),
            ri(3 * 24 * 24),
        );
        assert_eq!(r.disconnected[4], expect);
    }

    #[test]
    fn thresholds_exact() {
        assert_eq!(d_star_m(2), ri(3));
        assert_eq!(d_star_m(3), rq(10, 3));
        assert_eq!(d_star_m(4), rq(7, 2));
        for n in 1..8 {
            assert_eq!(d_star_m(n), d_star_e(2 * n - 1));
        }
        let t = thresholds(3.0).unwrap();
        assert_eq!((t.n_star_e, t.n_star_m), (3, 2));
        assert!(thresholds(4.0).is_err());
    }

    #[test]
    fn hermite_form_of_wick_map() {
        assert!(wick_map_hermite_identity(6).unwrap());
    }

    #[test]
    fn mc_zero_coupling_is_one() {
        let e = mc_partition_ratio(1, 4, 0.0, 100, 1).unwrap();
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn quadratic_modes_match_grid() {
        let lat = ModeLattice::new(2, 4).unwrap();
        let s = crate::torusfield::sample_field(SpectralProfile::Gff, &lat, 3).unwrap();
        let c = kahan(lat.lambdas.iter().map(|l| 1.0 / l));
        let m = quadrature_grid(4);
        let g = s.grid_values(m, Synthesis::Fft);
        let grid = kahan(g.iter().map(|x| x * x - c)) / g.len() as f64;
        assert!((grid - wick_quadratic_integral_modes(&s)).abs() < 1e-12);
    }
}
