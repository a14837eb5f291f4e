//! Wiener sums, thinness classification, capacity shrink profiles and thin
//! unions.
//!
//! The Wiener term at scale `j` is
//!
//! ```text
//! t_j = (cap_p(E ∩ B(x0, σ^-j r0), B(x0, σ^(1-j) r0))
//!        / cap_p(B(x0, σ^-j r0), B(x0, σ^(1-j) r0)))^(1 / (p - 1))
//! ```
//!
//! with `t_j = 1` whenever the denominator vanishes. In rescaled mode every
//! condenser is pulled back to `B(0, 1/σ) ⊂ B(0, 1)` on one unit grid, so the
//! cost per scale is constant and the denominator is computed once.

use alloc::boxed::Box;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::capacity::{self, Diagnostics};
use crate::descriptor::AnalyticSet;
use crate::error::{Error, Result};
use crate::math;
use crate::solver::{self, SolverOptions};
use crate::space::{build_grid, geometry, GridSpec, Region, WeightedGraphSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerMode {
    Rescaled,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerConfig {
    pub x0: Vec<f64>,
    pub sigma: f64,
    pub r0: f64,
    pub scales: usize,
    pub p: f64,
    /// Cells per unit length of the (unit or global) grid.
    pub resolution: usize,
    pub mode: WienerMode,
    /// Exponent of the `|x - x0|^α` density (rescaled mode) or `|x|^α`
    /// (global mode).
    #[serde(default)]
    pub weight_exponent: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl WienerConfig {
    pub fn new(x0: Vec<f64>, p: f64) -> Self {
        WienerConfig {
            x0,
            sigma: 8.0,
            r0: 1.0,
            scales: 12,
            p,
            resolution: 128,
            mode: WienerMode::Rescaled,
            weight_exponent: 0.0,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerTerm {
    pub j: usize,
    /// Inner radius `σ^-j r0`.
    pub r_j: f64,
    pub cap_num: f64,
    pub cap_den: f64,
    pub t_j: f64,
    pub partial_sum: f64,
    /// Global mode only: the scale is below eight grid cells and was not used.
    pub skipped: bool,
    /// The term exceeds 1 by more than 5%.
    pub flagged: bool,
    pub num_diagnostics: Diagnostics,
    pub den_diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerReport {
    pub descriptor: AnalyticSet,
    pub config: WienerConfig,
    pub terms: Vec<WienerTerm>,
    pub decay_ratio: f64,
    pub convention_hits: usize,
    pub flagged: usize,
}

impl WienerReport {
    /// Terms of the scales that were actually computed.
    pub fn values(&self) -> Vec<f64> {
        self.terms.iter().filter(|t| !t.skipped).map(|t| t.t_j).collect()
    }

    pub fn sum(&self) -> f64 {
        self.terms.last().map_or(0.0, |t| t.partial_sum)
    }
}

fn check_config(cfg: &WienerConfig) -> Result<()> {
    if !(cfg.sigma > 1.0) {
        return Err(Error::InvalidParameter { name: "sigma", reason: "must exceed 1".into() });
    }
    if cfg.scales == 0 {
        return Err(Error::InvalidParameter { name: "scales", reason: "must be at least 1".into() });
    }
    if !(cfg.r0 > 0.0) {
        return Err(Error::InvalidParameter { name: "r0", reason: "must be positive".into() });
    }
    if cfg.resolution < 2 {
        return Err(Error::InvalidParameter { name: "resolution", reason: "must be at least 2".into() });
    }
    if !(1..=3).contains(&cfg.x0.len()) {
        return Err(Error::InvalidParameter { name: "x0", reason: "dimension must be 1, 2 or 3".into() });
    }
    solver::check_exponent(cfg.p)
}

/// Nodes with `|x - center| < radius` (positions required).
pub(crate) fn ball_around(space: &WeightedGraphSpace, center: &[f64], radius: f64) -> Region {
    Region::from_indices(
        (0..space.len()).filter(|&i| space.position(i).is_some_and(|x| math::dist(x, center) < radius)),
    )
}

fn term(num: f64, den: f64, p: f64) -> (f64, bool) {
    if den == 0.0 {
        (1.0, true)
    } else {
        (math::powf(num / den, 1.0 / (p - 1.0)), false)
    }
}

fn diagnostics(c: &capacity::CapacityResult) -> Diagnostics {
    c.diagnostics
}

/// Computes `J` Wiener terms of `descriptor` at `cfg.x0`.
pub fn wiener_terms(descriptor: &AnalyticSet, cfg: &WienerConfig) -> Result<WienerReport> {
    check_config(cfg)?;
    let mut report = WienerReport {
        descriptor: descriptor.clone(),
        config: cfg.clone(),
        terms: Vec::with_capacity(cfg.scales),
        decay_ratio: 0.0,
        convention_hits: 0,
        flagged: 0,
    };
    match cfg.mode {
        WienerMode::Rescaled => rescaled_terms(descriptor, cfg, &mut report)?,
        WienerMode::Global => global_terms(descriptor, cfg, &mut report)?,
    }
    let mut sum = 0.0;
    for t in &mut report.terms {
        sum += t.t_j;
        t.partial_sum = sum;
    }
    report.decay_ratio = decay_ratio(&report.values());
    report.flagged = report.terms.iter().filter(|t| t.flagged).count();
    Ok(report)
}

fn rescaled_terms(descriptor: &AnalyticSet, cfg: &WienerConfig, report: &mut WienerReport) -> Result<()> {
    if !descriptor.is_dilatable() {
        return Err(Error::DescriptorNotDilatable("descriptor is marked non-dilatable".into()));
    }
    let d = cfg.x0.len();
    let h = 1.0 / cfg.resolution as f64;
    let space = build_grid(&GridSpec::cube(&alloc::vec![0.0; d], 1.0, h).with_weight(cfg.weight_exponent))?;
    let origin = alloc::vec![0.0; d];
    let outer = ball_around(&space, &origin, 1.0);
    let inner = ball_around(&space, &origin, 1.0 / cfg.sigma);
    let den = capacity::variational_capacity(&space, &inner, &outer, cfg.p, &cfg.solver)?;
    for j in 1..=cfg.scales {
        let s = math::powf(cfg.sigma, 1.0 - j as f64) * cfg.r0;
        let e = geometry::pulled_back(&space, descriptor, &cfg.x0, s)?.intersection(&inner);
        let num = if e == inner {
            den.clone()
        } else {
            capacity::variational_capacity(&space, &e, &outer, cfg.p, &cfg.solver)?
        };
        // capacities scale like s^(d - p + α) under the dilation
        let unit = math::powf(s, d as f64 - cfg.p + cfg.weight_exponent);
        let (t, hit) = term(num.value, den.value, cfg.p);
        report.convention_hits += hit as usize;
        report.terms.push(WienerTerm {
            j,
            r_j: s / cfg.sigma,
            cap_num: num.value * unit,
            cap_den: den.value * unit,
            t_j: t,
            partial_sum: 0.0,
            skipped: false,
            flagged: t > 1.05,
            num_diagnostics: diagnostics(&num),
            den_diagnostics: diagnostics(&den),
        });
    }
    Ok(())
}

fn global_terms(descriptor: &AnalyticSet, cfg: &WienerConfig, report: &mut WienerReport) -> Result<()> {
    let h = cfg.r0 / cfg.resolution as f64;
    let half = cfg.r0 + h;
    let space = build_grid(&GridSpec::cube(&cfg.x0, half, h).with_weight(cfg.weight_exponent))?;
    let e_all = geometry::region_from_descriptor(&space, descriptor)?;
    let mut used = 0;
    for j in 1..=cfg.scales {
        let r_in = math::powf(cfg.sigma, -(j as f64)) * cfg.r0;
        let r_out = r_in * cfg.sigma;
        if r_in < 8.0 * h {
            report.terms.push(WienerTerm {
                j,
                r_j: r_in,
                cap_num: 0.0,
                cap_den: 0.0,
                t_j: 0.0,
                partial_sum: 0.0,
                skipped: true,
                flagged: false,
                num_diagnostics: Diagnostics { iterations: 0, kkt_residual: 0.0, converged: true },
                den_diagnostics: Diagnostics { iterations: 0, kkt_residual: 0.0, converged: true },
            });
            continue;
        }
        used += 1;
        let outer = ball_around(&space, &cfg.x0, r_out);
        let inner = ball_around(&space, &cfg.x0, r_in);
        let e = e_all.intersection(&inner);
        let den = capacity::variational_capacity(&space, &inner, &outer, cfg.p, &cfg.solver)?;
        let num = if e == inner {
            den.clone()
        } else {
            capacity::variational_capacity(&space, &e, &outer, cfg.p, &cfg.solver)?
        };
        let (t, hit) = term(num.value, den.value, cfg.p);
        report.convention_hits += hit as usize;
        report.terms.push(WienerTerm {
            j,
            r_j: r_in,
            cap_num: num.value,
            cap_den: den.value,
            t_j: t,
            partial_sum: 0.0,
            skipped: false,
            flagged: t > 1.05,
            num_diagnostics: diagnostics(&num),
            den_diagnostics: diagnostics(&den),
        });
    }
    if used == 0 {
        return Err(Error::ScaleUnderflow);
    }
    Ok(())
}

/// Geometric rate of the terms: `exp` of the least-squares slope of `ln t_j`
/// against `j` over the nonzero terms. Terms that end in zero decay at rate 0;
/// a single nonzero final term gives no trend and rate 1.
pub fn decay_ratio(terms: &[f64]) -> f64 {
    match terms.last() {
        None | Some(0.0) => return 0.0,
        _ => {}
    }
    let pts: Vec<(f64, f64)> =
        terms.iter().enumerate().filter(|(_, &t)| t > 0.0).map(|(j, &t)| (j as f64, math::ln(t))).collect();
    if pts.len() < 2 {
        return 1.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    math::exp(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyPolicy {
    pub rho_max: f64,
    pub eps_tail: f64,
    pub tau_floor: f64,
    pub k: usize,
}

impl Default for ClassifyPolicy {
    fn default() -> Self {
        ClassifyPolicy { rho_max: 0.9, eps_tail: 0.05, tau_floor: 0.05, k: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Thin,
    Thick,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// `t_J ρ / (1 - ρ)`, infinite when `ρ >= 1`.
    pub tail_estimate: f64,
    /// Smallest of the last `K` terms.
    pub floor_estimate: f64,
    pub decay_ratio: f64,
    pub scales_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub policy: ClassifyPolicy,
}

/// Thin when the terms decay geometrically with a small extrapolated tail,
/// thick when they neither decay nor fall below the floor.
pub fn classify_thin(report: &WienerReport, policy: &ClassifyPolicy) -> Result<Classification> {
    classify_terms(&report.values(), policy)
}

/// [`classify_thin`] on a bare term sequence.
pub fn classify_terms(terms: &[f64], policy: &ClassifyPolicy) -> Result<Classification> {
    let k = policy.k.max(1);
    if terms.len() < k {
        return Err(Error::TooFewTerms { have: terms.len(), need: k });
    }
    let rho = decay_ratio(terms);
    let last = terms[terms.len() - 1];
    let tail = if last == 0.0 {
        0.0
    } else if rho < 1.0 {
        last * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    let floor = terms[terms.len() - k..].iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if rho <= policy.rho_max && tail <= policy.eps_tail {
        Verdict::Thin
    } else if floor >= policy.tau_floor && rho > policy.rho_max {
        Verdict::Thick
    } else {
        Verdict::Inconclusive
    };
    Ok(Classification {
        verdict,
        evidence: Evidence { tail_estimate: tail, floor_estimate: floor, decay_ratio: rho, scales_used: terms.len() },
        policy: *policy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkPoint {
    pub rho: f64,
    pub capacity: f64,
}

/// `cap_p(E ∩ B(x0, ρ), B)` for each radius.
pub fn capacity_shrink_profile(
    space: &WeightedGraphSpace,
    e: &Region,
    x0: &[f64],
    b: &Region,
    radii: &[f64],
    p: f64,
    opts: &SolverOptions,
) -> Result<Vec<ShrinkPoint>> {
    if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter { name: "radii", reason: "must be positive and decreasing".into() });
    }
    let mut out = Vec::with_capacity(radii.len());
    for &rho in radii {
        let ball = ball_around(space, x0, rho);
        if !ball.is_subset(b) {
            return Err(Error::GeometryViolation(alloc::format!("B(x0, {rho}) is not inside the domain")));
        }
        let piece = e.intersection(&ball);
        let cap = capacity::variational_capacity(space, &piece, b, p, opts)?;
        out.push(ShrinkPoint { rho, capacity: cap.value });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThinUnion {
    /// Truncation level `m_j` of each input, with `r_j = σ^-m_j r0`.
    pub levels: Vec<usize>,
    pub radii: Vec<f64>,
    pub combined: WienerReport,
    pub classification: Classification,
}

/// Truncates each thin set at a radius where its remaining Wiener tail fits a
/// `ε 2^-j` share of the budget, and recomputes the sum for the union.
pub fn thin_union_radii(reports: &[WienerReport], budget: f64, policy: &ClassifyPolicy) -> Result<ThinUnion> {
    let first = reports
        .first()
        .ok_or(Error::InvalidParameter { name: "reports", reason: "at least one report is needed".into() })?;
    if !(budget > 0.0) {
        return Err(Error::InvalidParameter { name: "budget", reason: "must be positive".into() });
    }
    let cfg = &first.config;
    let mut levels = Vec::with_capacity(reports.len());
    let mut radii = Vec::with_capacity(reports.len());
    let mut parts = Vec::with_capacity(reports.len());
    for (idx, rep) in reports.iter().enumerate() {
        if rep.config.x0 != cfg.x0 || rep.config.sigma != cfg.sigma || rep.config.r0 != cfg.r0 {
            return Err(Error::InvalidParameter { name: "reports", reason: "x0, sigma and r0 must agree".into() });
        }
        let class = classify_thin(rep, policy)?;
        if class.verdict != Verdict::Thin {
            return Err(Error::NotThin { index: idx });
        }
        let share = budget * math::powf(2.0, -((idx + 1) as f64));
        let values: Vec<f64> = rep.terms.iter().map(|t| t.t_j).collect();
        let extrapolated = class.evidence.tail_estimate;
        // tail(m) = sum_{i > m} t_i + extrapolation
        let mut tail = extrapolated + values.iter().sum::<f64>();
        let mut level = None;
        for m in 0..=values.len() {
            if m > 0 {
                tail -= values[m - 1];
            }
            if tail <= share {
                level = Some(m);
                break;
            }
        }
        let m = level.ok_or(Error::BudgetInfeasible { index: idx })?;
        let r = math::powf(cfg.sigma, -(m as f64)) * cfg.r0;
        levels.push(m);
        radii.push(r);
        parts.push(AnalyticSet::Restrict { set: Box::new(rep.descriptor.clone()), center: cfg.x0.clone(), radius: r });
    }
    let union =
        if parts.len() == 1 { parts.pop().unwrap_or(AnalyticSet::Empty) } else { AnalyticSet::Union { sets: parts } };
    let combined = wiener_terms(&union, cfg)?;
    let classification = classify_thin(&combined, policy)?;
    Ok(ThinUnion { levels, radii, combined, classification })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg(x0: Vec<f64>, res: usize, scales: usize, sigma: f64) -> WienerConfig {
        WienerConfig { resolution: res, scales, sigma, ..WienerConfig::new(x0, 2.0) }
    }

    #[test]
    fn empty_set_has_zero_sum() {
        let r = wiener_terms(&AnalyticSet::Empty, &cfg(vec![0.0, 0.0], 32, 4, 4.0)).unwrap();
        assert!(r.values().iter().all(|&t| t == 0.0));
        assert_eq!(r.sum(), 0.0);
        assert_eq!(classify_thin(&r, &ClassifyPolicy::default()).unwrap().verdict, Verdict::Thin);
    }

    #[test]
    fn full_ball_gives_unit_terms() {
        let e = AnalyticSet::Ball { center: vec![0.0, 0.0], radius: 2.0, closed: false };
        let r = wiener_terms(&e, &cfg(vec![0.0, 0.0], 32, 4, 4.0)).unwrap();
        assert!(r.values().iter().all(|&t| t == 1.0));
        assert_eq!(r.sum(), 4.0);
        assert_eq!(classify_thin(&r, &ClassifyPolicy::default()).unwrap().verdict, Verdict::Thick);
    }

    #[test]
    fn point_on_the_line() {
        // cap_2({0}, (-1, 1)) = 2 and cap_2([-a, a], (-1, 1)) = 2 / (1 - a)
        let sigma = 2.0;
        let r = wiener_terms(&AnalyticSet::Singleton { point: vec![0.0] }, &cfg(vec![0.0], 1024, 3, sigma)).unwrap();
        let h = 1.0 / 1024.0;
        let a = 1.0 / sigma - h; // the open inner ball stops one node short
        let expected = 2.0 / (2.0 / (1.0 - a));
        for t in r.values() {
            assert!((t - expected).abs() < 1e-9, "{t} vs {expected}");
        }
    }

    #[test]
    fn sector_terms_are_scale_invariant() {
        let r =
            wiener_terms(&AnalyticSet::sector(core::f64::consts::PI / 6.0), &cfg(vec![0.0, 0.0], 32, 3, 4.0)).unwrap();
        let v = r.values();
        assert!(v.iter().all(|&t| (t - v[0]).abs() < 1e-12), "{v:?}");
        assert!(v[0] > 0.1 && v[0] < 1.0);
    }

    #[test]
    fn disk_chain_is_thin() {
        let chain = AnalyticSet::DiskChain {
            base: vec![0.0, 0.0],
            direction: vec![0.3f64.cos(), 0.3f64.sin()],
            first: 0.5,
            ratio: 0.25,
            decay: 1.0,
            count: 12,
        };
        let r = wiener_terms(&chain, &cfg(vec![0.0, 0.0], 32, 6, 4.0)).unwrap();
        let c = classify_thin(&r, &ClassifyPolicy::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Thin, "{:?} {:?}", r.values(), c);
    }

    #[test]
    fn non_dilatable_is_rejected() {
        let e = AnalyticSet::Inequalities { constraints: vec![], dilatable: false };
        assert!(matches!(wiener_terms(&e, &cfg(vec![0.0, 0.0], 16, 2, 2.0)), Err(Error::DescriptorNotDilatable(_))));
    }

    #[test]
    fn global_mode_skips_small_scales() {
        let mut c = cfg(vec![0.0, 0.0], 32, 6, 2.0);
        c.mode = WienerMode::Global;
        let e = AnalyticSet::Ball { center: vec![0.0, 0.0], radius: 2.0, closed: false };
        let r = wiener_terms(&e, &c).unwrap();
        // 2^-j >= 8/32 only for j <= 2
        assert_eq!(r.terms.iter().filter(|t| !t.skipped).count(), 2);
        assert!(r.values().iter().all(|&t| t == 1.0));
        c.resolution = 4;
        assert_eq!(wiener_terms(&e, &c).unwrap_err(), Error::ScaleUnderflow);
    }

    #[test]
    fn policy_examples() {
        let p = ClassifyPolicy::default();
        assert_eq!(classify_terms(&[1.0; 12], &p).unwrap().verdict, Verdict::Thick);
        let geo: Vec<f64> = (1..=12).map(|j| 0.5f64.powi(j)).collect();
        let c = classify_terms(&geo, &p).unwrap();
        assert_eq!(c.verdict, Verdict::Thin);
        assert!((c.evidence.decay_ratio - 0.5).abs() < 1e-12);
        assert!((c.evidence.tail_estimate - 0.5f64.powi(12)).abs() < 1e-12);
        let harmonic: Vec<f64> = (1..=12).map(|j| 1.0 / j as f64).collect();
        assert_eq!(classify_terms(&harmonic, &p).unwrap().verdict, Verdict::Inconclusive);
        assert_eq!(classify_terms(&[1.0], &p).unwrap_err(), Error::TooFewTerms { have: 1, need: 3 });
    }

    #[test]
    fn decay_ratio_edge_cases() {
        assert_eq!(decay_ratio(&[]), 0.0);
        assert_eq!(decay_ratio(&[0.0, 0.0]), 0.0);
        assert_eq!(decay_ratio(&[0.3, 0.0]), 0.0);
        assert_eq!(decay_ratio(&[0.0, 0.3]), 1.0);
        assert!((decay_ratio(&[0.8, 0.4, 0.2]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shrink_profile_of_empty_and_full() {
        let s = build_grid(&GridSpec::cube(&[0.0, 0.0], 1.0, 1.0 / 16.0)).unwrap();
        let b = ball_around(&s, &[0.0, 0.0], 1.0);
        let radii = [0.5, 0.25, 0.125];
        let opts = SolverOptions::default();
        let none = capacity_shrink_profile(&s, &Region::empty(), &[0.0, 0.0], &b, &radii, 2.0, &opts).unwrap();
        assert!(none.iter().all(|p| p.capacity == 0.0));
        let full = capacity_shrink_profile(&s, &b, &[0.0, 0.0], &b, &radii, 2.0, &opts).unwrap();
        assert!(full.windows(2).all(|w| w[1].capacity <= w[0].capacity));
        assert!(full[2].capacity > 0.0);
        assert!(capacity_shrink_profile(&s, &b, &[0.0, 0.0], &b, &[0.1, 0.2], 2.0, &opts).is_err());
    }

    #[test]
    fn thin_union_rules() {
        let chain = AnalyticSet::DiskChain {
            base: vec![0.0, 0.0],
            direction: vec![0.3f64.cos(), 0.3f64.sin()],
            first: 0.5,
            ratio: 0.25,
            decay: 1.0,
            count: 12,
        };
        let c = cfg(vec![0.0, 0.0], 32, 5, 4.0);
        let rep = wiener_terms(&chain, &c).unwrap();
        let policy = ClassifyPolicy::default();
        let single = thin_union_radii(core::slice::from_ref(&rep), 100.0, &policy).unwrap();
        assert_eq!(single.radii, vec![1.0]);
        assert_eq!(single.combined.values(), rep.values());
        let both = thin_union_radii(&[rep.clone(), rep.clone()], 0.5, &policy).unwrap();
        assert_eq!(both.classification.verdict, Verdict::Thin);
        assert!(both.combined.sum() <= 2.0 * rep.sum() + 0.5);
        let thick = wiener_terms(&AnalyticSet::sector(1.0), &c).unwrap();
        assert_eq!(thin_union_radii(&[rep, thick], 0.5, &policy).unwrap_err(), Error::NotThin { index: 1 });
    }
}
