//! Exact (quadrature) and flat-channel rate evaluation per sub-band, the
//! Jensen upper bound, and weighted-minimum-rate assembly.
//!
//! Two noise conventions coexist in the rate expressions: the per-Hz SINR
//! inside the rate integral carries the noise density over 1 Hz
//! (`NoiseRef::Density`), while the flat closed forms print an aggregated
//! `B_s N0` term (`NoiseRef::BandAggregate`). The convention is explicit in
//! `RateOptions` so that either evaluation mode can be run under either
//! convention; comparisons (1-node vs flat, Jensen tightness) are meaningful
//! only with matched conventions. See the README for the dimensional
//! discussion.

use num_complex::Complex64;

use crate::absorption::AbsorptionModel;
use crate::channel::{self, AngleSet, Geometry, IrsConfig};
use crate::quad::GaussLegendre;
use crate::{Error, Result};

/// Per-sub-band bandwidths and center frequencies.
#[derive(Debug, Clone)]
pub struct SubbandPlan {
    /// Bandwidths, Hz.
    pub bandwidth: Vec<f64>,
    /// Center frequencies, Hz.
    pub center: Vec<f64>,
    /// Guard band between adjacent sub-bands, Hz.
    pub guard: f64,
    pub f_start: f64,
    pub f_end: f64,
}

impl SubbandPlan {
    pub fn num_subbands(&self) -> usize {
        self.bandwidth.len()
    }

    /// Usable bandwidth dictated by the window: `f_end - f_start - (S-1) B_g`.
    pub fn usable_bandwidth(&self) -> f64 {
        let s = self.num_subbands() as f64;
        self.f_end - self.f_start - (s - 1.0) * self.guard
    }

    /// Center frequencies consistent with the bandwidths: sub-band `s` starts
    /// after all earlier sub-bands and guard gaps.
    pub fn consistent_centers(&self) -> Vec<f64> {
        let mut acc = self.f_start;
        let mut out = Vec::with_capacity(self.num_subbands());
        for (s, &b) in self.bandwidth.iter().enumerate() {
            out.push(acc + s as f64 * self.guard + 0.5 * b);
            acc += b;
        }
        out
    }

    /// Checks the bandwidth-sum identity and center consistency.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let sum: f64 = self.bandwidth.iter().sum();
        if (sum - self.usable_bandwidth()).abs() > tol * self.usable_bandwidth().abs().max(1.0) {
            return false;
        }
        self.consistent_centers()
            .iter()
            .zip(&self.center)
            .all(|(&c, &f)| (c - f).abs() <= tol * self.guard.max(1.0))
    }
}

/// Assignment matrix and power variables of a problem iterate.
#[derive(Debug, Clone)]
pub struct Allocation {
    /// `alpha[k][s]` in [0, 1].
    pub alpha: Vec<Vec<f64>>,
    /// BS power per sub-band, W.
    pub p: Vec<f64>,
    /// User power per (user, sub-band), W.
    pub q: Vec<Vec<f64>>,
    /// Big-M products `p_tilde = alpha * p`, W.
    pub p_tilde: Vec<Vec<f64>>,
    /// Big-M products `q_tilde = alpha * q`, W.
    pub q_tilde: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn zeros(num_users: usize, num_subbands: usize) -> Self {
        Allocation {
            alpha: vec![vec![0.0; num_subbands]; num_users],
            p: vec![0.0; num_subbands],
            q: vec![vec![0.0; num_subbands]; num_users],
            p_tilde: vec![vec![0.0; num_subbands]; num_users],
            q_tilde: vec![vec![0.0; num_subbands]; num_users],
        }
    }

    /// Largest distance of any entry of `alpha` from {0, 1}.
    pub fn binary_violation(&self) -> f64 {
        self.alpha
            .iter()
            .flatten()
            .map(|&a| a.min(1.0 - a).abs())
            .fold(0.0, f64::max)
    }
}

/// Rate evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Gauss-Legendre integration of the per-Hz rate across the sub-band.
    Quadrature,
    /// Flat-channel closed form evaluated at the center frequency.
    FlatCenter,
}

/// Noise term in the SINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseRef {
    /// Noise density times 1 Hz (the convention of the rate integral).
    Density,
    /// Aggregated `B_s N0` (the convention of the flat closed forms).
    BandAggregate,
}

#[derive(Debug, Clone, Copy)]
pub struct RateOptions {
    /// Quadrature nodes per sub-band.
    pub nodes: usize,
    pub mode: RateMode,
    /// SI cancellation quality, linear scale. 0 <= gamma << 1.
    pub gamma: f64,
    /// Noise power density, W/Hz.
    pub n0: f64,
    pub noise_ref: NoiseRef,
}

impl RateOptions {
    pub fn new(gamma: f64, n0: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma < 1.0) {
            return Err(Error::domain(format!("gamma must be in [0, 1), got {gamma}")));
        }
        if !(n0 > 0.0) {
            return Err(Error::domain(format!("noise density must be positive, got {n0}")));
        }
        Ok(RateOptions {
            nodes: 16,
            mode: RateMode::Quadrature,
            gamma,
            n0,
            noise_ref: NoiseRef::Density,
        })
    }

    pub fn with_mode(mut self, mode: RateMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn with_noise_ref(mut self, noise_ref: NoiseRef) -> Self {
        self.noise_ref = noise_ref;
        self
    }

    /// Noise power entering the SINR denominator for bandwidth `b`.
    pub fn noise_power(&self, b: f64) -> f64 {
        match self.noise_ref {
            NoiseRef::Density => self.n0,
            NoiseRef::BandAggregate => self.n0 * b,
        }
    }
}

/// `|h_hat^H v|^2` beamformed cascade gain.
pub fn beamformed_gain(h_hat: &[Complex64], v: &[Complex64]) -> f64 {
    let acc: Complex64 = h_hat
        .iter()
        .zip(v)
        .map(|(&h, &w)| h.conj() * w)
        .sum();
    acc.norm_sqr()
}

struct LinkEval<'a> {
    geom: &'a Geometry,
    angles: &'a AngleSet,
    irs: &'a IrsConfig,
    absorption: &'a AbsorptionModel,
}

impl LinkEval<'_> {
    /// Per-Hz spectral efficiency integrand at frequency `f` for one link.
    fn sinr(
        &self,
        k: usize,
        f: f64,
        signal_power: f64,
        si_power: f64,
        downlink: bool,
        noise: f64,
        gamma: f64,
    ) -> Result<f64> {
        let ch = if downlink {
            channel::cascade_dl(self.geom, self.angles, self.irs, self.absorption, k, f)?
        } else {
            channel::cascade_ul(self.geom, self.angles, self.irs, self.absorption, k, f)?
        };
        let gain = beamformed_gain(&ch.h_hat, &self.irs.v);
        // DL receiver (user k) leaks its own UL power; UL receiver (BS) leaks
        // the BS DL power.
        let spacing = if downlink {
            self.geom.d0k[k]
        } else {
            self.geom.d0
        };
        let lsi = if gamma > 0.0 {
            channel::lsi_gain(f, spacing, self.absorption)?
        } else {
            0.0
        };
        Ok(signal_power * gain / (gamma * si_power * lsi + noise))
    }
}

fn rate_for_link(
    k: usize,
    s: usize,
    plan: &SubbandPlan,
    signal_power: f64,
    si_power: f64,
    downlink: bool,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<f64> {
    let b = plan.bandwidth[s];
    if b < 0.0 {
        return Err(Error::domain(format!("negative bandwidth {b}")));
    }
    if b == 0.0 || signal_power == 0.0 {
        return Ok(0.0);
    }
    if opts.nodes == 0 {
        return Err(Error::domain("quadrature needs at least one node".to_string()));
    }
    let eval = LinkEval {
        geom,
        angles,
        irs,
        absorption,
    };
    let noise = opts.noise_power(b);
    let fc = plan.center[s];
    match opts.mode {
        RateMode::FlatCenter => {
            let sinr = eval.sinr(k, fc, signal_power, si_power, downlink, noise, opts.gamma)?;
            Ok(b * (1.0 + sinr).log2())
        }
        RateMode::Quadrature => {
            let rule = GaussLegendre::new(opts.nodes);
            let mut acc = 0.0;
            for (f, w) in rule.mapped(fc - 0.5 * b, fc + 0.5 * b) {
                let sinr =
                    eval.sinr(k, f, signal_power, si_power, downlink, noise, opts.gamma)?;
                acc += w * (1.0 + sinr).log2();
            }
            Ok(acc)
        }
    }
}

/// Downlink rate (bits/s) of user `k` in sub-band `s`.
pub fn dl_rate(
    k: usize,
    s: usize,
    plan: &SubbandPlan,
    alloc: &Allocation,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<f64> {
    rate_for_link(
        k,
        s,
        plan,
        alloc.p[s],
        alloc.q[k][s],
        true,
        irs,
        geom,
        angles,
        absorption,
        opts,
    )
}

/// Uplink rate (bits/s) of user `k` in sub-band `s`.
pub fn ul_rate(
    k: usize,
    s: usize,
    plan: &SubbandPlan,
    alloc: &Allocation,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<f64> {
    rate_for_link(
        k,
        s,
        plan,
        alloc.q[k][s],
        alloc.p[s],
        false,
        irs,
        geom,
        angles,
        absorption,
        opts,
    )
}

fn jensen_for_link(
    k: usize,
    s: usize,
    plan: &SubbandPlan,
    power: f64,
    downlink: bool,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<f64> {
    if opts.gamma != 0.0 {
        return Err(Error::domain(
            "the Jensen bound is defined under perfect SI cancellation (gamma = 0)".to_string(),
        ));
    }
    let b = plan.bandwidth[s];
    if b < 0.0 {
        return Err(Error::domain(format!("negative bandwidth {b}")));
    }
    if b == 0.0 || power == 0.0 {
        return Ok(0.0);
    }
    let fc = plan.center[s];
    let rule = GaussLegendre::new(opts.nodes);
    let mut snr_integral = 0.0;
    for (f, w) in rule.mapped(fc - 0.5 * b, fc + 0.5 * b) {
        let ch = if downlink {
            channel::cascade_dl(geom, angles, irs, absorption, k, f)?
        } else {
            channel::cascade_ul(geom, angles, irs, absorption, k, f)?
        };
        snr_integral += w * power * beamformed_gain(&ch.h_hat, &irs.v);
    }
    Ok(b * (1.0 + snr_integral / (b * opts.n0)).log2())
}

/// Jensen upper bound on the downlink rate: `B_s log2(1 + int p v^H H v df / (B_s N0))`.
/// Requires `gamma = 0`.
pub fn jensen_ub_dl(
    k: usize,
    s: usize,
    plan: &SubbandPlan,
    alloc: &Allocation,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<f64> {
    jensen_for_link(
        k,
        s,
        plan,
        alloc.p_tilde[k][s],
        true,
        irs,
        geom,
        angles,
        absorption,
        opts,
    )
}

/// Uplink counterpart of [`jensen_ub_dl`].
pub fn jensen_ub_ul(
    k: usize,
    s: usize,
    plan: &SubbandPlan,
    alloc: &Allocation,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<f64> {
    jensen_for_link(
        k,
        s,
        plan,
        alloc.q_tilde[k][s],
        false,
        irs,
        geom,
        angles,
        absorption,
        opts,
    )
}

/// Per-(direction, user, sub-band) rate table, bits/s.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub dl: Vec<Vec<f64>>,
    pub ul: Vec<Vec<f64>>,
}

/// Evaluates the full rate table for an allocation.
pub fn rate_table(
    plan: &SubbandPlan,
    alloc: &Allocation,
    irs: &IrsConfig,
    geom: &Geometry,
    angles: &AngleSet,
    absorption: &AbsorptionModel,
    opts: &RateOptions,
) -> Result<RateTable> {
    let num_users = geom.num_users();
    let num_subbands = plan.num_subbands();
    let mut dl = vec![vec![0.0; num_subbands]; num_users];
    let mut ul = vec![vec![0.0; num_subbands]; num_users];
    for k in 0..num_users {
        for s in 0..num_subbands {
            dl[k][s] = dl_rate(k, s, plan, alloc, irs, geom, angles, absorption, opts)?;
            ul[k][s] = ul_rate(k, s, plan, alloc, irs, geom, angles, absorption, opts)?;
        }
    }
    Ok(RateTable { dl, ul })
}

/// Weighted minimum rate: `min over (k, direction)` of
/// `omega_{i,k} sum_s alpha_{k,s} R^i_{k,s}`.
///
/// `weights` is indexed `[direction][user]` with direction 0 = DL, 1 = UL.
pub fn wmr(alloc: &Allocation, weights: &[Vec<f64>; 2], rates: &RateTable) -> f64 {
    let mut best = f64::INFINITY;
    for (k, alpha_k) in alloc.alpha.iter().enumerate() {
        let dl_sum: f64 = alpha_k
            .iter()
            .zip(&rates.dl[k])
            .map(|(&a, &r)| a * r)
            .sum();
        let ul_sum: f64 = alpha_k
            .iter()
            .zip(&rates.ul[k])
            .map(|(&a, &r)| a * r)
            .sum();
        best = best.min(weights[0][k] * dl_sum).min(weights[1][k] * ul_sum);
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorption::AbsorptionFit;
    use crate::channel::angles_from_geometry;
    use crate::SPEED_OF_LIGHT;
    use approx::assert_abs_diff_eq;

    struct Fixture {
        geom: Geometry,
        angles: AngleSet,
        irs: IrsConfig,
        absorption: AbsorptionModel,
        plan: SubbandPlan,
    }

    fn fixture(nx: usize, ny: usize, subbands: usize) -> Fixture {
        let geom = Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -2.0],
            vec![[0.5, 4.0, -2.5], [-0.8, 3.5, -2.2]],
            0.4,
            vec![0.2, 0.2],
        )
        .unwrap();
        let angles = angles_from_geometry(&geom).unwrap();
        let fit = AbsorptionFit::new(-353.5359, 3.308222e-10, 0.1818).unwrap();
        let absorption = AbsorptionModel::fitted(fit, 1.035e12, 1.055e12).unwrap();
        let lambda_c = SPEED_OF_LIGHT / 1.045e12;
        let mut irs = IrsConfig::new(nx, ny, lambda_c);
        // A deterministic non-trivial phase profile.
        for (n, v) in irs.v.iter_mut().enumerate() {
            *v = num_complex::Complex64::from_polar(1.0, 0.37 * n as f64);
        }
        let usable = 20.0e9 - (subbands as f64 - 1.0) * 0.75e9;
        let b = usable / subbands as f64;
        let mut plan = SubbandPlan {
            bandwidth: vec![b; subbands],
            center: vec![0.0; subbands],
            guard: 0.75e9,
            f_start: 1.035e12,
            f_end: 1.055e12,
        };
        plan.center = plan.consistent_centers();
        Fixture {
            geom,
            angles,
            irs,
            absorption,
            plan,
        }
    }

    fn opts(gamma: f64) -> RateOptions {
        RateOptions::new(gamma, 3.98107170553497e-21).unwrap()
    }

    fn simple_alloc(fx: &Fixture) -> Allocation {
        let mut alloc = Allocation::zeros(fx.geom.num_users(), fx.plan.num_subbands());
        for s in 0..fx.plan.num_subbands() {
            let k = s % fx.geom.num_users();
            alloc.alpha[k][s] = 1.0;
            alloc.p[s] = 10.0 / fx.plan.num_subbands() as f64;
            alloc.q[k][s] = 1.0 / fx.plan.num_subbands() as f64;
            alloc.p_tilde[k][s] = alloc.p[s];
            alloc.q_tilde[k][s] = alloc.q[k][s];
        }
        alloc
    }

    #[test]
    fn zero_power_and_zero_bandwidth_give_zero() {
        let fx = fixture(2, 2, 2);
        let mut alloc = simple_alloc(&fx);
        alloc.p[0] = 0.0;
        let r = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &opts(0.0),
        )
        .unwrap();
        assert_eq!(r, 0.0);

        let mut plan = fx.plan.clone();
        plan.bandwidth[1] = 0.0;
        let alloc = simple_alloc(&fx);
        let r = ul_rate(
            1, 1, &plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &opts(0.0),
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn one_node_quadrature_equals_flat_center() {
        // Matched SINR convention on both sides.
        let fx = fixture(2, 2, 2);
        let alloc = simple_alloc(&fx);
        for &noise_ref in &[NoiseRef::Density, NoiseRef::BandAggregate] {
            let o_quad = opts(3.16227766016838e-7)
                .with_nodes(1)
                .with_noise_ref(noise_ref);
            let o_flat = opts(3.16227766016838e-7)
                .with_mode(RateMode::FlatCenter)
                .with_noise_ref(noise_ref);
            for (k, s) in [(0usize, 0usize), (1, 1)] {
                let a = dl_rate(
                    k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
                    &o_quad,
                )
                .unwrap();
                let b = dl_rate(
                    k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
                    &o_flat,
                )
                .unwrap();
                assert_abs_diff_eq!(a, b, epsilon = a.abs() * 1e-12);
                let au = ul_rate(
                    k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
                    &o_quad,
                )
                .unwrap();
                let bu = ul_rate(
                    k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
                    &o_flat,
                )
                .unwrap();
                assert_abs_diff_eq!(au, bu, epsilon = au.abs() * 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_converges_between_16_and_32_nodes() {
        let fx = fixture(3, 3, 2);
        let alloc = simple_alloc(&fx);
        for (k, s) in [(0usize, 0usize), (1, 1)] {
            let r16 = dl_rate(
                k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
                &opts(0.0).with_nodes(16),
            )
            .unwrap();
            let r32 = dl_rate(
                k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
                &opts(0.0).with_nodes(32),
            )
            .unwrap();
            assert!(((r16 - r32) / r32).abs() < 1e-6, "r16={r16} r32={r32}");
        }
    }

    #[test]
    fn flat_vs_quadrature_gap_within_one_percent() {
        // Validates the flat-channel assumption over the default window for
        // bandwidths up to 5 GHz (matched noise convention).
        let mut fx = fixture(3, 3, 1);
        fx.plan.bandwidth[0] = 5.0e9;
        fx.plan.center = fx.plan.consistent_centers();
        let alloc = {
            let mut a = Allocation::zeros(2, 1);
            a.alpha[0][0] = 1.0;
            a.p[0] = 10.0;
            a.q[0][0] = 1.0;
            a.p_tilde[0][0] = 10.0;
            a.q_tilde[0][0] = 1.0;
            a
        };
        let flat = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
            &opts(0.0).with_mode(RateMode::FlatCenter).with_noise_ref(NoiseRef::Density),
        )
        .unwrap();
        let quad = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
            &opts(0.0),
        )
        .unwrap();
        assert!(((flat - quad) / quad).abs() < 0.01, "flat={flat} quad={quad}");
    }

    #[test]
    fn jensen_requires_gamma_zero_and_dominates() {
        let fx = fixture(2, 2, 2);
        let alloc = simple_alloc(&fx);
        assert!(jensen_ub_dl(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption,
            &opts(1e-7),
        )
        .is_err());

        let o = opts(0.0);
        for (k, s) in [(0usize, 0usize), (1, 1)] {
            let ub = jensen_ub_dl(
                k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
            )
            .unwrap();
            let exact = dl_rate(
                k, s, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
            )
            .unwrap();
            assert!(ub >= exact - 1e-9, "jensen {ub} < exact {exact}");
        }

        // p_tilde = 0 -> zero bound.
        let mut a0 = simple_alloc(&fx);
        a0.p_tilde[0][0] = 0.0;
        assert_eq!(
            jensen_ub_dl(
                0, 0, &fx.plan, &a0, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn jensen_tight_for_single_node_flat_channel() {
        // With one quadrature node the integrand is constant, so the bound
        // coincides with the exact rate evaluated under the same rule.
        let fx = fixture(2, 2, 1);
        let alloc = {
            let mut a = Allocation::zeros(2, 1);
            a.alpha[0][0] = 1.0;
            a.p[0] = 4.0;
            a.p_tilde[0][0] = 4.0;
            a
        };
        // The bound's band-averaged SNR corresponds to the per-Hz (density)
        // convention of the rate integral.
        let o = opts(0.0).with_nodes(1).with_noise_ref(NoiseRef::Density);
        let ub = jensen_ub_dl(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
        )
        .unwrap();
        let exact = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
        )
        .unwrap();
        assert_abs_diff_eq!(ub, exact, epsilon = exact * 1e-12);
    }

    #[test]
    fn monotone_in_signal_and_interference_power() {
        let fx = fixture(2, 2, 2);
        let o = opts(3.16227766016838e-7);
        let mut alloc = simple_alloc(&fx);
        let base = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
        )
        .unwrap();
        alloc.p[0] *= 2.0;
        let more_signal = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
        )
        .unwrap();
        assert!(more_signal > base);
        alloc.p[0] /= 2.0;
        alloc.q[0][0] *= 10.0;
        let more_si = dl_rate(
            0, 0, &fx.plan, &alloc, &fx.irs, &fx.geom, &fx.angles, &fx.absorption, &o,
        )
        .unwrap();
        assert!(more_si < base);
    }

    #[test]
    fn wmr_hand_table() {
        // K = 2, S = 2 with a hand-built rate table.
        let mut alloc = Allocation::zeros(2, 2);
        alloc.alpha[0][0] = 1.0;
        alloc.alpha[1][1] = 1.0;
        let rates = RateTable {
            dl: vec![vec![10.0, 99.0], vec![99.0, 8.0]],
            ul: vec![vec![7.0, 99.0], vec![99.0, 12.0]],
        };
        let weights = [vec![1.0, 2.0], vec![3.0, 0.5]];
        // Weighted sums: DL user0 10, DL user1 16, UL user0 21, UL user1 6.
        let tau = wmr(&alloc, &weights, &rates);
        assert_abs_diff_eq!(tau, 6.0, epsilon = 1e-12);

        // All alpha = 0 -> 0.
        let alloc0 = Allocation::zeros(2, 2);
        assert_eq!(wmr(&alloc0, &weights, &rates), 0.0);

        // K = 1, single sub-band, omega = 1: min(dl, ul).
        let mut a1 = Allocation::zeros(1, 1);
        a1.alpha[0][0] = 1.0;
        let r1 = RateTable {
            dl: vec![vec![5.0]],
            ul: vec![vec![9.0]],
        };
        assert_abs_diff_eq!(
            wmr(&a1, &[vec![1.0], vec![1.0]], &r1),
            5.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn plan_consistency_checks() {
        let fx = fixture(2, 2, 6);
        assert!(fx.plan.is_consistent(1e-9));
        let mut bad = fx.plan.clone();
        bad.center[2] += 1e8;
        assert!(!bad.is_consistent(1e-9));
        let sum: f64 = fx.plan.bandwidth.iter().sum();
        assert_abs_diff_eq!(sum, fx.plan.usable_bandwidth(), epsilon = 1.0);
    }
}
