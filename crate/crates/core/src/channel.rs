//! Geometry-driven synthesis of the frequency-dependent channels.
//!
//! All links are line-of-sight through the reflecting surface: BS <-> IRS,
//! IRS <-> user cascades, and the loop self-interference channel of each
//! transceiver. The IRS local frame has boresight along +y and the array in
//! the x-z plane: element columns advance along x, rows along z.

use num_complex::Complex64;

use crate::absorption::AbsorptionModel;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Link direction of a cascade channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Downlink,
    Uplink,
}

/// Node positions and derived link distances / antenna spacings.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub irs_pos: [f64; 3],
    pub bs_pos: [f64; 3],
    pub user_pos: Vec<[f64; 3]>,
    /// BS-IRS distance, m.
    pub d_r: f64,
    /// IRS-user distances, m.
    pub d_k: Vec<f64>,
    /// BS antenna spacing, m.
    pub d0: f64,
    /// Per-user antenna spacing, m.
    pub d0k: Vec<f64>,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

impl Geometry {
    pub fn new(
        irs_pos: [f64; 3],
        bs_pos: [f64; 3],
        user_pos: Vec<[f64; 3]>,
        d0: f64,
        d0k: Vec<f64>,
    ) -> Result<Self> {
        if user_pos.is_empty() {
            return Err(Error::config("geometry needs at least one user".to_string()));
        }
        if d0k.len() != user_pos.len() {
            return Err(Error::config(format!(
                "antenna spacing count {} does not match user count {}",
                d0k.len(),
                user_pos.len()
            )));
        }
        if !(d0 > 0.0) || d0k.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::domain("antenna spacings must be positive".to_string()));
        }
        let d_r = dist(bs_pos, irs_pos);
        let d_k: Vec<f64> = user_pos.iter().map(|&p| dist(p, irs_pos)).collect();
        if !(d_r > 0.0) || d_k.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Geometry(
                "a node coincides with the IRS position".to_string(),
            ));
        }
        Ok(Geometry {
            irs_pos,
            bs_pos,
            user_pos,
            d_r,
            d_k,
            d0,
            d0k,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_pos.len()
    }

    /// Checks stored distances against positions (1e-12 relative).
    pub fn validate(&self) -> Result<()> {
        let d_r = dist(self.bs_pos, self.irs_pos);
        if ((d_r - self.d_r) / d_r).abs() > 1e-12 {
            return Err(Error::Geometry("stored d_r inconsistent".to_string()));
        }
        for (k, &p) in self.user_pos.iter().enumerate() {
            let d = dist(p, self.irs_pos);
            if ((d - self.d_k[k]) / d).abs() > 1e-12 {
                return Err(Error::Geometry(format!("stored d_k[{k}] inconsistent")));
            }
        }
        Ok(())
    }
}

/// Azimuth/elevation pair in the IRS local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    /// Azimuth in [-pi/2, pi/2], measured from the +y boresight toward +x.
    pub psi: f64,
    /// Elevation (polar angle from +z) in [0, pi].
    pub phi: f64,
}

/// Arrival/departure angles for every link. Reciprocal links share angles.
#[derive(Debug, Clone)]
pub struct AngleSet {
    /// BS -> IRS arrival (equals IRS -> BS departure).
    pub bs: Angles,
    /// IRS -> user-k departure (equals user-k -> IRS arrival).
    pub users: Vec<Angles>,
}

/// Computes link angles from positions in the IRS local frame.
pub fn angles_from_geometry(geom: &Geometry) -> Result<AngleSet> {
    let to_angles = |p: [f64; 3], what: &str| -> Result<Angles> {
        let v = [
            p[0] - geom.irs_pos[0],
            p[1] - geom.irs_pos[1],
            p[2] - geom.irs_pos[2],
        ];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r < 1e-12 {
            return Err(Error::Geometry(format!("{what} coincides with the IRS")));
        }
        let phi = (v[2] / r).clamp(-1.0, 1.0).acos();
        // Degenerate azimuth on the z-axis: fix psi = 0.
        let psi = if v[0].abs() < 1e-15 && v[1].abs() < 1e-15 {
            0.0
        } else {
            v[0].atan2(v[1])
        };
        if psi.abs() > std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::Geometry(format!(
                "{what} lies behind the reflecting surface (psi = {psi:.3})"
            )));
        }
        Ok(Angles { psi, phi })
    };
    let bs = to_angles(geom.bs_pos, "BS")?;
    let users = geom
        .user_pos
        .iter()
        .enumerate()
        .map(|(k, &p)| to_angles(p, &format!("user {k}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleSet { bs, users })
}

/// IRS array description and phase-shift vector.
#[derive(Debug, Clone)]
pub struct IrsConfig {
    pub nx: usize,
    pub ny: usize,
    /// Element spacing, m.
    pub delta_d: f64,
    /// Reference carrier wavelength, m.
    pub lambda_c: f64,
    /// Phase-shift vector, length `nx * ny`. Unit modulus after
    /// reconstruction; relaxed iterates may have `|v_n| <= 1`.
    pub v: Vec<Complex64>,
}

impl IrsConfig {
    /// All-ones phase configuration with half-wavelength spacing.
    pub fn new(nx: usize, ny: usize, lambda_c: f64) -> Self {
        IrsConfig {
            nx,
            ny,
            delta_d: lambda_c / 2.0,
            lambda_c,
            v: vec![Complex64::new(1.0, 0.0); nx * ny],
        }
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }
}

/// UPA steering vector for azimuth `psi`, elevation `phi` at frequency `f`.
///
/// Entry `(ix * ny + iy)` carries the phase
/// `2 pi delta_d (f/c) (ix sin(psi) sin(phi) + iy cos(phi))`
/// with 0-based element indices, i.e. the Kronecker product of the x- and
/// z-axis linear arrays.
pub fn steering_vector(f: f64, psi: f64, phi: f64, irs: &IrsConfig) -> Vec<Complex64> {
    let base = 2.0 * std::f64::consts::PI * irs.delta_d * f / SPEED_OF_LIGHT;
    let gx = base * psi.sin() * phi.sin();
    let gz = base * phi.cos();
    let mut out = Vec::with_capacity(irs.num_elements());
    for ix in 0..irs.nx {
        let px = gx * ix as f64;
        for iy in 0..irs.ny {
            let phase = px + gz * iy as f64;
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    out
}

/// Per-element geometric phase slopes of a cascade channel.
///
/// The n-th cascade entry has phase `+/- pi f lambda_c delta_n / c` (up to
/// the sign convention of the direction); `delta_n` combines the x and z
/// steering differences of the two hops. Used by the frequency-surrogate
/// machinery.
pub fn cascade_phase_slopes(node: Angles, bs: Angles, irs: &IrsConfig) -> Vec<f64> {
    // 2 delta_d / lambda_c = 1 for half-wavelength spacing; keep it general.
    let scale = 2.0 * irs.delta_d / irs.lambda_c;
    let dx = scale * (node.psi.sin() * node.phi.sin() - bs.psi.sin() * bs.phi.sin());
    let dz = scale * (node.phi.cos() - bs.phi.cos());
    let mut out = Vec::with_capacity(irs.num_elements());
    for ix in 0..irs.nx {
        for iy in 0..irs.ny {
            out.push(ix as f64 * dx + iy as f64 * dz);
        }
    }
    out
}

/// Element-wise cascade channel `h_hat` with its evaluation context.
#[derive(Debug, Clone)]
pub struct CascadeChannel {
    pub h_hat: Vec<Complex64>,
    pub freq: f64,
    pub direction: Direction,
    pub user: usize,
}

fn cascade(
    geom: &Geometry,
    angles: &AngleSet,
    irs: &IrsConfig,
    absorption: &AbsorptionModel,
    k: usize,
    f: f64,
    direction: Direction,
) -> Result<CascadeChannel> {
    if k >= geom.num_users() {
        return Err(Error::domain(format!("user index {k} out of range")));
    }
    let d_k = geom.d_k[k];
    let amp = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f)).powi(2)
        / (geom.d_r * d_k)
        * absorption.amplitude(f, geom.d_r + d_k)?;
    let a_user = steering_vector(f, angles.users[k].psi, angles.users[k].phi, irs);
    let a_bs = steering_vector(f, angles.bs.psi, angles.bs.phi, irs);
    // DL: h_hat^H = h_k^{rH} diag(g^t), so h_hat_n = amp * a_user_n * conj(a_bs_n).
    // UL mirrors it with the roles of the hops swapped (reciprocal angles),
    // giving the conjugate phase pattern with identical magnitudes.
    let h_hat: Vec<Complex64> = a_user
        .iter()
        .zip(&a_bs)
        .map(|(&au, &ab)| {
            let prod = au * ab.conj();
            match direction {
                Direction::Downlink => amp * prod,
                Direction::Uplink => amp * prod.conj(),
            }
        })
        .collect();
    Ok(CascadeChannel {
        h_hat,
        freq: f,
        direction,
        user: k,
    })
}

/// Downlink cascade `h_hat_k(f)` (BS -> IRS -> user k).
pub fn cascade_dl(
    geom: &Geometry,
    angles: &AngleSet,
    irs: &IrsConfig,
    absorption: &AbsorptionModel,
    k: usize,
    f: f64,
) -> Result<CascadeChannel> {
    cascade(geom, angles, irs, absorption, k, f, Direction::Downlink)
}

/// Uplink cascade `g_hat_k(f)` (user k -> IRS -> BS).
pub fn cascade_ul(
    geom: &Geometry,
    angles: &AngleSet,
    irs: &IrsConfig,
    absorption: &AbsorptionModel,
    k: usize,
    f: f64,
) -> Result<CascadeChannel> {
    cascade(geom, angles, irs, absorption, k, f, Direction::Uplink)
}

/// Loop self-interference power gain of a transceiver with antenna
/// spacing `d`: `(c / (4 pi f d))^2 * exp(-kappa(f) d)`.
///
/// The free-space factor is the small-wavelength approximation of the LSI
/// path gain; the absorption amplitude is squared over the round-trip
/// equivalent distance `2 d`.
pub fn lsi_gain(f: f64, d: f64, absorption: &AbsorptionModel) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!(
            "LSI antenna spacing must be positive, got {d}"
        )));
    }
    let fs = (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f * d)).powi(2);
    Ok(fs * (-absorption.kappa(f)? * d).exp())
}

/// Full-series LSI path gain `(1/4)(x^-2 - x^-4 + x^-6)`, `x = 2 pi d / lambda`.
/// Used to validate the small-wavelength approximation.
pub fn lsi_path_gain_full(f: f64, d: f64) -> f64 {
    let x = 2.0 * std::f64::consts::PI * d * f / SPEED_OF_LIGHT;
    0.25 * (x.powi(-2) - x.powi(-4) + x.powi(-6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absorption::AbsorptionFit;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

    fn no_absorption() -> AbsorptionModel {
        let fit = AbsorptionFit::new(-800.0, 0.0, 0.0).unwrap();
        AbsorptionModel::fitted(fit, 1.0, 1e14).unwrap()
    }

    fn window_absorption() -> AbsorptionModel {
        let fit = AbsorptionFit::new(-353.5359, 3.308222e-10, 0.1818).unwrap();
        AbsorptionModel::fitted(fit, 1.035e12, 1.055e12).unwrap()
    }

    fn test_geometry() -> Geometry {
        Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -2.0],
            vec![[0.5, 4.0, -2.5], [-1.0, 3.0, -2.0]],
            0.4,
            vec![0.2, 0.2],
        )
        .unwrap()
    }

    #[test]
    fn boresight_steering_is_all_ones() {
        let irs = IrsConfig::new(3, 3, 3e-4);
        let a = steering_vector(1e12, 0.0, FRAC_PI_2, &irs);
        for entry in a {
            assert_abs_diff_eq!(entry.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(entry.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_entries_unit_modulus() {
        let irs = IrsConfig::new(4, 5, 2.9e-4);
        for &(psi, phi) in &[(0.3, 1.1), (-1.2, 2.9), (1.5, 0.2)] {
            let a = steering_vector(9.7e11, psi, phi, &irs);
            for entry in a {
                assert!((entry.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn steering_matches_per_element_formula() {
        let lambda_c = SPEED_OF_LIGHT / 1e12;
        let irs = IrsConfig::new(2, 2, lambda_c);
        let (f, psi, phi) = (1e12, FRAC_PI_6, FRAC_PI_3);
        let a = steering_vector(f, psi, phi, &irs);
        for ix in 0..2usize {
            for iy in 0..2usize {
                let phase = 2.0 * PI * irs.delta_d * f / SPEED_OF_LIGHT
                    * (ix as f64 * psi.sin() * phi.sin() + iy as f64 * phi.cos());
                let expect = Complex64::from_polar(1.0, phase);
                let got = a[ix * 2 + iy];
                assert_abs_diff_eq!(got.re, expect.re, epsilon = 1e-12);
                assert_abs_diff_eq!(got.im, expect.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn angle_conventions() {
        let geom = test_geometry();
        let angles = angles_from_geometry(&geom).unwrap();
        // BS straight below the IRS: elevation pi, azimuth fixed to 0.
        assert_abs_diff_eq!(angles.bs.phi, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(angles.bs.psi, 0.0, epsilon = 1e-12);

        // User on the boresight at the same height: psi = 0.
        let geom2 = Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -2.0],
            vec![[0.0, 4.0, 0.0]],
            0.4,
            vec![0.2],
        )
        .unwrap();
        let a2 = angles_from_geometry(&geom2).unwrap();
        assert_abs_diff_eq!(a2.users[0].psi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a2.users[0].phi, FRAC_PI_2, epsilon = 1e-12);

        // Mirrored users (+/- x) get opposite azimuths.
        let geom3 = Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -2.0],
            vec![[1.5, 4.0, -2.5], [-1.5, 4.0, -2.5]],
            0.4,
            vec![0.2, 0.2],
        )
        .unwrap();
        let a3 = angles_from_geometry(&geom3).unwrap();
        assert_abs_diff_eq!(a3.users[0].psi, -a3.users[1].psi, epsilon = 1e-12);
    }

    #[test]
    fn coincident_and_behind_positions_rejected() {
        assert!(Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0],
            vec![[0.0, 4.0, 0.0]],
            0.4,
            vec![0.2]
        )
        .is_err());
        // Behind the surface: y < 0 with |psi| > pi/2.
        let geom = Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 0.0, -2.0],
            vec![[0.5, -4.0, 0.0]],
            0.4,
            vec![0.2],
        )
        .unwrap();
        assert!(angles_from_geometry(&geom).is_err());
    }

    #[test]
    fn cascade_magnitude_law() {
        let geom = test_geometry();
        let angles = angles_from_geometry(&geom).unwrap();
        let abs = window_absorption();
        let lambda_c = SPEED_OF_LIGHT / 1.045e12;
        let irs = IrsConfig::new(2, 2, lambda_c);
        let f = 1.045e12;
        let ch = cascade_dl(&geom, &angles, &irs, &abs, 0, f).unwrap();
        let expect = (SPEED_OF_LIGHT / (4.0 * PI * f)).powi(2) / (geom.d_r * geom.d_k[0])
            * abs.amplitude(f, geom.d_r + geom.d_k[0]).unwrap();
        for entry in &ch.h_hat {
            assert_abs_diff_eq!(entry.norm(), expect, epsilon = expect * 1e-12);
        }
    }

    #[test]
    fn cascade_unit_gain_normalization() {
        // kappa = 0, d_r = d_k = 1, f = c/(4 pi): per-entry magnitude 1.
        let geom = Geometry::new(
            [0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            vec![[0.0, 0.6, 0.8]],
            0.4,
            vec![0.2],
        )
        .unwrap();
        let angles = angles_from_geometry(&geom).unwrap();
        let abs = no_absorption();
        let f = SPEED_OF_LIGHT / (4.0 * PI);
        let irs = IrsConfig::new(2, 1, SPEED_OF_LIGHT / f);
        let ch = cascade_dl(&geom, &angles, &irs, &abs, 0, f).unwrap();
        for entry in &ch.h_hat {
            assert_abs_diff_eq!(entry.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cascade_matches_elementwise_product_oracle() {
        let geom = test_geometry();
        let angles = angles_from_geometry(&geom).unwrap();
        let abs = window_absorption();
        let f = 1.04e12;
        let irs = IrsConfig::new(2, 2, SPEED_OF_LIGHT / 1.045e12);
        let ch = cascade_dl(&geom, &angles, &irs, &abs, 1, f).unwrap();

        // Brute-force oracle: build the two hop channels separately and take
        // the element-wise product conj(g^t) .* h^r.
        let amp_hop = |d: f64| {
            SPEED_OF_LIGHT / (4.0 * PI * f * d) * abs.amplitude(f, d).unwrap()
        };
        let a_user = steering_vector(f, angles.users[1].psi, angles.users[1].phi, &irs);
        let a_bs = steering_vector(f, angles.bs.psi, angles.bs.phi, &irs);
        for n in 0..irs.num_elements() {
            let h_r = amp_hop(geom.d_k[1]) * a_user[n];
            let g_t = amp_hop(geom.d_r) * a_bs[n];
            let expect = h_r * g_t.conj();
            assert_abs_diff_eq!(ch.h_hat[n].re, expect.re, epsilon = 1e-24);
            assert_abs_diff_eq!(ch.h_hat[n].im, expect.im, epsilon = 1e-24);
        }
    }

    #[test]
    fn uplink_mirrors_downlink_magnitudes() {
        let geom = test_geometry();
        let angles = angles_from_geometry(&geom).unwrap();
        let abs = window_absorption();
        let irs = IrsConfig::new(3, 2, SPEED_OF_LIGHT / 1.045e12);
        let dl = cascade_dl(&geom, &angles, &irs, &abs, 0, 1.05e12).unwrap();
        let ul = cascade_ul(&geom, &angles, &irs, &abs, 0, 1.05e12).unwrap();
        for (a, b) in dl.h_hat.iter().zip(&ul.h_hat) {
            assert_abs_diff_eq!(a.norm(), b.norm(), epsilon = a.norm() * 1e-12);
        }
    }

    #[test]
    fn frequency_scaling_inverse_square() {
        let geom = test_geometry();
        let angles = angles_from_geometry(&geom).unwrap();
        let abs = no_absorption();
        let irs = IrsConfig::new(2, 2, 3e-4);
        let rho = 2.5;
        let f = 8e11;
        let a = cascade_dl(&geom, &angles, &irs, &abs, 0, f).unwrap();
        let b = cascade_dl(&geom, &angles, &irs, &abs, 0, rho * f).unwrap();
        for (x, y) in a.h_hat.iter().zip(&b.h_hat) {
            assert_abs_diff_eq!(
                y.norm() * rho * rho,
                x.norm(),
                epsilon = x.norm() * 1e-12
            );
        }
    }

    #[test]
    fn lsi_gain_examples() {
        let abs = no_absorption();
        // kappa = 0, f = c/(4 pi), d = 1 -> gain 1.
        let f = SPEED_OF_LIGHT / (4.0 * PI);
        assert_abs_diff_eq!(lsi_gain(f, 1.0, &abs).unwrap(), 1.0, epsilon = 1e-12);
        // Doubling d divides the gain by 4.
        let g1 = lsi_gain(f, 1.0, &abs).unwrap();
        let g2 = lsi_gain(f, 2.0, &abs).unwrap();
        assert_abs_diff_eq!(g1 / g2, 4.0, epsilon = 1e-12);
        assert!(lsi_gain(f, 0.0, &abs).is_err());

        // Direct formula at the default scenario's user spacing.
        let abs_w = window_absorption();
        let f = 1.045e12;
        let d = 0.2;
        let expect = (SPEED_OF_LIGHT / (4.0 * PI * f * d)).powi(2)
            * (-abs_w.kappa(f).unwrap() * d).exp();
        assert_abs_diff_eq!(
            lsi_gain(f, d, &abs_w).unwrap(),
            expect,
            epsilon = expect * 1e-12
        );
    }

    #[test]
    fn lsi_small_wavelength_approximation_valid() {
        // The dropped -x^-4 + x^-6 corrections stay below 0.1% relative for
        // d >= 0.2 m, f >= 1 THz.
        for &d in &[0.2, 0.4, 1.0] {
            for i in 0..50 {
                let f = 1.0e12 + 2.0e10 * i as f64;
                let x = 2.0 * PI * d * f / SPEED_OF_LIGHT;
                let approx_gain = 0.25 / (x * x);
                let full = lsi_path_gain_full(f, d);
                assert!(
                    ((full - approx_gain) / full).abs() < 1e-3,
                    "approximation off at d={d}, f={f}"
                );
            }
        }
    }

    #[test]
    fn geometry_validate_detects_tampering() {
        let mut geom = test_geometry();
        geom.validate().unwrap();
        geom.d_k[0] *= 1.0 + 1e-9;
        assert!(geom.validate().is_err());
    }
}
