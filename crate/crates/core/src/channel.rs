//! Channel gains of the three links and the effective UAV→GU channel.
//!
//! * UAV→GU: Rician scalar whose LOS part is the constant 1.
//! * UAV→RIS: pure LOS, free-space exponent 2, scaled planar-array steering
//!   vector.
//! * RIS→GU: Rician vector with a steering-vector LOS part.
//!
//! Scattering components are drawn once per run ([`ScatteringDraw`]) and
//! frozen, so channels are deterministic functions of the UAV position.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scenario::{Point, RngStream, Scenario};

pub type ComplexVec = Vec<Complex64>;

/// Tolerance on direction cosines before they are rejected.
const DIRECTION_TOL: f64 = 1e-9;

/// Euclidean distance between two points given as horizontal position and
/// altitude.
pub fn distance_3d(a: Point, a_alt: f64, b: Point, b_alt: f64) -> f64 {
    let dz = a_alt - b_alt;
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + dz * dz).sqrt()
}

/// Uniform planar array layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    pub row_spacing: f64,
    pub col_spacing: f64,
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn of(scn: &Scenario) -> Self {
        Self {
            rows: scn.ris_rows,
            cols: scn.ris_cols,
            row_spacing: scn.row_spacing,
            col_spacing: scn.col_spacing,
            wavelength: scn.wavelength,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Direction cosines of an arrival or departure: horizontal cosine,
/// horizontal sine, vertical sine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub phi: f64,
    pub varphi: f64,
    pub psi: f64,
}

/// Array response `a_rows ⊗ a_cols`, with the row factor first.
///
/// Entry `q * cols + p` is
/// `exp(−j·2π/λ·(d_r·q·φ·ψ + d_c·p·ϕ·ψ))`.
pub fn steering_vector(geom: &ArrayGeometry, dir: Direction) -> Result<ComplexVec> {
    for (name, v) in [("phi", dir.phi), ("varphi", dir.varphi), ("psi", dir.psi)] {
        if !v.is_finite() || v.abs() > 1.0 + DIRECTION_TOL {
            return Err(invalid(format!("direction cosine {name} = {v} outside [-1, 1]")));
        }
    }
    let row_step = -2.0 * PI * geom.row_spacing / geom.wavelength * dir.phi * dir.psi;
    let col_step = -2.0 * PI * geom.col_spacing / geom.wavelength * dir.varphi * dir.psi;
    let mut out = Vec::with_capacity(geom.len());
    for q in 0..geom.rows {
        let row = Complex64::from_polar(1.0, row_step * q as f64);
        for p in 0..geom.cols {
            out.push(row * Complex64::from_polar(1.0, col_step * p as f64));
        }
    }
    Ok(out)
}

/// Frozen small-scale fading: one `CN(0, 1)` scalar per GU for the direct
/// link and one `CN(0, I_M)` vector per GU for the RIS link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringDraw {
    pub direct: Vec<Complex64>,
    pub ris_gu: Vec<ComplexVec>,
}

impl ScatteringDraw {
    pub fn sample(rng: &RngStream, num_gus: usize, num_elements: usize) -> Self {
        let mut gen = rng.rng();
        let mut cn = || {
            let re: f64 = gen.sample(StandardNormal);
            let im: f64 = gen.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        };
        let direct = (0..num_gus).map(|_| cn()).collect();
        let ris_gu = (0..num_gus)
            .map(|_| (0..num_elements).map(|_| cn()).collect())
            .collect();
        Self { direct, ris_gu }
    }

    /// No scattering at all, leaving only the LOS parts.
    pub fn zeros(num_gus: usize, num_elements: usize) -> Self {
        Self {
            direct: vec![Complex64::new(0.0, 0.0); num_gus],
            ris_gu: vec![vec![Complex64::new(0.0, 0.0); num_elements]; num_gus],
        }
    }

    pub fn check_dims(&self, num_gus: usize, num_elements: usize) -> Result<()> {
        if self.direct.len() != num_gus
            || self.ris_gu.len() != num_gus
            || self.ris_gu.iter().any(|v| v.len() != num_elements)
        {
            return Err(invalid(format!(
                "scattering draw does not match K = {num_gus}, M = {num_elements}"
            )));
        }
        Ok(())
    }
}

fn gu_position(scn: &Scenario, k: usize) -> Result<Point> {
    if !scn.has_gu_positions() {
        return Err(invalid("scenario has no GU positions; sample them first"));
    }
    scn.gu_positions
        .get(k)
        .copied()
        .ok_or_else(|| invalid(format!("GU index {k} out of range")))
}

fn rician_weights(kappa: f64) -> (f64, f64) {
    ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
}

/// Direct UAV→GU channel `h_k^UG`.
pub fn channel_uav_gu(
    scn: &Scenario,
    w_u: Point,
    k: usize,
    scatter: &ScatteringDraw,
) -> Result<Complex64> {
    let gu = gu_position(scn, k)?;
    let d = distance_3d(w_u, scn.uav_altitude, gu, 0.0);
    if d <= 0.0 {
        return Err(Error::DegenerateGeometry(format!("UAV coincides with GU {k}")));
    }
    let hat = *scatter
        .direct
        .get(k)
        .ok_or_else(|| invalid(format!("no direct scattering term for GU {k}")))?;
    let amp = (scn.ref_path_loss / d.powf(scn.pathloss_exp_ug)).sqrt();
    let (los, nlos) = rician_weights(scn.rician_ug);
    Ok(amp * (Complex64::new(los, 0.0) + nlos * hat))
}

/// UAV→RIS channel `h^UR`.
pub fn channel_uav_ris(scn: &Scenario, w_u: Point) -> Result<ComplexVec> {
    let horiz = w_u.dist(&scn.ris_position);
    if horiz <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "UAV is horizontally coincident with the RIS".into(),
        ));
    }
    let d = distance_3d(w_u, scn.uav_altitude, scn.ris_position, scn.ris_altitude);
    let dir = Direction {
        phi: (w_u.y - scn.ris_position.y) / horiz,
        varphi: (scn.ris_position.x - w_u.x) / horiz,
        psi: (scn.uav_altitude - scn.ris_altitude) / d,
    };
    let amp = scn.ref_path_loss.sqrt() / d;
    let mut h = steering_vector(&ArrayGeometry::of(scn), dir)?;
    h.iter_mut().for_each(|e| *e *= amp);
    Ok(h)
}

/// RIS→GU channel `h_k^RG`.
pub fn channel_ris_gu(scn: &Scenario, k: usize, scatter: &ScatteringDraw) -> Result<ComplexVec> {
    let gu = gu_position(scn, k)?;
    let horiz = gu.dist(&scn.ris_position);
    if horiz <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "GU {k} is horizontally coincident with the RIS"
        )));
    }
    let d = distance_3d(gu, 0.0, scn.ris_position, scn.ris_altitude);
    let dir = Direction {
        phi: (gu.y - scn.ris_position.y) / horiz,
        varphi: (gu.x - scn.ris_position.x) / horiz,
        psi: scn.ris_altitude / d,
    };
    let hat = scatter
        .ris_gu
        .get(k)
        .ok_or_else(|| invalid(format!("no RIS scattering vector for GU {k}")))?;
    let los_vec = steering_vector(&ArrayGeometry::of(scn), dir)?;
    if hat.len() != los_vec.len() {
        return Err(invalid("RIS scattering vector length differs from M"));
    }
    let amp = (scn.ref_path_loss / d.powf(scn.pathloss_exp_rg)).sqrt();
    let (los, nlos) = rician_weights(scn.rician_rg);
    Ok(los_vec
        .iter()
        .zip(hat)
        .map(|(l, s)| amp * (los * l + nlos * s))
        .collect())
}

/// `C_k = h_ug + Σ_m conj(h_rg[m])·x_m·e^{jθ_m}·h_ur[m]`.
pub fn effective_channel(
    h_ug: Complex64,
    h_rg: &[Complex64],
    h_ur: &[Complex64],
    theta: &[f64],
    x: &[bool],
) -> Result<Complex64> {
    let m = h_ur.len();
    if h_rg.len() != m || theta.len() != m || x.len() != m {
        return Err(invalid(format!(
            "length mismatch: h_rg {}, h_ur {}, theta {}, x {}",
            h_rg.len(),
            m,
            theta.len(),
            x.len()
        )));
    }
    let reflected: Complex64 = h_rg
        .iter()
        .zip(h_ur)
        .zip(theta.iter().zip(x))
        .filter(|(_, (_, &on))| on)
        .map(|((rg, ur), (&t, _))| rg.conj() * Complex64::from_polar(1.0, t) * ur)
        .sum();
    Ok(h_ug + reflected)
}

/// All channel gains for one UAV position.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub direct: Vec<Complex64>,
    pub uav_ris: ComplexVec,
    pub ris_gu: Vec<ComplexVec>,
}

impl ChannelSet {
    pub fn build(scn: &Scenario, w_u: Point, scatter: &ScatteringDraw) -> Result<Self> {
        scatter.check_dims(scn.num_gus, scn.num_elements())?;
        let direct = (0..scn.num_gus)
            .map(|k| channel_uav_gu(scn, w_u, k, scatter))
            .collect::<Result<Vec<_>>>()?;
        let uav_ris = channel_uav_ris(scn, w_u)?;
        let ris_gu = (0..scn.num_gus)
            .map(|k| channel_ris_gu(scn, k, scatter))
            .collect::<Result<Vec<_>>>()?;
        let set = Self {
            direct,
            uav_ris,
            ris_gu,
        };
        let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        if !(set.direct.iter().all(finite)
            && set.uav_ris.iter().all(finite)
            && set.ris_gu.iter().flatten().all(finite))
        {
            return Err(Error::Numeric(format!("non-finite channel gain at {w_u:?}")));
        }
        Ok(set)
    }

    /// Per-GU cascade coefficients `conj(h_rg[k][m]) · h_ur[m]`.
    pub fn cascade(&self) -> Vec<ComplexVec> {
        self.ris_gu
            .iter()
            .map(|rg| rg.iter().zip(&self.uav_ris).map(|(r, u)| r.conj() * u).collect())
            .collect()
    }

    pub fn effective(&self, theta: &[f64], x: &[bool]) -> Result<Vec<Complex64>> {
        self.direct
            .iter()
            .zip(&self.ris_gu)
            .map(|(&ug, rg)| effective_channel(ug, rg, &self.uav_ris, theta, x))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one_gu_scenario(rows: usize, cols: usize) -> Scenario {
        let mut s = default_scenario();
        s.num_gus = 1;
        s.gu_positions = vec![Point::new(200.0, 25.0)];
        s.ris_rows = rows;
        s.ris_cols = cols;
        s
    }

    #[test]
    fn distances() {
        let d = distance_3d(Point::new(200.0, 50.0), 70.0, Point::new(200.0, 25.0), 0.0);
        assert_relative_eq!(d, 5525f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(d, 74.3303, max_relative = 1e-4);
        assert_eq!(distance_3d(Point::new(1.0, 2.0), 70.0, Point::new(1.0, 2.0), 0.0), 70.0);
        assert_eq!(distance_3d(Point::new(1.0, 2.0), 3.0, Point::new(1.0, 2.0), 3.0), 0.0);
    }

    #[test]
    fn steering_shapes() {
        let g = |rows, cols| ArrayGeometry {
            rows,
            cols,
            row_spacing: 0.05,
            col_spacing: 0.05,
            wavelength: 0.1,
        };
        let dir = Direction {
            phi: 0.3,
            varphi: -0.7,
            psi: 0.9,
        };
        assert_eq!(steering_vector(&g(1, 1), dir).unwrap(), vec![Complex64::new(1.0, 0.0)]);
        let v = steering_vector(&g(3, 4), dir).unwrap();
        assert_eq!(v.len(), 12);
        assert!(v.iter().all(|e| (e.norm() - 1.0).abs() < 1e-12));

        let v = steering_vector(
            &g(2, 1),
            Direction {
                phi: 1.0,
                varphi: 0.0,
                psi: 1.0,
            },
        )
        .unwrap();
        assert_relative_eq!(v[0].re, 1.0);
        assert_relative_eq!(v[1].re, -1.0, max_relative = 1e-12);
        assert!(v[1].im.abs() < 1e-12);
    }

    #[test]
    fn steering_kronecker_order() {
        let geom = ArrayGeometry {
            rows: 2,
            cols: 3,
            row_spacing: 0.05,
            col_spacing: 0.02,
            wavelength: 0.1,
        };
        let dir = Direction {
            phi: 0.5,
            varphi: 0.8,
            psi: 0.6,
        };
        let v = steering_vector(&geom, dir).unwrap();
        for q in 0..2 {
            for p in 0..3 {
                let phase = -2.0 * PI / 0.1 * (0.05 * q as f64 * 0.5 * 0.6 + 0.02 * p as f64 * 0.8 * 0.6);
                let e = v[q * 3 + p];
                assert_relative_eq!(e.arg(), Complex64::from_polar(1.0, phase).arg(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn steering_rejects_out_of_range() {
        let geom = ArrayGeometry::of(&default_scenario());
        let bad = Direction {
            phi: 1.01,
            varphi: 0.0,
            psi: 1.0,
        };
        assert!(steering_vector(&geom, bad).is_err());
        let ok = Direction {
            phi: 1.0 + 1e-10,
            varphi: 0.0,
            psi: 1.0,
        };
        assert!(steering_vector(&geom, ok).is_ok());
    }

    #[test]
    fn direct_channel_closed_forms() {
        // d = 100 directly: GU right below a UAV at 100 m.
        let mut s = one_gu_scenario(1, 1);
        s.uav_altitude = 100.0;
        let w = Point::new(200.0, 25.0);
        let zero = ScatteringDraw::zeros(1, 1);
        let h = channel_uav_gu(&s, w, 0, &zero).unwrap();
        assert_relative_eq!(h.re, (1e-2f64 / 1e6).sqrt() * (2.0f64 / 3.0).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(h.norm(), 8.165e-5, max_relative = 1e-4);
        assert_eq!(h.im, 0.0);

        // κ → ∞ leaves the pure LOS amplitude.
        s.rician_ug = 1e12;
        let mut scatter = ScatteringDraw::zeros(1, 1);
        scatter.direct[0] = Complex64::new(0.7, -0.3);
        let h = channel_uav_gu(&s, w, 0, &scatter).unwrap();
        assert_relative_eq!(h.norm(), 1e-4, max_relative = 1e-5);
    }

    #[test]
    fn uav_ris_magnitude() {
        let s = one_gu_scenario(6, 10);
        let h = channel_uav_ris(&s, Point::new(200.0, 50.0)).unwrap();
        let d = 3400f64.sqrt();
        assert_relative_eq!(d, 58.3095, max_relative = 1e-4);
        for e in &h {
            assert_relative_eq!(e.norm(), 0.1 / d, max_relative = 1e-12);
        }
        assert_relative_eq!(h[0].norm(), 1.7150e-3, max_relative = 1e-4);

        let single = channel_uav_ris(&one_gu_scenario(1, 1), Point::new(200.0, 50.0)).unwrap();
        assert_eq!(single.len(), 1);
        assert_relative_eq!(single[0].re, 0.1 / d, max_relative = 1e-12);
    }

    #[test]
    fn uav_over_ris_is_degenerate() {
        let s = one_gu_scenario(2, 2);
        assert!(matches!(
            channel_uav_ris(&s, s.ris_position),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn ris_gu_channel() {
        let s = one_gu_scenario(3, 4);
        let d = distance_3d(s.gu_positions[0], 0.0, s.ris_position, s.ris_altitude);
        assert_relative_eq!(d, 2225f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(d, 47.1699, max_relative = 1e-4);
        let h = channel_ris_gu(&s, 0, &ScatteringDraw::zeros(1, 12)).unwrap();
        let expected = (1e-2 / d.powf(2.4)).sqrt() * (2.0f64 / 3.0).sqrt();
        for e in &h {
            assert_relative_eq!(e.norm(), expected, max_relative = 1e-12);
        }
        let (l, n) = rician_weights(2.0);
        assert_relative_eq!(l * l + n * n, 1.0, max_relative = 1e-15);
        assert_relative_eq!(l, (2.0f64 / 3.0).sqrt());
        assert_relative_eq!(n, (1.0f64 / 3.0).sqrt());
    }

    #[test]
    fn ris_off_leaves_direct() {
        let h_ug = Complex64::new(1e-4, -2e-5);
        let rg = vec![Complex64::new(0.3, 0.1); 3];
        let ur = vec![Complex64::new(-0.2, 0.4); 3];
        let c = effective_channel(h_ug, &rg, &ur, &[0.1, 2.0, 4.0], &[false; 3]).unwrap();
        assert_eq!(c, h_ug);
    }

    #[test]
    fn single_element_expansion_and_alignment() {
        let h_ug = Complex64::new(1.0, 0.5);
        let rg = [Complex64::new(0.3, -0.2)];
        let ur = [Complex64::new(0.1, 0.4)];
        let t = 1.3;
        let c = effective_channel(h_ug, &rg, &ur, &[t], &[true]).unwrap();
        let expected = h_ug + rg[0].conj() * Complex64::from_polar(1.0, t) * ur[0];
        assert_relative_eq!(c.re, expected.re, max_relative = 1e-15);
        assert_relative_eq!(c.im, expected.im, max_relative = 1e-15);

        // Closed-form alignment vs. dense grid search.
        let aligned = (h_ug.arg() - (rg[0].conj() * ur[0]).arg()).rem_euclid(2.0 * PI);
        let c = effective_channel(h_ug, &rg, &ur, &[aligned], &[true]).unwrap();
        let bound = h_ug.norm() + rg[0].norm() * ur[0].norm();
        assert_relative_eq!(c.norm(), bound, max_relative = 1e-12);
        let grid_best = (0..100_000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 100_000.0;
                effective_channel(h_ug, &rg, &ur, &[t], &[true]).unwrap().norm()
            })
            .fold(0.0, f64::max);
        assert!(grid_best <= bound * (1.0 + 1e-12));
        assert_relative_eq!(grid_best, bound, max_relative = 1e-8);
    }

    #[test]
    fn effective_length_mismatch() {
        let v = vec![Complex64::new(1.0, 0.0); 2];
        assert!(effective_channel(v[0], &v, &v, &[0.0], &[true, true]).is_err());
        assert!(effective_channel(v[0], &v, &v[..1], &[0.0, 0.0], &[true, true]).is_err());
    }

    #[test]
    fn scattering_statistics() {
        let draw = ScatteringDraw::sample(&RngStream::new(5, "scatter"), 1, 20_000);
        let v = &draw.ris_gu[0];
        let n = v.len() as f64;
        let var_re = v.iter().map(|c| c.re * c.re).sum::<f64>() / n;
        let var_im = v.iter().map(|c| c.im * c.im).sum::<f64>() / n;
        assert!((var_re - 0.5).abs() < 0.03, "{var_re}");
        assert!((var_im - 0.5).abs() < 0.03, "{var_im}");
        assert_eq!(
            draw,
            ScatteringDraw::sample(&RngStream::new(5, "scatter"), 1, 20_000)
        );
    }

    #[test]
    fn scaling_laws() {
        let s = one_gu_scenario(2, 2);
        // Scale the UAV→RIS separation by 2 around the RIS.
        let base = Point::new(200.0, 30.0);
        let far = Point::new(200.0, 60.0);
        let mut s2 = s.clone();
        s2.uav_altitude = s.ris_altitude + 2.0 * (s.uav_altitude - s.ris_altitude);
        let near = channel_uav_ris(&s, base).unwrap();
        let doubled = channel_uav_ris(&s2, far).unwrap();
        assert_relative_eq!(doubled[0].norm(), near[0].norm() / 2.0, max_relative = 1e-12);
        assert_relative_eq!(doubled[0].norm_sqr(), near[0].norm_sqr() / 4.0, max_relative = 1e-12);

        let zero = ScatteringDraw::zeros(1, 4);
        let mut s3 = s.clone();
        s3.uav_altitude = 100.0;
        let over = Point::new(200.0, 25.0);
        let h1 = channel_uav_gu(&s3, over, 0, &zero).unwrap();
        s3.uav_altitude = 300.0;
        let h3 = channel_uav_gu(&s3, over, 0, &zero).unwrap();
        assert_relative_eq!(h3.norm() / h1.norm(), 3f64.powf(-1.5), max_relative = 1e-12);
    }

    fn arb_complex() -> impl Strategy<Value = Complex64> {
        (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
    }

    proptest! {
        #[test]
        fn off_element_equals_deleted(
            ug in arb_complex(),
            rg in proptest::collection::vec(arb_complex(), 1..8),
            ur_seed in proptest::collection::vec(arb_complex(), 8),
            theta in proptest::collection::vec(0.0..(2.0 * PI), 8),
            mask in proptest::collection::vec(any::<bool>(), 8),
        ) {
            let m = rg.len();
            let ur = &ur_seed[..m];
            let th = &theta[..m];
            let x = &mask[..m];
            let full = effective_channel(ug, &rg, ur, th, x).unwrap();
            let keep: Vec<usize> = (0..m).filter(|&i| x[i]).collect();
            let pick = |v: &[Complex64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
            let th_k: Vec<f64> = keep.iter().map(|&i| th[i]).collect();
            let reduced = effective_channel(ug, &pick(&rg), &pick(ur), &th_k, &vec![true; keep.len()]).unwrap();
            prop_assert!((full - reduced).norm() <= 1e-12 * (1.0 + full.norm()));
        }

        #[test]
        fn triangle_bound(
            ug in arb_complex(),
            rg in proptest::collection::vec(arb_complex(), 4),
            ur in proptest::collection::vec(arb_complex(), 4),
            theta in proptest::collection::vec(0.0..(2.0 * PI), 4),
        ) {
            let x = [true; 4];
            let bound = ug.norm() + rg.iter().zip(&ur).map(|(a, b)| a.norm() * b.norm()).sum::<f64>();
            let c = effective_channel(ug, &rg, &ur, &theta, &x).unwrap();
            prop_assert!(c.norm() <= bound * (1.0 + 1e-12));
            // Per-element alignment with the direct term attains the bound.
            let aligned: Vec<f64> = rg.iter().zip(&ur)
                .map(|(a, b)| (ug.arg() - (a.conj() * b).arg()).rem_euclid(2.0 * PI))
                .collect();
            let c = effective_channel(ug, &rg, &ur, &aligned, &x).unwrap();
            prop_assert!((c.norm() - bound).abs() <= 1e-12 * bound.max(1e-300));
        }
    }

    #[test]
    fn triangle_bound_vs_grid_search() {
        // Two elements, 256-point grid per element.
        let ug = Complex64::new(0.4, -0.1);
        let rg = [Complex64::new(0.2, 0.3), Complex64::new(-0.5, 0.1)];
        let ur = [Complex64::new(0.6, -0.2), Complex64::new(0.1, 0.7)];
        let bound = ug.norm() + rg.iter().zip(&ur).map(|(a, b)| a.norm() * b.norm()).sum::<f64>();
        let n = 256;
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let th = [2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64];
                best = best.max(effective_channel(ug, &rg, &ur, &th, &[true, true]).unwrap().norm());
            }
        }
        assert!(best <= bound);
        assert!(best > bound * 0.999);
    }

    #[test]
    fn channel_set_deterministic_and_consistent() {
        let mut s = default_scenario();
        s.ris_rows = 2;
        s.ris_cols = 3;
        let s = s.with_sampled_gus(&RngStream::new(9, "gus")).unwrap();
        let scatter = ScatteringDraw::sample(&RngStream::new(9, "scatter"), s.num_gus, 6);
        let w = Point::new(195.0, 40.0);
        let a = ChannelSet::build(&s, w, &scatter).unwrap();
        let b = ChannelSet::build(&s, w, &scatter).unwrap();
        assert_eq!(a, b);
        let mag = a.uav_ris[0].norm();
        assert!(a.uav_ris.iter().all(|e| (e.norm() - mag).abs() < 1e-15));

        let theta = [0.1, 0.9, 2.0, 3.3, 4.4, 6.0];
        let x = [true, false, true, true, false, true];
        let cascade = a.cascade();
        let eff = a.effective(&theta, &x).unwrap();
        for k in 0..s.num_gus {
            let via_cascade: Complex64 = a.direct[k]
                + (0..6)
                    .filter(|&m| x[m])
                    .map(|m| cascade[k][m] * Complex64::from_polar(1.0, theta[m]))
                    .sum::<Complex64>();
            assert!((via_cascade - eff[k]).norm() <= 1e-15 * eff[k].norm().max(1e-20) * 10.0);
        }
    }
}
