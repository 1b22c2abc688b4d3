//! Problem instances: geometry, RF and power constants, and seeded random
//! streams.
//!
//! A [`Scenario`] is immutable once validated. Everything random in a run
//! (GU placement, the frozen scattering draw, GA operators) is derived from
//! one master seed through labelled [`RngStream`]s, so a run is a pure
//! function of `(scenario, seed)`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

/// Center of the disk the ground users are dropped in, meters.
pub const GU_AREA_CENTER: Point = Point { x: 200.0, y: 25.0 };
/// Radius of the ground-user disk, meters.
pub const GU_AREA_RADIUS: f64 = 20.0;

/// Horizontal coordinates in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// One problem instance. Field names are the JSON schema keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub num_gus: usize,
    /// Empty until sampled; when non-empty, exactly `num_gus` entries.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gu_positions: Vec<Point>,
    pub ris_position: Point,
    pub ris_altitude: f64,
    pub uav_altitude: f64,
    pub uav_initial_position: Point,
    pub ris_rows: usize,
    pub ris_cols: usize,
    pub row_spacing: f64,
    pub col_spacing: f64,
    pub wavelength: f64,
    pub bandwidth: f64,
    pub ref_path_loss: f64,
    pub noise_power: f64,
    pub pathloss_exp_ug: f64,
    pub pathloss_exp_rg: f64,
    pub rician_ug: f64,
    pub rician_rg: f64,
    pub max_power: f64,
    pub min_rate: f64,
    pub gu_circuit_power: f64,
    pub ru_power: f64,
    pub drone_mass: f64,
    pub gravity: f64,
    pub prop_radius: f64,
    pub num_props: f64,
    pub air_density: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        default_scenario()
    }
}

/// Simulation defaults.
///
/// GU positions are left empty; draw them with [`sample_gu_positions`].
/// `noise_power` is not part of the published parameter table and defaults
/// to −110 dBm. Absolute energy-efficiency numbers scale with it.
pub fn default_scenario() -> Scenario {
    let (ris_rows, ris_cols) = factor_near_square(60);
    Scenario {
        num_gus: 4,
        gu_positions: Vec::new(),
        ris_position: Point::new(200.0, 0.0),
        ris_altitude: 40.0,
        uav_altitude: 70.0,
        uav_initial_position: Point::new(200.0, 50.0),
        ris_rows,
        ris_cols,
        row_spacing: 0.05,
        col_spacing: 0.05,
        wavelength: 0.1,
        bandwidth: 2.0e7,
        ref_path_loss: 1.0e-2,
        noise_power: 1.0e-14,
        pathloss_exp_ug: 3.0,
        pathloss_exp_rg: 2.4,
        rician_ug: 2.0,
        rician_rg: 2.0,
        max_power: 1.0,
        min_rate: 100.0,
        gu_circuit_power: 1.0e-3,
        ru_power: 1.0e-3,
        drone_mass: 2.0,
        gravity: 9.8,
        prop_radius: 0.2,
        num_props: 4.0,
        air_density: 1.225,
    }
}

impl Scenario {
    /// Number of reflecting elements, `ris_rows * ris_cols`.
    pub fn num_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    pub fn has_gu_positions(&self) -> bool {
        self.gu_positions.len() == self.num_gus
    }

    /// Sets the element count, factoring it as close to square as possible.
    pub fn set_num_elements(&mut self, m: usize) {
        let (r, c) = factor_near_square(m);
        self.ris_rows = r;
        self.ris_cols = c;
    }

    /// Rotor hovering power, watts. Assumes a validated scenario.
    pub fn hover_power(&self) -> f64 {
        hover_power_unchecked(
            self.drone_mass,
            self.gravity,
            self.prop_radius,
            self.num_props,
            self.air_density,
        )
    }

    /// Returns a copy with GU positions drawn from `rng` if they are absent
    /// or do not match `num_gus`.
    pub fn with_sampled_gus(&self, rng: &RngStream) -> Result<Scenario> {
        let mut out = self.clone();
        if !out.has_gu_positions() {
            out.gu_positions = sample_gu_positions(rng, out.num_gus)?;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidScenario {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        }
        fn non_negative(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidScenario {
                    field,
                    reason: format!("must be finite and >= 0, got {v}"),
                })
            }
        }
        fn finite_point(field: &'static str, p: &Point) -> Result<()> {
            if p.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidScenario {
                    field,
                    reason: format!("non-finite coordinate {p:?}"),
                })
            }
        }
        let count = |field: &'static str, v: usize| -> Result<()> {
            if v >= 1 {
                Ok(())
            } else {
                Err(Error::InvalidScenario {
                    field,
                    reason: "must be at least 1".into(),
                })
            }
        };

        count("num_gus", self.num_gus)?;
        // 0 x 0 means no surface at all.
        if self.ris_rows != 0 || self.ris_cols != 0 {
            count("ris_rows", self.ris_rows)?;
            count("ris_cols", self.ris_cols)?;
        }
        finite_point("ris_position", &self.ris_position)?;
        finite_point("uav_initial_position", &self.uav_initial_position)?;
        positive("ris_altitude", self.ris_altitude)?;
        positive("uav_altitude", self.uav_altitude)?;
        positive("row_spacing", self.row_spacing)?;
        positive("col_spacing", self.col_spacing)?;
        positive("wavelength", self.wavelength)?;
        positive("bandwidth", self.bandwidth)?;
        positive("ref_path_loss", self.ref_path_loss)?;
        positive("noise_power", self.noise_power)?;
        positive("pathloss_exp_ug", self.pathloss_exp_ug)?;
        positive("pathloss_exp_rg", self.pathloss_exp_rg)?;
        non_negative("rician_ug", self.rician_ug)?;
        non_negative("rician_rg", self.rician_rg)?;
        positive("max_power", self.max_power)?;
        non_negative("min_rate", self.min_rate)?;
        positive("gu_circuit_power", self.gu_circuit_power)?;
        positive("ru_power", self.ru_power)?;
        positive("drone_mass", self.drone_mass)?;
        positive("gravity", self.gravity)?;
        positive("prop_radius", self.prop_radius)?;
        positive("num_props", self.num_props)?;
        positive("air_density", self.air_density)?;

        if !self.gu_positions.is_empty() {
            if self.gu_positions.len() != self.num_gus {
                return Err(Error::InvalidScenario {
                    field: "gu_positions",
                    reason: format!(
                        "{} positions given for num_gus = {}",
                        self.gu_positions.len(),
                        self.num_gus
                    ),
                });
            }
            for (k, p) in self.gu_positions.iter().enumerate() {
                finite_point("gu_positions", p)?;
                if p.dist(&self.ris_position) <= 1e-9 {
                    return Err(Error::InvalidScenario {
                        field: "gu_positions",
                        reason: format!("GU {k} is horizontally coincident with the RIS"),
                    });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn hover_power_unchecked(
    mass: f64,
    gravity: f64,
    prop_radius: f64,
    num_props: f64,
    air_density: f64,
) -> f64 {
    let weight = mass * gravity;
    (weight.powi(3) / (2.0 * PI * prop_radius * prop_radius * num_props * air_density)).sqrt()
}

/// Factors `m` as `rows * cols` with `rows <= cols` and `rows` as large as
/// possible, e.g. 60 → (6, 10). Primes give `(1, m)`.
pub fn factor_near_square(m: usize) -> (usize, usize) {
    if m == 0 {
        return (0, 0);
    }
    let mut r = (m as f64).sqrt().floor() as usize;
    while r > 1 && !m.is_multiple_of(r) {
        r -= 1;
    }
    let r = r.max(1);
    (r, m / r)
}

/// A labelled, reproducible random stream derived from a master seed.
///
/// The generator seed is the SHA-256 of the seed bytes followed by the
/// label, so equal `(seed, label)` pairs give bit-identical sequences and
/// distinct labels give unrelated ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub label: String,
}

impl RngStream {
    pub fn new(master_seed: u64, label: impl Into<String>) -> Self {
        Self {
            master_seed,
            label: label.into(),
        }
    }

    /// A child stream labelled `"<label>/<tag>"`.
    pub fn substream(&self, tag: impl fmt::Display) -> RngStream {
        RngStream {
            master_seed: self.master_seed,
            label: format!("{}/{}", self.label, tag),
        }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update(self.label.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha12Rng::from_seed(seed)
    }
}

/// Draws `k` points uniformly by area over the GU disk.
pub fn sample_gu_positions(rng: &RngStream, k: usize) -> Result<Vec<Point>> {
    if k == 0 {
        return Err(invalid("number of GUs must be at least 1"));
    }
    let mut gen = rng.rng();
    Ok((0..k)
        .map(|_| {
            let r = GU_AREA_RADIUS * gen.random::<f64>().sqrt();
            let a = 2.0 * PI * gen.random::<f64>();
            Point::new(GU_AREA_CENTER.x + r * a.cos(), GU_AREA_CENTER.y + r * a.sin())
        })
        .collect())
}

/// Reads a JSON scenario; absent keys take their defaults, unknown keys are
/// rejected.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse { source, .. } => Error::Parse {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Like [`load_scenario`], from a string.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scn: Scenario = serde_json::from_str(text).map_err(|source| Error::Parse {
        path: "<string>".into(),
        source,
    })?;
    scn.validate()?;
    Ok(scn)
}
