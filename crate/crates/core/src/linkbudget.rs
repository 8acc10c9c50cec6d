//! Closed-form Friis transmission chain.
//!
//! All power math is done in linear watts; decibels appear only in
//! [`path_loss_db`] and [`watts_to_dbm`], which exist for presentation.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Speed of light in vacuum, m/s (exact by SI definition).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Scenario frequency used when none is given: mid-band 5G.
pub const DEFAULT_FREQUENCY_HZ: f64 = 3.5e9;

/// Peak directivity of a thin half-wave dipole, `4 / Cin(2π)`.
///
/// The rounded textbook figure 1.643 over-normalizes the pattern by 0.13 %;
/// this value makes the pattern integrate to exactly 4π.
pub const HALF_WAVE_DIPOLE_PEAK: f64 = 1.640_922_376_984_585;

const UNIT_NORM_TOL: f64 = 1e-9;

/// Direction in antenna coordinates: polar angle from boresight and azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// Polar angle θ in radians, `[0, π]`.
    pub theta: f64,
    /// Azimuth φ in radians, `[0, 2π)`.
    pub phi: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction {
        theta: 0.0,
        phi: 0.0,
    };
    pub const BROADSIDE: Direction = Direction {
        theta: PI / 2.0,
        phi: 0.0,
    };

    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let d = Direction { theta, phi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(domain(format!("theta {} outside [0, pi]", self.theta)));
        }
        if !(0.0..2.0 * PI).contains(&self.phi) {
            return Err(domain(format!("phi {} outside [0, 2pi)", self.phi)));
        }
        Ok(())
    }
}

impl Default for Direction {
    fn default() -> Self {
        Direction::BORESIGHT
    }
}

/// Directivity model of an antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Pattern {
    Isotropic,
    /// Thin half-wave dipole with its axis along θ = 0.
    HalfWaveDipole,
    /// Azimuth-symmetric beam, `D(θ) = D0·exp(−4·ln2·(θ/HPBW)²)`.
    GaussianBeam {
        boresight_directivity: f64,
        hpbw_deg: f64,
    },
}

impl Pattern {
    /// Directivity D(θ, φ), dimensionless.
    pub fn directivity(&self, dir: Direction) -> f64 {
        match *self {
            Pattern::Isotropic => 1.0,
            Pattern::HalfWaveDipole => {
                let s = dir.theta.sin();
                if s.abs() < 1e-12 {
                    return 0.0;
                }
                let f = (PI / 2.0 * dir.theta.cos()).cos() / s;
                HALF_WAVE_DIPOLE_PEAK * f * f
            }
            Pattern::GaussianBeam {
                boresight_directivity,
                hpbw_deg,
            } => {
                let x = dir.theta / hpbw_deg.to_radians();
                boresight_directivity * (-4.0 * std::f64::consts::LN_2 * x * x).exp()
            }
        }
    }

    /// Direction of maximum directivity.
    pub fn peak_direction(&self) -> Direction {
        match self {
            Pattern::HalfWaveDipole => Direction::BROADSIDE,
            Pattern::Isotropic | Pattern::GaussianBeam { .. } => Direction::BORESIGHT,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Pattern::GaussianBeam {
            boresight_directivity,
            hpbw_deg,
        } = *self
        {
            if !(boresight_directivity.is_finite() && boresight_directivity >= 0.0) {
                return Err(domain("gaussian beam directivity must be finite and >= 0"));
            }
            if !(hpbw_deg.is_finite() && hpbw_deg > 0.0) {
                return Err(domain("gaussian beam HPBW must be positive"));
            }
        }
        Ok(())
    }
}

/// Unit-norm Jones vector `(x, y)` describing a wave's polarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolarizationRepr", into = "PolarizationRepr")]
pub struct Polarization {
    x: Complex64,
    y: Complex64,
}

impl Polarization {
    pub fn new(x: Complex64, y: Complex64) -> Result<Self> {
        let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(domain(format!("polarization vector norm {norm} is not 1")));
        }
        Ok(Polarization { x, y })
    }

    pub fn horizontal() -> Self {
        Polarization {
            x: Complex64::new(1.0, 0.0),
            y: Complex64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Polarization {
            x: Complex64::new(0.0, 0.0),
            y: Complex64::new(1.0, 0.0),
        }
    }

    pub fn slant45() -> Self {
        Polarization {
            x: Complex64::new(FRAC_1_SQRT_2, 0.0),
            y: Complex64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    pub fn rhcp() -> Self {
        Polarization {
            x: Complex64::new(FRAC_1_SQRT_2, 0.0),
            y: Complex64::new(0.0, -FRAC_1_SQRT_2),
        }
    }

    pub fn lhcp() -> Self {
        Polarization {
            x: Complex64::new(FRAC_1_SQRT_2, 0.0),
            y: Complex64::new(0.0, FRAC_1_SQRT_2),
        }
    }

    /// Looks up a named preset: horizontal, vertical, slant45, rhcp, lhcp.
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "horizontal" | "h" => Ok(Self::horizontal()),
            "vertical" | "v" => Ok(Self::vertical()),
            "slant45" => Ok(Self::slant45()),
            "rhcp" => Ok(Self::rhcp()),
            "lhcp" => Ok(Self::lhcp()),
            other => Err(domain(format!("unknown polarization preset '{other}'"))),
        }
    }

    pub fn components(&self) -> (Complex64, Complex64) {
        (self.x, self.y)
    }
}

impl Default for Polarization {
    fn default() -> Self {
        Polarization::vertical()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolarizationRepr {
    Preset(String),
    Components { x: [f64; 2], y: [f64; 2] },
}

impl TryFrom<PolarizationRepr> for Polarization {
    type Error = crate::Error;

    fn try_from(repr: PolarizationRepr) -> Result<Self> {
        match repr {
            PolarizationRepr::Preset(name) => Polarization::preset(&name),
            PolarizationRepr::Components { x, y } => {
                Polarization::new(Complex64::new(x[0], x[1]), Complex64::new(y[0], y[1]))
            }
        }
    }
}

impl From<Polarization> for PolarizationRepr {
    fn from(p: Polarization) -> Self {
        PolarizationRepr::Components {
            x: [p.x.re, p.x.im],
            y: [p.y.re, p.y.im],
        }
    }
}

/// Everything the link budget needs to know about one antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaSpec {
    pub pattern: Pattern,
    /// Radiation efficiency e in (0, 1].
    #[serde(default = "one")]
    pub radiation_efficiency: f64,
    /// Feed-line efficiency e_TL in (0, 1].
    #[serde(default = "one")]
    pub feedline_efficiency: f64,
    #[serde(default)]
    pub polarization: Polarization,
    /// Largest physical dimension D_max in metres.
    #[serde(default, rename = "max_dimension_m")]
    pub max_dimension: f64,
}

fn one() -> f64 {
    1.0
}

impl AntennaSpec {
    pub fn new(pattern: Pattern) -> Self {
        AntennaSpec {
            pattern,
            radiation_efficiency: 1.0,
            feedline_efficiency: 1.0,
            polarization: Polarization::default(),
            max_dimension: 0.0,
        }
    }

    pub fn isotropic() -> Self {
        Self::new(Pattern::Isotropic)
    }

    pub fn half_wave_dipole() -> Self {
        Self::new(Pattern::HalfWaveDipole)
    }

    pub fn gaussian_beam(boresight_directivity: f64, hpbw_deg: f64) -> Self {
        Self::new(Pattern::GaussianBeam {
            boresight_directivity,
            hpbw_deg,
        })
    }

    pub fn with_radiation_efficiency(mut self, e: f64) -> Self {
        self.radiation_efficiency = e;
        self
    }

    pub fn with_feedline_efficiency(mut self, e_tl: f64) -> Self {
        self.feedline_efficiency = e_tl;
        self
    }

    pub fn with_polarization(mut self, p: Polarization) -> Self {
        self.polarization = p;
        self
    }

    pub fn with_max_dimension(mut self, d_max: f64) -> Self {
        self.max_dimension = d_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        for (name, v) in [
            ("radiation_efficiency", self.radiation_efficiency),
            ("feedline_efficiency", self.feedline_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(domain(format!("{name} {v} outside (0, 1]")));
            }
        }
        if !(self.max_dimension.is_finite() && self.max_dimension >= 0.0) {
            return Err(domain("max_dimension must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Frequency, separation and pointing of one transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub frequency_hz: f64,
    pub distance_m: f64,
    /// From transmitter boresight toward the receiver.
    pub tx_direction: Direction,
    /// From receiver boresight toward the transmitter.
    pub rx_direction: Direction,
}

impl LinkGeometry {
    /// Both antennas looking straight at each other along boresight.
    pub fn boresight(frequency_hz: f64, distance_m: f64) -> Self {
        LinkGeometry {
            frequency_hz,
            distance_m,
            tx_direction: Direction::BORESIGHT,
            rx_direction: Direction::BORESIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(domain(format!(
                "frequency {} Hz must be > 0",
                self.frequency_hz
            )));
        }
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(domain(format!(
                "distance {} m must be > 0",
                self.distance_m
            )));
        }
        self.tx_direction.validate()?;
        self.rx_direction.validate()
    }

    pub fn wavelength(&self) -> Result<f64> {
        wavelength(self.frequency_hz)
    }
}

/// Outcome of a single link evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetResult {
    /// Power density at the receiver, W/m².
    pub power_density: f64,
    /// Received power, W.
    pub received_power: f64,
    pub path_loss_db: f64,
    pub plf: f64,
    pub far_field_ok: bool,
}

pub fn wavelength(frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(domain(format!("frequency {frequency_hz} Hz must be > 0")));
    }
    Ok(SPEED_OF_LIGHT / frequency_hz)
}

/// Gain `e·D(θ, φ)` of an antenna in the given direction.
pub fn gain(antenna: &AntennaSpec, direction: Direction) -> f64 {
    antenna.radiation_efficiency * antenna.pattern.directivity(direction)
}

/// `W = P_t·G_t / (4πR²)`.
pub fn power_density(p_t: f64, g_t: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(domain(format!("distance {distance_m} m must be > 0")));
    }
    if !(p_t >= 0.0 && g_t >= 0.0) {
        return Err(domain("power and gain must be >= 0"));
    }
    Ok(p_t * g_t / (4.0 * PI * distance_m * distance_m))
}

/// `A = λ²·G / (4π)`.
pub fn effective_aperture(g_r: f64, wavelength_m: f64) -> Result<f64> {
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(domain(format!("wavelength {wavelength_m} m must be > 0")));
    }
    if g_r.is_nan() || g_r < 0.0 {
        return Err(domain("gain must be >= 0"));
    }
    Ok(wavelength_m * wavelength_m * g_r / (4.0 * PI))
}

/// `|⟨ρ_t, ρ_r⟩|²` with the conjugated inner product.
pub fn polarization_loss_factor(rho_t: &Polarization, rho_r: &Polarization) -> f64 {
    let inner = rho_t.x.conj() * rho_r.x + rho_t.y.conj() * rho_r.y;
    inner.norm_sqr().min(1.0)
}

fn free_space_factor(wavelength_m: f64, distance_m: f64) -> f64 {
    let f = wavelength_m / (4.0 * PI * distance_m);
    f * f
}

/// `P_r / P_t`.
///
/// With `matched` the antennas are taken as impedance- and
/// polarization-matched: `(λ/4πR)²·G_t·G_r`. Otherwise the polarization loss
/// factor and the transmitter's feed-line efficiency are applied as well.
pub fn friis_ratio(
    geometry: &LinkGeometry,
    tx: &AntennaSpec,
    rx: &AntennaSpec,
    matched: bool,
) -> Result<f64> {
    geometry.validate()?;
    tx.validate()?;
    rx.validate()?;
    let lambda = geometry.wavelength()?;
    let ratio = free_space_factor(lambda, geometry.distance_m)
        * gain(tx, geometry.tx_direction)
        * gain(rx, geometry.rx_direction);
    if matched {
        Ok(ratio)
    } else {
        Ok(ratio
            * polarization_loss_factor(&tx.polarization, &rx.polarization)
            * tx.feedline_efficiency)
    }
}

/// Free-space path loss `20·log10(4πR/λ)` in dB.
pub fn path_loss_db(frequency_hz: f64, distance_m: f64) -> Result<f64> {
    let lambda = wavelength(frequency_hz)?;
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(domain(format!("distance {distance_m} m must be > 0")));
    }
    Ok(20.0 * (4.0 * PI * distance_m / lambda).log10())
}

/// Full link budget through the power-density and aperture route.
///
/// The receiver's radiation efficiency is applied once, as an explicit
/// factor, with the aperture computed from its directivity alone:
/// `P_r = e_r·PLF·A_r(D_r)·W·e_TL`.
pub fn received_power(
    p_t: f64,
    geometry: &LinkGeometry,
    tx: &AntennaSpec,
    rx: &AntennaSpec,
) -> Result<LinkBudgetResult> {
    if !(p_t.is_finite() && p_t >= 0.0) {
        return Err(domain(format!("transmit power {p_t} W must be >= 0")));
    }
    geometry.validate()?;
    tx.validate()?;
    rx.validate()?;
    let lambda = geometry.wavelength()?;
    let w = power_density(p_t, gain(tx, geometry.tx_direction), geometry.distance_m)?;
    let aperture = effective_aperture(rx.pattern.directivity(geometry.rx_direction), lambda)?;
    let plf = polarization_loss_factor(&tx.polarization, &rx.polarization);
    let p_r = rx.radiation_efficiency * plf * aperture * w * tx.feedline_efficiency;
    let d_max = tx.max_dimension.max(rx.max_dimension);
    Ok(LinkBudgetResult {
        power_density: w,
        received_power: p_r,
        path_loss_db: path_loss_db(geometry.frequency_hz, geometry.distance_m)?,
        plf,
        far_field_ok: far_field_check(geometry.distance_m, d_max, lambda)?,
    })
}

/// Transmitter-side `P_t·G_t·e_TL`, i.e. EIRP after feed-line loss.
pub fn eirp(p_t: f64, g_t: f64, e_tl: f64) -> f64 {
    p_t * g_t * e_tl
}

/// Isotropic-equivalent radiated power `4π·U_max`.
pub fn total_radiated_power(u_max: f64) -> f64 {
    4.0 * PI * u_max
}

/// Fraunhofer condition `R ≥ 2·D_max²/λ`.
pub fn far_field_check(distance_m: f64, d_max: f64, wavelength_m: f64) -> Result<bool> {
    if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
        return Err(domain(format!("wavelength {wavelength_m} m must be > 0")));
    }
    if d_max.is_nan() || d_max < 0.0 {
        return Err(domain("d_max must be >= 0"));
    }
    Ok(distance_m >= 2.0 * d_max * d_max / wavelength_m)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}
