//! One-port S-parameter sweeps: Touchstone v1 `.s1p` I/O and the
//! reflection-derived metrics (return loss, VSWR, accepted power, bandwidth).
//!
//! Metrics enforce the passive assumption `|S11| ≤ 1`; parsing does not, so
//! measured files with small calibration excursions still load.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Return loss used in place of +∞ when interpolating across a perfect match.
const RETURN_LOSS_CAP_DB: f64 = 400.0;

/// Digits written per value by [`write_touchstone`].
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn scale(self) -> f64 {
        match self {
            FrequencyUnit::Hz => 1.0,
            FrequencyUnit::KHz => 1e3,
            FrequencyUnit::MHz => 1e6,
            FrequencyUnit::GHz => 1e9,
        }
    }

    fn parse(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "HZ" => Some(FrequencyUnit::Hz),
            "KHZ" => Some(FrequencyUnit::KHz),
            "MHZ" => Some(FrequencyUnit::MHz),
            "GHZ" => Some(FrequencyUnit::GHz),
            _ => None,
        }
    }
}

impl fmt::Display for FrequencyUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrequencyUnit::Hz => "Hz",
            FrequencyUnit::KHz => "kHz",
            FrequencyUnit::MHz => "MHz",
            FrequencyUnit::GHz => "GHz",
        })
    }
}

/// How each complex sample is written on a data line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// Real, imaginary.
    RI,
    /// Linear magnitude, angle in degrees.
    MA,
    /// Magnitude in dB, angle in degrees.
    DB,
}

impl DataFormat {
    fn parse(token: &str) -> Option<Self> {
        match token.to_ascii_uppercase().as_str() {
            "RI" => Some(DataFormat::RI),
            "MA" => Some(DataFormat::MA),
            "DB" => Some(DataFormat::DB),
            _ => None,
        }
    }

    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::RI => Complex64::new(a, b),
            DataFormat::MA => Complex64::from_polar(a, b.to_radians()),
            DataFormat::DB => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(self, z: Complex64) -> (f64, f64) {
        match self {
            DataFormat::RI => (z.re, z.im),
            DataFormat::MA => (z.norm(), z.arg().to_degrees()),
            // dB cannot express a perfect match; floor it at -RETURN_LOSS_CAP_DB
            DataFormat::DB => (
                (20.0 * z.norm().log10()).max(-RETURN_LOSS_CAP_DB),
                z.arg().to_degrees(),
            ),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataFormat::RI => "RI",
            DataFormat::MA => "MA",
            DataFormat::DB => "DB",
        })
    }
}

/// Contents of the `#` option line. The parameter type is always S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchstoneHeader {
    pub frequency_unit: FrequencyUnit,
    pub format: DataFormat,
    pub reference_impedance: f64,
}

impl Default for TouchstoneHeader {
    fn default() -> Self {
        TouchstoneHeader {
            frequency_unit: FrequencyUnit::GHz,
            format: DataFormat::MA,
            reference_impedance: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub frequency_hz: f64,
    pub s11: Complex64,
}

/// S11 samples in strictly increasing frequency order, at least one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySweep {
    header: TouchstoneHeader,
    points: Vec<SweepPoint>,
}

impl FrequencySweep {
    pub fn new(header: TouchstoneHeader, points: Vec<SweepPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("sweep has no points"));
        }
        if !(header.reference_impedance > 0.0 && header.reference_impedance.is_finite()) {
            return Err(domain("reference impedance must be > 0"));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.frequency_hz.is_finite() || p.frequency_hz < 0.0 {
                return Err(domain(format!("invalid frequency {}", p.frequency_hz)));
            }
            if !(p.s11.re.is_finite() && p.s11.im.is_finite()) {
                return Err(domain(format!("non-finite S11 at {} Hz", p.frequency_hz)));
            }
            if i > 0 && p.frequency_hz <= points[i - 1].frequency_hz {
                return Err(domain("frequencies must be strictly increasing"));
            }
        }
        Ok(FrequencySweep { header, points })
    }

    pub fn header(&self) -> &TouchstoneHeader {
        &self.header
    }

    pub fn points(&self) -> &[SweepPoint] {
        &self.points
    }

    pub fn frequency_range(&self) -> (f64, f64) {
        (
            self.points[0].frequency_hz,
            self.points[self.points.len() - 1].frequency_hz,
        )
    }
}

impl FromStr for FrequencySweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_touchstone(s)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_option_line(body: &str, line: usize) -> Result<TouchstoneHeader> {
    let mut header = TouchstoneHeader::default();
    let (mut unit_seen, mut param_seen, mut format_seen, mut r_seen) = (false, false, false, false);
    let mut tokens = body.split_whitespace();
    while let Some(tok) = tokens.next() {
        let upper = tok.to_ascii_uppercase();
        if let Some(u) = FrequencyUnit::parse(tok) {
            if unit_seen {
                return Err(parse_err(line, "frequency unit given twice"));
            }
            header.frequency_unit = u;
            unit_seen = true;
        } else if let Some(f) = DataFormat::parse(tok) {
            if format_seen {
                return Err(parse_err(line, "data format given twice"));
            }
            header.format = f;
            format_seen = true;
        } else if upper == "R" {
            if r_seen {
                return Err(parse_err(line, "reference impedance given twice"));
            }
            let value = tokens
                .next()
                .ok_or_else(|| parse_err(line, "'R' must be followed by an impedance"))?;
            let z0: f64 = value
                .parse()
                .map_err(|_| parse_err(line, format!("bad reference impedance '{value}'")))?;
            if !(z0 > 0.0 && z0.is_finite()) {
                return Err(parse_err(line, "reference impedance must be > 0"));
            }
            header.reference_impedance = z0;
            r_seen = true;
        } else if matches!(upper.as_str(), "S" | "Y" | "Z" | "G" | "H") {
            if param_seen {
                return Err(parse_err(line, "parameter type given twice"));
            }
            if upper != "S" {
                return Err(parse_err(
                    line,
                    format!("only S parameters are supported, got {tok}"),
                ));
            }
            param_seen = true;
        } else {
            return Err(parse_err(
                line,
                format!("unrecognised option token '{tok}'"),
            ));
        }
    }
    Ok(header)
}

fn parse_number(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse number '{token}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number '{token}'")));
    }
    Ok(v)
}

/// Parses a one-port Touchstone v1 document.
///
/// Options omitted from the `#` line default to `GHz S MA R 50`. Only the
/// first option line is honoured; later ones are ignored as Touchstone v1
/// prescribes.
pub fn parse_touchstone(text: &str) -> Result<FrequencySweep> {
    let mut header: Option<TouchstoneHeader> = None;
    let mut raw: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut last_line = 0;

    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = full.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(body) = content.strip_prefix('#') {
            if header.is_none() {
                if !raw.is_empty() {
                    return Err(parse_err(line, "option line must precede data"));
                }
                header = Some(parse_option_line(body, line)?);
            }
            continue;
        }
        let cols: Vec<&str> = content.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(parse_err(
                line,
                format!("expected 3 columns (frequency, a, b), found {}", cols.len()),
            ));
        }
        raw.push((
            line,
            parse_number(cols[0], line)?,
            parse_number(cols[1], line)?,
            parse_number(cols[2], line)?,
        ));
    }

    let header = header.unwrap_or_default();
    if raw.is_empty() {
        return Err(parse_err(last_line.max(1), "no data points"));
    }

    let scale = header.frequency_unit.scale();
    let mut points = Vec::with_capacity(raw.len());
    let mut prev: Option<f64> = None;
    for (line, f, a, b) in raw {
        if f < 0.0 {
            return Err(parse_err(line, format!("negative frequency {f}")));
        }
        if let Some(p) = prev {
            if f <= p {
                return Err(parse_err(
                    line,
                    format!("frequency {f} does not increase over previous {p}"),
                ));
            }
        }
        prev = Some(f);
        points.push(SweepPoint {
            frequency_hz: f * scale,
            s11: header.format.decode(a, b),
        });
    }
    FrequencySweep::new(header, points)
}

fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e9).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Writes a sweep as a `.s1p` document in the requested unit and format.
pub fn write_touchstone(sweep: &FrequencySweep, unit: FrequencyUnit, format: DataFormat) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {unit} S {format} R {}",
        fmt_sig(sweep.header.reference_impedance)
    );
    for p in &sweep.points {
        let (a, b) = format.encode(p.s11);
        let _ = writeln!(
            out,
            "{} {} {}",
            fmt_sig(p.frequency_hz / unit.scale()),
            fmt_sig(a),
            fmt_sig(b)
        );
    }
    out
}

impl fmt::Display for FrequencySweep {
    /// `# GHz S MA R 50` rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_touchstone(self, FrequencyUnit::GHz, DataFormat::MA))
    }
}

fn check_passive(s11_mag: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s11_mag) {
        return Err(domain(format!("|S11| = {s11_mag} outside [0, 1]")));
    }
    Ok(())
}

/// `−20·log10|S11|`; `+∞` for a perfect match.
pub fn return_loss_db(s11_mag: f64) -> Result<f64> {
    check_passive(s11_mag)?;
    if s11_mag == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * s11_mag.log10())
}

/// `(1+|Γ|)/(1−|Γ|)`.
pub fn vswr(s11_mag: f64) -> Result<f64> {
    check_passive(s11_mag)?;
    if s11_mag == 1.0 {
        return Err(Error::Singularity("VSWR is unbounded at |S11| = 1".into()));
    }
    Ok(ratio_of_sums(s11_mag))
}

/// `(1+m)/(1−m)` with the rounding of both sums and of the quotient
/// compensated, so the result is the nearest double to the exact ratio.
fn ratio_of_sums(m: f64) -> f64 {
    let num = 1.0 + m;
    let num_err = m - (num - 1.0);
    let den = 1.0 - m;
    let den_err = (1.0 - den) - m;
    let q = num / den;
    let residual = (-q).mul_add(den, num);
    q + (residual + num_err - q * den_err) / den
}

/// Share of incident power not reflected, `1 − |S11|²`.
pub fn accepted_power_fraction(s11_mag: f64) -> Result<f64> {
    check_passive(s11_mag)?;
    Ok(1.0 - s11_mag * s11_mag)
}

/// Transmitted over reflected power, `(1 − |S11|²)/|S11|²`.
pub fn transmitted_to_reflected_ratio(s11_mag: f64) -> Result<f64> {
    check_passive(s11_mag)?;
    if s11_mag == 0.0 {
        return Err(Error::Singularity("no reflected wave at |S11| = 0".into()));
    }
    let r = s11_mag * s11_mag;
    Ok((1.0 - r) / r)
}

fn capped_return_loss(s11_mag: f64) -> f64 {
    if s11_mag <= 0.0 {
        RETURN_LOSS_CAP_DB
    } else {
        (-20.0 * s11_mag.log10()).min(RETURN_LOSS_CAP_DB)
    }
}

/// Frequency bands where return loss stays at or above `threshold_db`.
///
/// Band edges between samples are placed by linear interpolation of return
/// loss in dB. Bands are disjoint and sorted.
pub fn bandwidth(sweep: &FrequencySweep, threshold_db: f64) -> Result<Vec<(f64, f64)>> {
    if !(threshold_db > 0.0 && threshold_db.is_finite()) {
        return Err(domain(format!("threshold {threshold_db} dB must be > 0")));
    }
    let samples: Vec<(f64, f64)> = sweep
        .points
        .iter()
        .map(|p| (p.frequency_hz, capped_return_loss(p.s11.norm())))
        .collect();
    let crossing = |(f0, rl0): (f64, f64), (f1, rl1): (f64, f64)| {
        f0 + (threshold_db - rl0) / (rl1 - rl0) * (f1 - f0)
    };

    let mut bands = Vec::new();
    let mut start: Option<f64> = None;
    for (i, &(f, rl)) in samples.iter().enumerate() {
        let met = rl >= threshold_db;
        match (start, met) {
            (None, true) => {
                start = Some(if i == 0 {
                    f
                } else {
                    crossing(samples[i - 1], samples[i])
                });
            }
            (Some(s), false) => {
                bands.push((s, crossing(samples[i - 1], samples[i])));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        bands.push((s, samples[samples.len() - 1].0));
    }
    Ok(bands)
}

/// Frequency of the best match; the lowest such frequency on ties.
pub fn resonant_frequency(sweep: &FrequencySweep) -> f64 {
    let mut best = &sweep.points[0];
    for p in &sweep.points[1..] {
        if p.s11.norm() < best.s11.norm() {
            best = p;
        }
    }
    best.frequency_hz
}

/// |S11| at `frequency_hz`, interpolated linearly in dB between neighbours.
pub fn interpolate_magnitude(sweep: &FrequencySweep, frequency_hz: f64) -> Result<f64> {
    let (lo, hi) = sweep.frequency_range();
    if !(lo..=hi).contains(&frequency_hz) {
        return Err(Error::Range(format!(
            "{frequency_hz} Hz outside sweep [{lo}, {hi}] Hz"
        )));
    }
    let pts = &sweep.points;
    let idx = pts.partition_point(|p| p.frequency_hz < frequency_hz);
    if pts[idx].frequency_hz == frequency_hz {
        return Ok(pts[idx].s11.norm());
    }
    let (a, b) = (&pts[idx - 1], &pts[idx]);
    let db = |z: Complex64| -capped_return_loss(z.norm());
    let t = (frequency_hz - a.frequency_hz) / (b.frequency_hz - a.frequency_hz);
    let (da, dbb) = (db(a.s11), db(b.s11));
    if da == dbb {
        return Ok(a.s11.norm());
    }
    Ok(10f64.powf((da + t * (dbb - da)) / 20.0))
}

/// `1 − |S11(f)|²`, for folding an antenna's match into its efficiency.
pub fn mismatch_efficiency(sweep: &FrequencySweep, frequency_hz: f64) -> Result<f64> {
    accepted_power_fraction(interpolate_magnitude(sweep, frequency_hz)?)
}

/// All per-sample metrics; `None` where a metric is undefined for the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMetrics {
    pub frequency_hz: f64,
    pub s11_mag: f64,
    pub return_loss_db: Option<f64>,
    pub vswr: Option<f64>,
    pub accepted_fraction: Option<f64>,
    pub transmitted_to_reflected: Option<f64>,
}

pub fn point_metrics(sweep: &FrequencySweep) -> Vec<PointMetrics> {
    sweep
        .points
        .iter()
        .map(|p| {
            let m = p.s11.norm();
            PointMetrics {
                frequency_hz: p.frequency_hz,
                s11_mag: m,
                return_loss_db: return_loss_db(m).ok().filter(|v| v.is_finite()),
                vswr: vswr(m).ok(),
                accepted_fraction: accepted_power_fraction(m).ok(),
                transmitted_to_reflected: transmitted_to_reflected_ratio(m).ok(),
            }
        })
        .collect()
}
