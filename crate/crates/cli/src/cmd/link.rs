use std::io::Write;

use beaconmesh::linkbudget::{self, Direction, LinkGeometry};
use serde::Serialize;

use crate::args::{antenna, LinkArgs};
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct LinkReport {
    pub frequency_hz: f64,
    pub distance_m: f64,
    pub wavelength_m: f64,
    pub pt_w: f64,
    pub eirp_w: f64,
    pub power_density_w_m2: f64,
    pub received_power_w: f64,
    pub received_power_dbm: f64,
    pub path_loss_db: f64,
    pub plf: f64,
    /// Unmatched ratio `P_r / P_t`.
    pub friis_ratio: f64,
    pub friis_ratio_matched: f64,
    pub far_field_ok: bool,
}

fn direction(
    theta_deg: Option<f64>,
    phi_deg: Option<f64>,
    peak: Direction,
) -> Result<Direction, CliError> {
    Ok(Direction::new(
        theta_deg.map_or(peak.theta, f64::to_radians),
        phi_deg.map_or(peak.phi, f64::to_radians),
    )?)
}

pub fn evaluate(a: &LinkArgs) -> Result<LinkReport, CliError> {
    let tx = antenna(a.tx_pattern, a.gt, a.tx_hpbw, "gt")?
        .with_radiation_efficiency(a.tx_eff)
        .with_feedline_efficiency(a.tx_feed_eff)
        .with_polarization(a.tx_pol.into())
        .with_max_dimension(a.tx_dmax);
    let rx = antenna(a.rx_pattern, a.gr, a.rx_hpbw, "gr")?
        .with_radiation_efficiency(a.rx_eff)
        .with_polarization(a.rx_pol.into())
        .with_max_dimension(a.rx_dmax);
    let geometry = LinkGeometry {
        frequency_hz: a.freq,
        distance_m: a.dist,
        tx_direction: direction(a.tx_theta, a.tx_phi, tx.pattern.peak_direction())?,
        rx_direction: direction(a.rx_theta, a.rx_phi, rx.pattern.peak_direction())?,
    };
    let r = linkbudget::received_power(a.pt, &geometry, &tx, &rx)?;
    Ok(LinkReport {
        frequency_hz: a.freq,
        distance_m: a.dist,
        wavelength_m: geometry.wavelength()?,
        pt_w: a.pt,
        eirp_w: linkbudget::eirp(
            a.pt,
            linkbudget::gain(&tx, geometry.tx_direction),
            tx.feedline_efficiency,
        ),
        power_density_w_m2: r.power_density,
        received_power_w: r.received_power,
        received_power_dbm: linkbudget::watts_to_dbm(r.received_power),
        path_loss_db: r.path_loss_db,
        plf: r.plf,
        friis_ratio: linkbudget::friis_ratio(&geometry, &tx, &rx, false)?,
        friis_ratio_matched: linkbudget::friis_ratio(&geometry, &tx, &rx, true)?,
        far_field_ok: r.far_field_ok,
    })
}

pub fn run(a: &LinkArgs, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let r = evaluate(a)?;
    if json {
        return super::print_json(out, &r);
    }
    writeln!(out, "wavelength       {:.9} m", r.wavelength_m)?;
    writeln!(out, "eirp             {:.6e} W", r.eirp_w)?;
    writeln!(out, "power density    {:.6e} W/m^2", r.power_density_w_m2)?;
    writeln!(
        out,
        "received power   {:.6e} W ({:.3} dBm)",
        r.received_power_w, r.received_power_dbm
    )?;
    writeln!(out, "path loss        {:.4} dB", r.path_loss_db)?;
    writeln!(out, "plf              {:.6}", r.plf)?;
    writeln!(
        out,
        "friis ratio      {:.6e} (matched {:.6e})",
        r.friis_ratio, r.friis_ratio_matched
    )?;
    writeln!(
        out,
        "far field        {}",
        if r.far_field_ok { "yes" } else { "no" }
    )?;
    Ok(())
}
