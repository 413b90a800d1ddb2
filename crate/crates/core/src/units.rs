//! Power unit conversions. Everything inside the library works in linear
//! milliwatts; dBm only appears at the configuration boundary.

/// `10^(dBm/10)` milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
