use super::{ModelError, Result};

/// `10^(db/10)`.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(linear)`. Zero maps to `-∞`; negative powers are rejected.
pub fn linear_to_db(linear: f64) -> Result<f64> {
    if linear < 0.0 || linear.is_nan() {
        return Err(ModelError::NegativeLinear(linear));
    }
    Ok(10.0 * linear.log10())
}

/// Received power (linear) after `d_km` of cable with a loss of
/// `p_l_db_per_km`: the dB budget `p_tx_db - d_km·p_l` converted to linear.
pub fn received_power(p_tx_db: f64, d_km: f64, p_l_db_per_km: f64) -> Result<f64> {
    if d_km < 0.0 || d_km.is_nan() {
        return Err(ModelError::NegativeDistance(d_km));
    }
    if p_l_db_per_km < 0.0 || p_l_db_per_km.is_nan() {
        return Err(ModelError::OutOfRange {
            name: "p_l_db_per_km",
            value: p_l_db_per_km,
            expected: ">= 0",
        });
    }
    Ok(db_to_linear(p_tx_db - d_km * p_l_db_per_km))
}
