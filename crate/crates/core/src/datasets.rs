//! Bundled data.

/// Upper record values of annual rainfall (inches) at the Los Angeles Civic
/// Center, 1890-1989. Bundled as `lacc-rainfall-records`.
pub const RAINFALL_RECORDS: [f64; 8] = [12.69, 12.84, 18.72, 21.96, 23.92, 27.16, 31.28, 34.04];

pub const RAINFALL_NAME: &str = "lacc-rainfall-records";

/// Known cumulative hazard of the rainfall base distribution,
/// `H(x) = (x - 4)^1.9` on `x > 4`.
pub const RAINFALL_SHIFT: f64 = 4.0;
pub const RAINFALL_POWER: f64 = 1.9;

/// Fitted scale of the rainfall marginal, `F(x) = 1 - exp(-(x - 4)^1.9 / 113.23)`.
pub const RAINFALL_FITTED_THETA: f64 = 113.23;

pub fn rainfall_family() -> crate::FamilySpec {
    crate::FamilySpec::power_hazard(RAINFALL_SHIFT, RAINFALL_POWER, 1.0)
        .expect("rainfall family is valid")
}
