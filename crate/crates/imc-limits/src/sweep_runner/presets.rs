//! Bundled technology profiles. `cmos65nm` carries the reference device
//! values; the smaller nodes are illustrative scalings described in each file.

use crate::compute_models::TechnologyProfile;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A profile file: technology constants plus the array's bit-line capacitance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub description: String,
    pub c_bl: f64,
    pub technology: TechnologyProfile<f64>,
}

const BUNDLED: [(&str, &str); 4] = [
    ("cmos65nm", include_str!("../../profiles/cmos65nm.json")),
    ("cmos22nm", include_str!("../../profiles/cmos22nm.json")),
    ("cmos11nm", include_str!("../../profiles/cmos11nm.json")),
    ("cmos7nm", include_str!("../../profiles/cmos7nm.json")),
];

/// Names in scaling order, largest node first.
pub fn names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Raw JSON text of a bundled profile.
pub fn raw(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<Preset> {
    let text = raw(name).ok_or_else(|| {
        Error::Config(format!("unknown profile '{name}' (available: {})", names().join(", ")))
    })?;
    let p: Preset = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: format!("<bundled {name}>"),
        message: e.to_string(),
    })?;
    p.technology.validate()?;
    Ok(p)
}

/// The 65 nm reference profile.
pub fn cmos65nm() -> TechnologyProfile<f64> {
    preset("cmos65nm").expect("bundled profile is valid").technology
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_profiles_parse() {
        for n in names() {
            let p = preset(n).unwrap();
            assert_eq!(p.technology.name, n);
            assert!(p.c_bl > 0.0);
        }
        assert!(preset("cmos3nm").is_err());
    }

    #[test]
    fn reference_values() {
        let t = cmos65nm();
        assert_eq!(t.k_prime, 220e-6);
        assert_eq!(t.alpha, 1.8);
        assert_eq!(t.sigma_vt, 0.0238);
        assert_eq!(t.sigma_t0, 2.3e-12);
        assert_eq!(t.t0, 100e-12);
        assert_eq!(t.vt, 0.4);
        assert_eq!(t.dvbl_max, 0.9);
        assert_eq!(t.gm, 66e-6);
        assert_eq!(t.wl_cox, 0.31e-15);
        assert!((t.kappa * t.kappa / 1e-15 - 0.0064).abs() < 1e-15);
        assert_eq!(preset("cmos65nm").unwrap().c_bl, 270e-15);
    }
}
