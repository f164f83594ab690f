//! Physical quantities in the scenario file.
//!
//! A value is either a bare number in SI base units or a string with a unit
//! suffix, e.g. `"2.4 MHz"`, `"72 uK"`, `"6.4pW"`. Each field accepts only
//! the units of its own dimension, so `"5 ms"` in a power field is a parse
//! error that points at the offending key.

use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};

const MICRO: [&str; 2] = ["u", "\u{b5}"];

fn with_micro(unit: &str, scale: f64) -> Vec<(String, f64)> {
    // accept "us", "µs" (micro sign) and "μs" (greek mu)
    let mut out: Vec<(String, f64)> = MICRO.iter().map(|m| (format!("{m}{unit}"), scale)).collect();
    out.push((format!("\u{3bc}{unit}"), scale));
    out
}

fn family(base: &str, prefixes: &[(&str, f64)]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for &(p, s) in prefixes {
        if p == "u" {
            out.extend(with_micro(base, s));
        } else {
            out.push((format!("{p}{base}"), s));
        }
    }
    out
}

const SI_PREFIXES: [(&str, f64); 9] = [
    ("", 1.0),
    ("G", 1e9),
    ("M", 1e6),
    ("k", 1e3),
    ("c", 1e-2),
    ("m", 1e-3),
    ("u", 1e-6),
    ("n", 1e-9),
    ("p", 1e-12),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Dimensionless,
    Length,
    Time,
    Power,
    Temperature,
    /// Plain frequency in Hz.
    Frequency,
    /// Rate in rad/s. Hz-family suffixes are multiplied by 2 pi.
    AngularRate,
    Velocity,
    Acceleration,
    Intensity,
}

impl Dimension {
    fn units(self) -> Vec<(String, f64)> {
        let prefixed = |base: &str| family(base, &SI_PREFIXES);
        match self {
            Dimension::Dimensionless => vec![],
            Dimension::Length => prefixed("m")
                .into_iter()
                .filter(|(u, _)| u != "Mm" && u != "Gm")
                .chain([("fm".to_string(), 1e-15)])
                .collect(),
            Dimension::Time => prefixed("s").into_iter().filter(|(u, _)| u.len() <= 3 && u != "cs").collect(),
            Dimension::Power => prefixed("W").into_iter().filter(|(u, _)| u != "cW").collect(),
            Dimension::Temperature => prefixed("K").into_iter().filter(|(u, _)| u != "cK").collect(),
            Dimension::Frequency => prefixed("Hz").into_iter().filter(|(u, _)| u != "cHz").collect(),
            Dimension::AngularRate => Dimension::Frequency
                .units()
                .into_iter()
                .map(|(u, s)| (u, 2.0 * PI * s))
                .chain([("rad/s".to_string(), 1.0)])
                .collect(),
            Dimension::Velocity => vec![("m/s".into(), 1.0), ("cm/s".into(), 1e-2), ("mm/s".into(), 1e-3)],
            Dimension::Acceleration => vec![
                ("m/s^2".into(), 1.0),
                ("m/s2".into(), 1.0),
                ("m/s\u{b2}".into(), 1.0),
                ("g".into(), cqed::constants::STANDARD_GRAVITY),
            ],
            Dimension::Intensity => vec![
                ("W/m^2".into(), 1.0),
                ("W/m2".into(), 1.0),
                ("mW/cm^2".into(), 10.0),
                ("mW/cm2".into(), 10.0),
            ],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Dimensionless => "a plain number",
            Dimension::Length => "a length (m, mm, um, nm, ...)",
            Dimension::Time => "a time (s, ms, us, ns)",
            Dimension::Power => "a power (W, mW, uW, nW, pW)",
            Dimension::Temperature => "a temperature (K, mK, uK)",
            Dimension::Frequency => "a frequency (Hz, kHz, MHz)",
            Dimension::AngularRate => "a rate (Hz, kHz, MHz as 2 pi x value, or rad/s)",
            Dimension::Velocity => "a velocity (m/s, cm/s, mm/s)",
            Dimension::Acceleration => "an acceleration (m/s^2, g)",
            Dimension::Intensity => "an intensity (W/m^2, mW/cm^2)",
        }
    }
}

/// Parses `text` as a number with an optional unit of `dim`, into SI.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let s = text.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let mut units = dim.units();
    // longest suffix first so "ms" wins over "s" and "m/s" over "s"
    units.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
    for (unit, scale) in units {
        if let Some(num) = s.strip_suffix(unit.as_str()) {
            let num = num.trim_end();
            if let Ok(v) = num.parse::<f64>() {
                return Ok(v * scale);
            }
        }
    }
    Err(format!("cannot read {text:?} as {}", dim.name()))
}

/// Generates a newtype holding an SI value that deserializes from a number
/// or a unit-suffixed string of one dimension.
macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, $dim:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub fn si(self) -> f64 {
                self.0
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = f64;
                    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                        f.write_str($dim.name())
                    }
                    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                        Ok(v)
                    }
                    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                        Ok(v as f64)
                    }
                    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                        Ok(v as f64)
                    }
                    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                        parse_quantity(v, $dim).map_err(E::custom)
                    }
                }
                deserializer.deserialize_any(V).map($name)
            }
        }
    };
}

quantity!(Length, Dimension::Length);
quantity!(Time, Dimension::Time);
quantity!(Power, Dimension::Power);
quantity!(Temperature, Dimension::Temperature);
quantity!(Frequency, Dimension::Frequency);
quantity!(
    /// Angular rate in rad/s; `"27 MHz"` means 2 pi x 27e6 rad/s.
    AngularRate,
    Dimension::AngularRate
);
quantity!(Velocity, Dimension::Velocity);
quantity!(Acceleration, Dimension::Acceleration);
quantity!(Intensity, Dimension::Intensity);

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs()
    }

    #[test]
    fn suffixes_scale_to_si() {
        assert!(close(parse_quantity("6.4 pW", Dimension::Power).unwrap(), 6.4e-12));
        assert!(close(parse_quantity("16mW", Dimension::Power).unwrap(), 16e-3));
        assert!(close(parse_quantity("72 uK", Dimension::Temperature).unwrap(), 72e-6));
        assert!(close(parse_quantity("72 \u{b5}K", Dimension::Temperature).unwrap(), 72e-6));
        assert!(close(parse_quantity("75 \u{3bc}m", Dimension::Length).unwrap(), 75e-6));
        assert!(close(parse_quantity("15 mm", Dimension::Length).unwrap(), 15e-3));
        assert!(close(parse_quantity("55 ms", Dimension::Time).unwrap(), 55e-3));
        assert!(close(parse_quantity("1 us", Dimension::Time).unwrap(), 1e-6));
        assert!(close(parse_quantity("30 kHz", Dimension::Frequency).unwrap(), 30e3));
        assert!(close(parse_quantity("1.5 g", Dimension::Acceleration).unwrap(), 14.709975));
        assert!(close(parse_quantity("0.3 m/s", Dimension::Velocity).unwrap(), 0.3));
    }

    #[test]
    fn rates_in_hertz_become_angular() {
        let g = parse_quantity("27 MHz", Dimension::AngularRate).unwrap();
        assert!(close(g, 2.0 * PI * 27e6));
        assert_eq!(parse_quantity("1e6 rad/s", Dimension::AngularRate).unwrap(), 1e6);
        assert_eq!(parse_quantity("1e6", Dimension::AngularRate).unwrap(), 1e6);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let err = parse_quantity("5 ms", Dimension::Power).unwrap_err();
        assert!(err.contains("power"), "{err}");
        assert!(parse_quantity("5 parsecs", Dimension::Length).is_err());
        assert!(parse_quantity("", Dimension::Length).is_err());
    }

    #[test]
    fn deserializes_numbers_and_strings() {
        #[derive(Deserialize)]
        struct T {
            a: Power,
            b: Power,
            c: Power,
        }
        let t: T = toml::from_str("a = 2\nb = 1.5e-12\nc = \"20 pW\"").unwrap();
        assert_eq!((t.a.si(), t.b.si()), (2.0, 1.5e-12));
        assert!(close(t.c.si(), 20e-12));
    }
}
