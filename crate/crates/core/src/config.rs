//! Measure configs: JSON documents with an optional two-column CSV for custom profiles.
//!
//! ```json
//! { "d": 1,
//!   "radial": {"family": "tempered", "alpha": 0.5, "kappa": 0, "m": 1.0, "beta": 1.0, "scale": 1.0},
//!   "angular": {"type": "uniform", "mass": 2.0} }
//! ```
//!
//! A custom profile gives either inline `s`/`q` arrays or `"csv": "path"` (relative
//! to the config file).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::error::{LevyError, Result};
use crate::levy_measure::{AngularMeasure, Continuation, CustomProfile, Interpolation, LevyMeasure, RadialProfile};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    d: usize,
    radial: Value,
    angular: AngularMeasure,
}

/// Parses a measure config. `base` resolves relative CSV paths.
pub fn parse_measure(text: &str, base: Option<&Path>) -> Result<LevyMeasure> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| LevyError::Config(e.to_string()))?;
    let radial = parse_radial(raw.radial, base)?;
    LevyMeasure::new(raw.d, radial, raw.angular)
}

pub fn load_measure(path: &Path) -> Result<LevyMeasure> {
    let text = std::fs::read_to_string(path).map_err(|e| LevyError::Io(format!("{}: {e}", path.display())))?;
    parse_measure(&text, path.parent()).map_err(|e| match e {
        LevyError::Config(m) => LevyError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn parse_radial(mut v: Value, base: Option<&Path>) -> Result<RadialProfile> {
    let family = v.get("family").and_then(Value::as_str).map(str::to_owned);
    if family.as_deref() != Some("custom") {
        return serde_json::from_value(v).map_err(|e| LevyError::Config(format!("radial: {e}")));
    }
    let obj = v
        .as_object_mut()
        .ok_or_else(|| LevyError::Config("radial: expected an object".into()))?;
    let interpolation: Interpolation = match obj.remove("interpolation") {
        Some(i) => serde_json::from_value(i).map_err(|e| LevyError::Config(format!("radial.interpolation: {e}")))?,
        None => Interpolation::default(),
    };
    let monotone = match obj.remove("monotone") {
        Some(Value::Bool(b)) => b,
        None => false,
        Some(other) => return Err(LevyError::Config(format!("radial.monotone: expected a boolean, got {other}"))),
    };
    let (s, q) = match obj.remove("csv") {
        Some(Value::String(p)) => {
            let path = resolve(base, &p);
            read_profile_csv(&path)?
        }
        Some(other) => return Err(LevyError::Config(format!("radial.csv: expected a path, got {other}"))),
        None => {
            let field = |name: &str| -> Result<Vec<f64>> {
                let arr = obj
                    .get(name)
                    .ok_or_else(|| LevyError::Config(format!("radial.{name}: missing (or give `csv`)")))?;
                serde_json::from_value(arr.clone()).map_err(|e| LevyError::Config(format!("radial.{name}: {e}")))
            };
            (field("s")?, field("q")?)
        }
    };
    for key in obj.keys() {
        if !matches!(key.as_str(), "family" | "s" | "q") {
            return Err(LevyError::Config(format!("radial: unknown field `{key}`")));
        }
    }
    Ok(RadialProfile::Custom(CustomProfile::new(s, q, interpolation, monotone)?))
}

fn resolve(base: Option<&Path>, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path,
    }
}

/// Reads (s, q) pairs; a non-numeric first row is treated as a header.
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| LevyError::Io(format!("{}: {e}", path.display())))?;
    let (mut s, mut q) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| LevyError::Config(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(LevyError::Config(format!(
                "{} line {}: expected two columns, found {}",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                s.push(a);
                q.push(b);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(LevyError::Config(format!(
                    "{} line {}: cannot parse `{}`, `{}`",
                    path.display(),
                    i + 1,
                    &rec[0],
                    &rec[1]
                )))
            }
        }
    }
    Ok((s, q))
}

/// Built-in families at their reference parameters (d = 1, angular mass 2).
pub mod presets {
    use super::*;

    pub fn truncated(alpha: f64, r0: f64) -> Result<LevyMeasure> {
        LevyMeasure::uniform(1, RadialProfile::TruncatedStable { alpha, r0, scale: 1.0 }, 2.0)
    }

    pub fn tempered(alpha: f64, kappa: f64, m: f64, beta: f64) -> Result<LevyMeasure> {
        LevyMeasure::uniform(
            1,
            RadialProfile::TemperedStable {
                alpha,
                kappa,
                m,
                beta,
                scale: 1.0,
            },
            2.0,
        )
    }

    pub fn high_intensity(beta: f64) -> Result<LevyMeasure> {
        LevyMeasure::uniform(
            1,
            RadialProfile::HighIntensity {
                beta,
                scale: 1.0,
                continuation: Continuation::Zero,
            },
            2.0,
        )
    }

    /// q(s) = s^{−2}/π on [1e−12, 1e12], so Φ(ξ) = |ξ| up to the cut ends.
    pub fn cauchy() -> Result<LevyMeasure> {
        let pi = std::f64::consts::PI;
        let c = CustomProfile::new(vec![1e-12, 1e12], vec![1e24 / pi, 1e-24 / pi], Interpolation::LogLinear, true)?;
        LevyMeasure::uniform(1, RadialProfile::Custom(c), 2.0)
    }

    /// f = 2^{(2+d)k²}/(k²+1) on the shells (2^{−(k+1)²}, 2^{−k²}], k = 0..k_max.
    pub fn staircase(d: usize, k_max: usize) -> Result<CustomProfile> {
        let mut s = Vec::new();
        let mut q = Vec::new();
        for k in (0..=k_max + 1).rev() {
            let kk = (k * k) as f64;
            s.push(2f64.powf(-kk));
            // q = f·s^{d−1} at the right knot, which the step rule uses on the whole shell
            let f = 2f64.powf((2.0 + d as f64) * kk) / (kk + 1.0);
            q.push(f * 2f64.powf(kk * (1.0 - d as f64)));
        }
        CustomProfile::new(s, q, Interpolation::Step, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_builtin_family() {
        let text = r#"{ "d": 1, "radial": {"family":"tempered","alpha":0.5,"kappa":0,"m":1.0,"beta":1.0,"scale":1.0}, "angular": {"type":"uniform","mass":2.0} }"#;
        let nu = parse_measure(text, None).unwrap();
        assert_eq!(nu, presets::tempered(0.5, 0.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn custom_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("q.csv")).unwrap();
        writeln!(f, "s,q\n0.001,1000000\n1,1\n").unwrap();
        let text = r#"{"d":1,"radial":{"family":"custom","csv":"q.csv","monotone":true},"angular":{"type":"uniform","mass":2}}"#;
        let nu = parse_measure(text, Some(dir.path())).unwrap();
        assert!((nu.radial().q(0.1) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let text = r#"{"d":1,"radial":{"family":"truncated","alpha":1.5},"angular":{"type":"uniform","mass":2}}"#;
        let err = parse_measure(text, None).unwrap_err().to_string();
        assert!(err.contains("r0"), "{err}");
        let text = r#"{"d":1,"radial":{"family":"truncated","alpha":1.5,"r0":1},"angular":{"type":"uniform","mass":2},"extra":1}"#;
        let err = parse_measure(text, None).unwrap_err().to_string();
        assert!(err.contains("extra") && err.contains("line"), "{err}");
    }
}
