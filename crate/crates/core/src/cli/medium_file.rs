//! TOML description of a layered medium.
//!
//! ```toml
//! period = 1.0            # optional, defaults to the sum of the widths
//! kinetics = "arrhenius"  # "arrhenius" (A, E), "saturating" (A, K) or "table"
//!
//! [[layers]]
//! width = 0.5
//! a = 1.0
//! b = 1.0
//! g = 1.0
//! A = 1.0
//! E = 1.0
//!
//! [rate_table]            # only with kinetics = "table"
//! temperatures = [0.0, 1.0, 2.0]
//! values = [[0.0, 1.0, 1.5], [0.0, 2.0, 3.0]]   # one row per layer
//! ```

use crate::error::{Error, Result};
use crate::medium::{CombustionRate, MediumSpec, PeriodicField};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Kinetics {
    #[default]
    Arrhenius,
    Saturating,
    Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Layer {
    width: f64,
    a: f64,
    b: f64,
    g: f64,
    #[serde(rename = "A")]
    prefactor: Option<f64>,
    #[serde(rename = "E")]
    activation: Option<f64>,
    #[serde(rename = "K")]
    half_saturation: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateTable {
    temperatures: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MediumFile {
    period: Option<f64>,
    #[serde(default)]
    kinetics: Kinetics,
    layers: Vec<Layer>,
    rate_table: Option<RateTable>,
}

/// A parsed medium with the SHA-256 of the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedMedium {
    pub medium: MediumSpec,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<LoadedMedium> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::config("medium", format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::config("medium", "file is not UTF-8"))?;
    Ok(LoadedMedium {
        medium: parse(text)?,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

pub fn parse(text: &str) -> Result<MediumSpec> {
    let file: MediumFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.layers.is_empty() {
        return Err(Error::config("layers", "at least one layer is required"));
    }
    let mut edges = Vec::with_capacity(file.layers.len());
    let mut total = 0.0;
    for (k, l) in file.layers.iter().enumerate() {
        if !(l.width > 0.0 && l.width.is_finite()) {
            return Err(Error::config(
                format!("layers[{k}].width"),
                format!("must be positive, got {}", l.width),
            ));
        }
        edges.push(total);
        total += l.width;
    }
    let period = file.period.unwrap_or(total);
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::config("period", format!("must be positive, got {period}")));
    }
    if (total - period).abs() > 1e-12 * period {
        return Err(Error::config(
            "layers.width",
            format!("widths sum to {total}, expected the period {period}"),
        ));
    }
    let field = |name: &str, get: &dyn Fn(&Layer) -> f64| -> Result<PeriodicField> {
        let values: Vec<f64> = file.layers.iter().map(get).collect();
        if let Some(k) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::config(
                format!("layers[{k}].{name}"),
                format!("must be positive, got {}", values[k]),
            ));
        }
        PeriodicField::from_edges(period, edges.clone(), values)
    };
    let a = field("a", &|l| l.a)?;
    let b = field("b", &|l| l.b)?;
    let g = field("g", &|l| l.g)?;

    let required = |name: &str, get: &dyn Fn(&Layer) -> Option<f64>| -> Result<Vec<f64>> {
        file.layers
            .iter()
            .enumerate()
            .map(|(k, l)| get(l).ok_or_else(|| Error::config(format!("layers[{k}].{name}"), "missing")))
            .collect()
    };
    let forbid = |name: &str, get: &dyn Fn(&Layer) -> Option<f64>| -> Result<()> {
        match file.layers.iter().position(|l| get(l).is_some()) {
            Some(k) => Err(Error::config(
                format!("layers[{k}].{name}"),
                format!("not used by {:?} kinetics", file.kinetics).to_lowercase(),
            )),
            None => Ok(()),
        }
    };
    if file.kinetics != Kinetics::Table && file.rate_table.is_some() {
        return Err(Error::config("rate_table", "only allowed with kinetics = \"table\""));
    }
    let positive = |name: &str, v: Vec<f64>, allow_zero: bool| -> Result<PeriodicField> {
        if let Some(k) = v
            .iter()
            .position(|x| !x.is_finite() || *x < 0.0 || (!allow_zero && *x == 0.0))
        {
            return Err(Error::config(
                format!("layers[{k}].{name}"),
                format!("invalid value {}", v[k]),
            ));
        }
        PeriodicField::from_edges(period, edges.clone(), v)
    };
    let rate = match file.kinetics {
        Kinetics::Arrhenius => {
            forbid("K", &|l| l.half_saturation)?;
            let pre = positive("A", required("A", &|l| l.prefactor)?, false)?;
            let act = positive("E", required("E", &|l| l.activation)?, true)?;
            CombustionRate::arrhenius(pre, act)?
        }
        Kinetics::Saturating => {
            forbid("E", &|l| l.activation)?;
            let pre = positive("A", required("A", &|l| l.prefactor)?, false)?;
            let k = positive("K", required("K", &|l| l.half_saturation)?, false)?;
            CombustionRate::saturating(pre, k)?
        }
        Kinetics::Table => {
            forbid("A", &|l| l.prefactor)?;
            forbid("E", &|l| l.activation)?;
            forbid("K", &|l| l.half_saturation)?;
            let t = file
                .rate_table
                .as_ref()
                .ok_or_else(|| Error::config("rate_table", "required with kinetics = \"table\""))?;
            CombustionRate::table(period, edges.clone(), t.temperatures.clone(), t.values.clone())?
        }
    };
    MediumSpec::new(a, b, g, rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LAYER: &str = r#"
        kinetics = "arrhenius"
        [[layers]]
        width = 0.5
        a = 1.0
        b = 1.0
        g = 1.0
        A = 1.0
        E = 1.0
        [[layers]]
        width = 0.5
        a = 1.0
        b = 1.0
        g = 1.0
        A = 2.0
        E = 1.0
    "#;

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn parses_two_layer() {
        let m = parse(TWO_LAYER).unwrap();
        assert_eq!(m.period(), 1.0);
        let r = m.effective_rate().unwrap();
        assert!((r.eval(0.75) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn names_offending_fields() {
        let bad = TWO_LAYER.replacen("A = 2.0", "A = -2.0", 1);
        assert_eq!(field_of(parse(&bad).unwrap_err()), "layers[1].A");
        let missing = TWO_LAYER.replacen("E = 1.0", "", 1);
        assert_eq!(field_of(parse(&missing).unwrap_err()), "layers[0].E");
        let period = format!("period = 2.0\n{TWO_LAYER}");
        assert_eq!(field_of(parse(&period).unwrap_err()), "layers.width");
        let sat = TWO_LAYER.replace("arrhenius", "saturating");
        assert_eq!(field_of(parse(&sat).unwrap_err()), "layers[0].E");
        assert!(matches!(parse("layers = 3"), Err(Error::Parse(_))));
        assert!(matches!(
            parse(&format!("{TWO_LAYER}\nextra = 1")),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn saturating_and_table() {
        let sat = r#"
            kinetics = "saturating"
            [[layers]]
            width = 1.0
            a = 1.0
            b = 1.0
            g = 1.0
            A = 1.0
            K = 1.0
        "#;
        let m = parse(sat).unwrap();
        assert_eq!(m.effective_rate().unwrap().eval(0.3), 0.5);
        let table = r#"
            kinetics = "table"
            [[layers]]
            width = 1.0
            a = 1.0
            b = 1.0
            g = 1.0
            [rate_table]
            temperatures = [0.0, 2.0]
            values = [[0.0, 2.0]]
        "#;
        let m = parse(table).unwrap();
        assert_eq!(m.effective_rate().unwrap().eval(0.3), 1.0);
    }
}
