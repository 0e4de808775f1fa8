//! File formats: canonical instance JSON and solver result JSON.
//!
//! Floats are written like C's `%.17g`, so every value survives a
//! load/write cycle exactly and identical instances serialize to identical
//! bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::error::{CngError, Result};
use crate::model::CngInstance;
use crate::zeroregrets::EquilibriumResult;

/// Formats `x` with 17 significant digits the way `%.17g` does.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = usize::try_from(16 - exp).expect("exponent below 17");
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Compact JSON with `%.17g` floats.
#[derive(Debug, Default, Clone, Copy)]
pub struct G17Formatter;

impl Formatter for G17Formatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            writer.write_all(format_g17(value).as_bytes())
        } else {
            CompactFormatter.write_null(writer)
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as one line of canonical JSON followed by a newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17Formatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

/// Parses and validates an instance.
pub fn instance_from_json(text: &str) -> Result<CngInstance> {
    let inst: CngInstance = serde_json::from_str(text)?;
    inst.validate()?;
    Ok(inst)
}

pub fn instance_to_json(inst: &CngInstance) -> Result<String> {
    to_canonical_json(inst)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<CngInstance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &CngInstance) -> Result<()> {
    write_text(path, &instance_to_json(inst)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_text(path, &to_canonical_json(value)?)
}

fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Solver output as written by `cng solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub x: Vec<u8>,
    pub alpha: Vec<u8>,
    pub phi: f64,
    pub exact: bool,
    pub defender_payoff: f64,
    pub attacker_payoff: f64,
    pub objective: String,
    pub objective_value: f64,
    pub iterations: usize,
    pub cuts: usize,
    pub phi_ub: f64,
    pub wall_time_s: f64,
    pub status: String,
}

impl From<&EquilibriumResult> for ResultFile {
    fn from(r: &EquilibriumResult) -> Self {
        Self {
            x: r.profile.defense_bits(),
            alpha: r.profile.attack_bits(),
            phi: r.phi,
            exact: r.exact,
            defender_payoff: r.defender_value,
            attacker_payoff: r.attacker_value,
            objective: r.objective.as_str().to_string(),
            objective_value: r.objective_value,
            iterations: r.iterations,
            cuts: r.cuts_added,
            phi_ub: r.phi_ub_final,
            wall_time_s: r.wall_time.as_secs_f64(),
            status: r.status.as_str().to_string(),
        }
    }
}

impl ResultFile {
    pub fn proved(&self) -> bool {
        self.status == crate::zeroregrets::SolveStatus::ProvedOptimalNe.as_str()
    }

    pub fn check_shape(&self, n: usize) -> Result<()> {
        for (field, v) in [("x", &self.x), ("alpha", &self.alpha)] {
            if v.len() != n {
                return Err(CngError::ShapeMismatch {
                    field,
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}
