//! Curves as tab-delimited text.
//!
//! ```text
//! # homwave-curve kind=t0 periods=2 bin_width=0.15625
//! # x	value	uncertainty	counts
//! 0.078125	0.98	0.031	1012
//! ```
//!
//! The first line names the abscissa kind and free-form `key=value`
//! parameters (values without spaces). The second lists the columns; the
//! first three are fixed, further columns are carried along as extras. A
//! missing uncertainty is written as `-`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::analytic::{AbscissaKind, G2Curve};
use crate::{Error, Result};

const MAGIC: &str = "# homwave-curve";

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub curve: G2Curve,
    pub params: BTreeMap<String, String>,
    /// Additional named columns, one value per sample.
    pub extra: Vec<(String, Vec<f64>)>,
}

impl CurveFile {
    pub fn new(curve: G2Curve) -> Self {
        CurveFile {
            curve,
            params: BTreeMap::new(),
            extra: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn column(mut self, name: &str, values: Vec<f64>) -> Self {
        self.extra.push((name.to_string(), values));
        self
    }

    pub fn get_param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} kind={}", self.curve.kind.as_str());
        for (k, v) in &self.params {
            let _ = write!(out, " {k}={v}");
        }
        out.push_str("\n# x\tvalue\tuncertainty");
        for (name, _) in &self.extra {
            let _ = write!(out, "\t{name}");
        }
        out.push('\n');
        for (i, s) in self.curve.samples.iter().enumerate() {
            let _ = write!(out, "{}\t{}\t", s.x, s.value);
            match s.uncertainty {
                Some(u) => {
                    let _ = write!(out, "{u}");
                }
                None => out.push('-'),
            }
            for (_, col) in &self.extra {
                let _ = write!(out, "\t{}", col.get(i).copied().unwrap_or(f64::NAN));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| bad(1, "empty curve file"))?;
        let rest = head
            .strip_prefix(MAGIC)
            .ok_or_else(|| bad(1, "missing `# homwave-curve` header"))?;
        let mut kind = None;
        let mut params = BTreeMap::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(1, format!("header token `{tok}` is not key=value")))?;
            if k == "kind" {
                kind = Some(
                    AbscissaKind::parse(v)
                        .ok_or_else(|| bad(1, format!("unknown abscissa kind `{v}`")))?,
                );
            } else {
                params.insert(k.to_string(), v.to_string());
            }
        }
        let kind = kind.ok_or_else(|| bad(1, "header lacks kind="))?;

        let (_, cols) = lines.next().ok_or_else(|| bad(2, "missing column line"))?;
        let names: Vec<&str> = cols
            .strip_prefix('#')
            .ok_or_else(|| bad(2, "column line must start with #"))?
            .split_whitespace()
            .collect();
        if names.len() < 3 || names[..3] != ["x", "value", "uncertainty"] {
            return Err(bad(2, "columns must start with x, value, uncertainty"));
        }
        let mut extra: Vec<(String, Vec<f64>)> =
            names[3..].iter().map(|n| (n.to_string(), vec![])).collect();

        let mut curve = G2Curve::new(kind);
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != names.len() {
                return Err(bad(
                    line_no,
                    format!("expected {} fields, found {}", names.len(), fields.len()),
                ));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(line_no, format!("`{s}` is not a number")))
            };
            let u = match fields[2].trim() {
                "-" => None,
                s => Some(num(s)?),
            };
            curve.push(num(fields[0])?, num(fields[1])?, u);
            for (j, col) in extra.iter_mut().enumerate() {
                col.1.push(num(fields[3 + j])?);
            }
        }
        Ok(CurveFile {
            curve,
            params,
            extra,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::Data(format!("curve file line {line}: {}", reason.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CurveFile {
        let mut c = G2Curve::new(AbscissaKind::ModulatorPhase);
        c.push(0.078125, 0.98, Some(0.031));
        c.push(0.234375, 0.5, None);
        CurveFile::new(c)
            .param("periods", 2)
            .param("bin_width", 0.15625)
            .column("counts", vec![1012.0, 7.0])
    }

    #[test]
    fn roundtrip() {
        let f = sample();
        let text = f.to_text();
        assert!(text.starts_with("# homwave-curve kind=t0 bin_width=0.15625 periods=2\n"));
        assert_eq!(CurveFile::parse(&text).unwrap(), f);
    }

    #[test]
    fn rejects_malformed() {
        assert!(CurveFile::parse("").is_err());
        assert!(CurveFile::parse("# something else\n").is_err());
        assert!(CurveFile::parse("# homwave-curve kind=bogus\n# x\tvalue\tuncertainty\n").is_err());
        let err = CurveFile::parse("# homwave-curve kind=tau\n# x\tvalue\tuncertainty\n1\tx\t-\n")
            .unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }
}
