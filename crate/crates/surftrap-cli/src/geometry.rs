//! Line-oriented geometry files.
//!
//! ```text
//! # comment
//! [potentials]
//! rf = 1
//! gnd = 0
//!
//! [curve inner electrode=rf outside=gnd]
//! # t x y g [alpha]
//! 0.0 1.0 0.0 0.1
//! ```
//!
//! A curve is closed when its last row repeats the first position. The
//! `outside` attribute defaults to `ground`, which is at potential 0 unless
//! the potentials section says otherwise. The optional fifth column gives the
//! polarization amplitude at the sample; it must be present on all rows of a
//! curve or on none.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use surftrap::gapsolver::{ElectrodePotentials, GapCurve, GapSample};

/// Implicit label of the region outside a curve.
pub const DEFAULT_OUTSIDE: &str = "ground";

/// A malformed geometry file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ParseError {}

/// One `[curve ...]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub id: String,
    pub electrode: String,
    pub outside: String,
    pub samples: Vec<GapSample>,
    pub alphas: Option<Vec<f64>>,
    /// Line of the section header, for error reports.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeometryFile {
    pub potentials: ElectrodePotentials,
    pub curves: Vec<CurveRecord>,
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
}

enum Section {
    None,
    Potentials,
    Curve,
}

pub fn parse(text: &str) -> Result<GeometryFile, ParseError> {
    let mut out = GeometryFile::default();
    let mut section = Section::None;
    let mut alpha_cols: Option<bool> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| ParseError { line, msg };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| err("section header must end with ']'".into()))?;
            let mut words = inner.split_whitespace();
            match words.next() {
                Some("potentials") => {
                    if let Some(w) = words.next() {
                        return Err(err(format!("unexpected '{w}' in potentials header")));
                    }
                    section = Section::Potentials;
                }
                Some("curve") => {
                    let id = words.next().ok_or_else(|| err("curve section needs an id".into()))?;
                    if !is_name(id) {
                        return Err(err(format!("invalid curve id '{id}'")));
                    }
                    if out.curves.iter().any(|c| c.id == id) {
                        return Err(err(format!("duplicate curve id '{id}'")));
                    }
                    let mut electrode = None;
                    let mut outside = None;
                    for w in words {
                        let (k, v) = w
                            .split_once('=')
                            .ok_or_else(|| err(format!("expected key=value, found '{w}'")))?;
                        if !is_name(v) {
                            return Err(err(format!("invalid region label '{v}'")));
                        }
                        let slot = match k {
                            "electrode" => &mut electrode,
                            "outside" => &mut outside,
                            _ => return Err(err(format!("unknown curve attribute '{k}'"))),
                        };
                        if slot.replace(v.to_string()).is_some() {
                            return Err(err(format!("attribute '{k}' given twice")));
                        }
                    }
                    let electrode = electrode.ok_or_else(|| err("curve section needs electrode=<label>".into()))?;
                    out.curves.push(CurveRecord {
                        id: id.to_string(),
                        electrode,
                        outside: outside.unwrap_or_else(|| DEFAULT_OUTSIDE.to_string()),
                        samples: Vec::new(),
                        alphas: None,
                        line,
                    });
                    alpha_cols = None;
                    section = Section::Curve;
                }
                Some(other) => return Err(err(format!("unknown section '{other}'"))),
                None => return Err(err("empty section header".into())),
            }
            continue;
        }
        match section {
            Section::None => return Err(err("data before any section".into())),
            Section::Potentials => {
                let (k, v) = body
                    .split_once('=')
                    .ok_or_else(|| err("expected <label> = <potential>".into()))?;
                let (k, v) = (k.trim(), v.trim());
                if !is_name(k) {
                    return Err(err(format!("invalid region label '{k}'")));
                }
                let value: f64 = v.parse().map_err(|_| err(format!("invalid potential '{v}'")))?;
                if !value.is_finite() {
                    return Err(err(format!("non-finite potential for '{k}'")));
                }
                if out.potentials.insert(k.to_string(), value).is_some() {
                    return Err(err(format!("duplicate potential for '{k}'")));
                }
            }
            Section::Curve => {
                let nums: Vec<f64> = body
                    .split_whitespace()
                    .map(|w| w.parse::<f64>().map_err(|_| err(format!("invalid number '{w}'"))))
                    .collect::<Result<_, _>>()?;
                if nums.len() != 4 && nums.len() != 5 {
                    return Err(err(format!("expected 't x y g [alpha]', found {} fields", nums.len())));
                }
                if nums.iter().any(|v| !v.is_finite()) {
                    return Err(err("non-finite value".into()));
                }
                let has_alpha = nums.len() == 5;
                if *alpha_cols.get_or_insert(has_alpha) != has_alpha {
                    return Err(err(
                        "the amplitude column must be given on all rows of a curve or none".into()
                    ));
                }
                let c = out.curves.last_mut().expect("curve section is open");
                if let Some(prev) = c.samples.last() {
                    if !(nums[0] > prev.t) {
                        return Err(err(format!("parameter {} does not increase", nums[0])));
                    }
                }
                if nums[3] < 0.0 {
                    return Err(err("gap width must be non-negative".into()));
                }
                c.samples.push(GapSample::new(nums[0], nums[1], nums[2], nums[3]));
                if has_alpha {
                    c.alphas.get_or_insert_with(Vec::new).push(nums[4]);
                }
            }
        }
    }
    if out.curves.is_empty() {
        return Err(ParseError {
            line: text.lines().count().max(1),
            msg: "no curve sections".into(),
        });
    }
    for c in &out.curves {
        if c.samples.len() < 2 {
            return Err(ParseError {
                line: c.line,
                msg: format!("curve '{}' needs at least two rows", c.id),
            });
        }
    }
    let uses_default = out.curves.iter().any(|c| c.outside == DEFAULT_OUTSIDE);
    if uses_default {
        out.potentials.entry(DEFAULT_OUTSIDE.to_string()).or_insert(0.0);
    }
    for c in &out.curves {
        for label in [&c.electrode, &c.outside] {
            if !out.potentials.contains_key(label) {
                return Err(ParseError {
                    line: c.line,
                    msg: format!("curve '{}': region '{label}' has no potential", c.id),
                });
            }
        }
    }
    Ok(out)
}

impl GeometryFile {
    /// Library curves, with amplitudes from the file where given. Closed
    /// curves drop the repeated last row, so a trailing amplitude is ignored.
    pub fn curves(&self) -> Result<Vec<GapCurve>, ParseError> {
        self.curves
            .iter()
            .map(|c| {
                let at = |e: surftrap::Error| ParseError {
                    line: c.line,
                    msg: e.to_string(),
                };
                let curve = GapCurve::new(&c.id, &c.electrode, &c.outside, c.samples.clone()).map_err(at)?;
                match &c.alphas {
                    Some(a) => curve.with_alphas(&a[..curve.samples().len()]).map_err(at),
                    None => Ok(curve),
                }
            })
            .collect()
    }
}

/// Geometry file text for solved curves, with the amplitude column filled.
pub fn write(potentials: &ElectrodePotentials, curves: &[GapCurve], fmt_num: impl Fn(f64) -> String) -> String {
    let mut s = String::from("[potentials]\n");
    let labels: BTreeMap<_, _> = potentials.iter().collect();
    for (k, v) in labels {
        let _ = writeln!(s, "{k} = {}", fmt_num(*v));
    }
    for c in curves {
        let _ = writeln!(
            s,
            "\n[curve {} electrode={} outside={}]",
            c.id(),
            c.electrode(),
            c.outside()
        );
        s.push_str("# t x y g alpha\n");
        let mut rows: Vec<GapSample> = c.samples().to_vec();
        if c.is_closed() {
            let (_, t1) = c.t_range();
            let first = rows[0];
            rows.push(GapSample::new(t1, first.x, first.y, first.g));
        }
        for r in rows {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                fmt_num(r.t),
                fmt_num(r.x),
                fmt_num(r.y),
                fmt_num(r.g),
                fmt_num(c.alpha(r.t))
            );
        }
    }
    s
}
