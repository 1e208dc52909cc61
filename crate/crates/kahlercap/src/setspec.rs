//! JSON set descriptions.
//!
//! ```json
//! {"type": "ball", "center": [0, 0], "radius": 1.0, "chart": 0}
//! {"type": "complement", "set": {"type": "annulus", "inner": 1, "outer": 2}}
//! {"type": "radial_profile", "intervals": [[0, 0.5], [2, null]]}
//! {"type": "mask", "path": "disc.pgm", "box_radius": 2.0}
//! ```
//!
//! `null` as an upper radius means `+∞`. Mask paths are relative to the
//! spec file; pixels at or above `threshold` are in the set, the top image
//! row is `Im z = +box_radius`.

use std::path::{Path, PathBuf};

use kahlercap_core::geometry::{NodeMask, SetSpec};
use kahlercap_core::C64;
use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::error::{io_err, CliError, CliResult};

// Checks run inside the visitor so serde_json positions the error at the
// number itself rather than at the end of the enclosing object.
struct Bounded {
    strict: bool,
}

impl Bounded {
    fn check<E: de::Error>(&self, v: f64) -> Result<f64, E> {
        let ok = v.is_finite() && if self.strict { v > 0.0 } else { v >= 0.0 };
        if ok {
            Ok(v)
        } else if self.strict {
            Err(E::custom(format_args!("expected a positive number, got {v}")))
        } else {
            Err(E::custom(format_args!("expected a non-negative number, got {v}")))
        }
    }
}

impl de::Visitor<'_> for Bounded {
    type Value = f64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(if self.strict { "a positive number" } else { "a non-negative number" })
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        self.check(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        self.check(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        self.check(v as f64)
    }
}

/// Strictly positive finite real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Positive(pub f64);

impl<'de> Deserialize<'de> for Positive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_f64(Bounded { strict: true }).map(Positive)
    }
}

/// Non-negative finite real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonNegative(pub f64);

impl<'de> Deserialize<'de> for NonNegative {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_f64(Bounded { strict: false }).map(NonNegative)
    }
}

/// Chart index on ℂℙ¹: 0 for `z = x0/x1`, 1 for `w = x1/x0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Chart(pub usize);

impl<'de> Deserialize<'de> for Chart {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Chart;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("chart 0 or 1")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Chart, E> {
                if v <= 1 {
                    Ok(Chart(v as usize))
                } else {
                    Err(E::custom(format_args!("chart must be 0 or 1, got {v}")))
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Chart, E> {
                Err(E::custom(format_args!("chart must be 0 or 1, got {v}")))
            }
        }
        d.deserialize_u64(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    All,
    Empty,
    Ball,
    Annulus,
    HalfPlane,
    RealLine,
    Point,
    RadialProfile,
    Mask,
    Complement,
    Union,
    Intersection,
}

/// One JSON object of a set description. All keys are listed here so the
/// parser streams and reports positions; which keys a `type` needs is
/// checked on conversion.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpecJson {
    #[serde(rename = "type")]
    pub kind: Kind,
    pub center: Option<[f64; 2]>,
    pub radius: Option<Positive>,
    pub inner: Option<NonNegative>,
    pub outer: Option<Positive>,
    pub normal: Option<[f64; 2]>,
    pub offset: Option<f64>,
    pub at: Option<[f64; 2]>,
    pub intervals: Option<Vec<(NonNegative, Option<Positive>)>>,
    pub path: Option<PathBuf>,
    pub box_radius: Option<Positive>,
    pub threshold: Option<u8>,
    #[serde(default)]
    pub chart: Chart,
    pub set: Option<Box<SetSpecJson>>,
    pub sets: Option<Vec<SetSpecJson>>,
}

impl SetSpecJson {
    /// Keys other than `type` and `chart` that are present.
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut push = |b: bool, k: &'static str| {
            if b {
                out.push(k)
            }
        };
        push(self.center.is_some(), "center");
        push(self.radius.is_some(), "radius");
        push(self.inner.is_some(), "inner");
        push(self.outer.is_some(), "outer");
        push(self.normal.is_some(), "normal");
        push(self.offset.is_some(), "offset");
        push(self.at.is_some(), "at");
        push(self.intervals.is_some(), "intervals");
        push(self.path.is_some(), "path");
        push(self.box_radius.is_some(), "box_radius");
        push(self.threshold.is_some(), "threshold");
        push(self.set.is_some(), "set");
        push(self.sets.is_some(), "sets");
        out
    }
}

fn allowed(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::All | Kind::Empty | Kind::RealLine => &[],
        Kind::Ball => &["center", "radius"],
        Kind::Annulus => &["center", "inner", "outer"],
        Kind::HalfPlane => &["normal", "offset"],
        Kind::Point => &["at"],
        Kind::RadialProfile => &["intervals"],
        Kind::Mask => &["path", "box_radius", "threshold"],
        Kind::Complement => &["set"],
        Kind::Union | Kind::Intersection => &["sets"],
    }
}

fn c(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// Parses set JSON; errors carry the line, column and field path.
pub fn parse_set_spec(text: &str, origin: &str) -> CliResult<SetSpecJson> {
    let mut de = serde_json::Deserializer::from_str(text);
    let parsed: SetSpecJson = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config {
            path: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            msg: bare_message(&inner),
        }
    })?;
    de.end().map_err(|e| CliError::Config {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        field: ".".into(),
        msg: bare_message(&e),
    })?;
    Ok(parsed)
}

// serde_json appends its own " at line L column C".
fn bare_message(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}


/// Reads and converts a set file.
pub fn load_set_spec(path: &Path) -> CliResult<SetSpec> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let json = parse_set_spec(&text, &path.display().to_string())?;
    let base = path.parent().unwrap_or(Path::new("."));
    to_core(&json, base, &path.display().to_string(), "")
}

fn semantic(origin: &str, field: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        path: origin.to_string(),
        line: 0,
        column: 0,
        field: if field.is_empty() { ".".into() } else { field.to_string() },
        msg: msg.into(),
    }
}

fn need<T: Clone>(v: &Option<T>, origin: &str, field: &str, key: &str) -> CliResult<T> {
    v.clone()
        .ok_or_else(|| semantic(origin, &format!("{field}.{key}"), format!("missing field `{key}`")))
}

/// Converts parsed JSON into a core set; `field` is the JSON path so far.
pub fn to_core(j: &SetSpecJson, base: &Path, origin: &str, field: &str) -> CliResult<SetSpec> {
    let ok = allowed(j.kind);
    if let Some(k) = j.present().into_iter().find(|k| !ok.contains(k)) {
        return Err(semantic(
            origin,
            &format!("{field}.{k}"),
            format!("field `{k}` does not apply to this set type"),
        ));
    }
    let chart = j.chart.0;
    let center = c(j.center.unwrap_or([0.0, 0.0]));
    Ok(match j.kind {
        Kind::All => SetSpec::All,
        Kind::Empty => SetSpec::Empty,
        Kind::Ball => SetSpec::Ball {
            chart,
            center,
            radius: need(&j.radius, origin, field, "radius")?.0,
        },
        Kind::Annulus => {
            let inner = need(&j.inner, origin, field, "inner")?.0;
            let outer = need(&j.outer, origin, field, "outer")?.0;
            if inner >= outer {
                return Err(semantic(origin, &format!("{field}.inner"), "inner radius must be below outer radius"));
            }
            SetSpec::Annulus {
                chart,
                center,
                inner,
                outer,
            }
        }
        Kind::HalfPlane => {
            let normal = need(&j.normal, origin, field, "normal")?;
            if normal[0] == 0.0 && normal[1] == 0.0 {
                return Err(semantic(origin, &format!("{field}.normal"), "normal must be nonzero"));
            }
            SetSpec::HalfPlane {
                chart,
                normal: c(normal),
                offset: need(&j.offset, origin, field, "offset")?,
            }
        }
        Kind::RealLine => SetSpec::RealLine,
        Kind::Point => SetSpec::Point {
            chart,
            at: c(need(&j.at, origin, field, "at")?),
        },
        Kind::RadialProfile => {
            let intervals = need(&j.intervals, origin, field, "intervals")?;
            let mut out = Vec::with_capacity(intervals.len());
            for (i, (a, b)) in intervals.iter().enumerate() {
                let b = b.map_or(f64::INFINITY, |b| b.0);
                if a.0 > b {
                    return Err(semantic(origin, &format!("{field}.intervals[{i}]"), "interval end below its start"));
                }
                out.push((a.0, b));
            }
            SetSpec::RadialProfile { chart, intervals: out }
        }
        Kind::Mask => {
            let path = need(&j.path, origin, field, "path")?;
            let box_radius = need(&j.box_radius, origin, field, "box_radius")?.0;
            let threshold = j.threshold.unwrap_or(128);
            let full = base.join(path);
            let img = image::open(&full)
                .map_err(|e| semantic(origin, &format!("{field}.path"), format!("{}: {e}", full.display())))?
                .to_luma8();
            let (w, h) = img.dimensions();
            if w != h || w < 3 {
                return Err(semantic(
                    origin,
                    &format!("{field}.path"),
                    format!("mask must be square with side at least 3, got {w}×{h}"),
                ));
            }
            let m = w as usize;
            let mut bits = vec![false; m * m];
            for (x, y, p) in img.enumerate_pixels() {
                // Row 0 of the image is the top edge, Im z = +box_radius.
                let row = m - 1 - y as usize;
                bits[row * m + x as usize] = p.0[0] >= threshold;
            }
            SetSpec::Mask(
                NodeMask::new(chart, box_radius, m, bits)
                    .map_err(|e| semantic(origin, &format!("{field}.box_radius"), e.to_string()))?,
            )
        }
        Kind::Complement => {
            let inner = j
                .set
                .as_ref()
                .ok_or_else(|| semantic(origin, &format!("{field}.set"), "missing field `set`"))?;
            to_core(inner, base, origin, &format!("{field}.set"))?.complement()
        }
        Kind::Union => SetSpec::Union(children(&need(&j.sets, origin, field, "sets")?, base, origin, field)?),
        Kind::Intersection => {
            SetSpec::Intersection(children(&need(&j.sets, origin, field, "sets")?, base, origin, field)?)
        }
    })
}

fn children(sets: &[SetSpecJson], base: &Path, origin: &str, field: &str) -> CliResult<Vec<SetSpec>> {
    sets.iter()
        .enumerate()
        .map(|(i, s)| to_core(s, base, origin, &format!("{field}.sets[{i}]")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_of(text: &str) -> CliError {
        parse_set_spec(text, "t.json").unwrap_err()
    }

    #[test]
    fn ball_round_trip() {
        let j = parse_set_spec(r#"{"type":"ball","center":[0,0],"radius":1.0,"chart":0}"#, "t").unwrap();
        let s = to_core(&j, Path::new("."), "t", "").unwrap();
        assert_eq!(s, SetSpec::ball(1.0));
        let j = parse_set_spec(r#"{"type":"radial_profile","intervals":[[0,0.5],[2,null]]}"#, "t").unwrap();
        let s = to_core(&j, Path::new("."), "t", "").unwrap();
        assert_eq!(
            s,
            SetSpec::RadialProfile {
                chart: 0,
                intervals: vec![(0.0, 0.5), (2.0, f64::INFINITY)]
            }
        );
    }

    #[test]
    fn errors_name_line_and_field() {
        let text = "{\n  \"type\": \"union\",\n  \"sets\": [\n    {\"type\": \"ball\", \"radius\": -1}\n  ]\n}";
        match err_of(text) {
            CliError::Config { line, field, msg, .. } => {
                assert_eq!(line, 4);
                assert!(field.contains("sets[0]"), "{field}");
                assert!(msg.contains("positive"), "{msg}");
            }
            e => panic!("{e:?}"),
        }
        match err_of("{\"type\": \"ball\", \"radius\": 1, \"chart\": 3}") {
            CliError::Config { msg, .. } => assert!(msg.contains("chart")),
            e => panic!("{e:?}"),
        }
        match err_of("{\"type\": \"cube\"}") {
            CliError::Config { msg, line, .. } => {
                assert!(msg.contains("cube"));
                assert_eq!(line, 1);
            }
            e => panic!("{e:?}"),
        }
        match err_of("{\"type\": \"ball\", \"radius\": 1, \"colour\": 3}") {
            CliError::Config { msg, .. } => assert!(msg.contains("colour")),
            e => panic!("{e:?}"),
        }
        assert!(matches!(err_of("{\"type\": \"ball\""), CliError::Config { .. }));
        for bad in [
            r#"{"type":"annulus","inner":2,"outer":1}"#,
            r#"{"type":"ball"}"#,
            r#"{"type":"ball","radius":1,"sets":[]}"#,
        ] {
            let j = parse_set_spec(bad, "t").unwrap();
            assert!(matches!(to_core(&j, Path::new("."), "t", ""), Err(CliError::Config { .. })), "{bad}");
        }
    }

    #[test]
    fn masks_read_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let mut pgm = b"P2\n3 3\n255\n".to_vec();
        pgm.extend_from_slice(b"255 0 0\n0 0 0\n0 0 0\n");
        std::fs::write(dir.path().join("m.pgm"), pgm).unwrap();
        let spec = dir.path().join("s.json");
        std::fs::write(&spec, r#"{"type":"mask","path":"m.pgm","box_radius":1.0}"#).unwrap();
        match load_set_spec(&spec).unwrap() {
            SetSpec::Mask(m) => {
                // Top-left pixel is the node at (−1, +1).
                assert_eq!(m.bits.iter().filter(|b| **b).count(), 1);
                assert!(m.bits[6]);
            }
            s => panic!("{s:?}"),
        }
    }
}
