//! Deterministic report emission.
//!
//! JSON keeps struct field order and prints every float with 17 significant
//! digits (`%.17g`), which round-trips any `f64`. CSV is long format,
//! `year,entity,metric,value`, with values at 6 significant digits (`%.6g`).

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::analytics::{DynamicsReport, ShareMetric, ShareReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// C-style `%.{digits}g`.
pub fn format_g(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Float text used in JSON: `%.17g`, with `.0` appended to integral values
/// so they stay floats.
pub fn format_json_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let s = format_g(x, 17);
    if s.contains(['.', 'e', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

struct SigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_json_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut sink: W) -> io::Result<()> {
    let formatter = SigFormatter {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = Serializer::with_formatter(&mut sink, formatter);
    value.serialize(&mut ser).map_err(io::Error::from)?;
    sink.write_all(b"\n")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(value, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("json is utf-8")
}

/// One observation of the long CSV layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub year: Option<i32>,
    pub entity: String,
    pub metric: String,
    pub value: f64,
}

impl LongRow {
    pub fn new(
        year: Option<i32>,
        entity: impl Into<String>,
        metric: impl Into<String>,
        value: f64,
    ) -> Self {
        Self {
            year,
            entity: entity.into(),
            metric: metric.into(),
            value,
        }
    }
}

pub trait LongRows {
    fn long_rows(&self) -> Vec<LongRow>;
}

impl<T: LongRows> LongRows for [T] {
    fn long_rows(&self) -> Vec<LongRow> {
        self.iter().flat_map(LongRows::long_rows).collect()
    }
}

impl<T: LongRows> LongRows for Vec<T> {
    fn long_rows(&self) -> Vec<LongRow> {
        self.as_slice().long_rows()
    }
}

pub fn write_csv<W: Write>(rows: &[LongRow], sink: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let io_err = io::Error::from;
    w.write_record(["year", "entity", "metric", "value"])
        .map_err(io_err)?;
    for r in rows {
        let year = r.year.map(|y| y.to_string()).unwrap_or_default();
        w.write_record([year.as_str(), &r.entity, &r.metric, &format_g(r.value, 6)])
            .map_err(io_err)?;
    }
    w.flush()
}

/// Writes `value` in the requested format.
pub fn emit_report<T, W>(value: &T, format: OutputFormat, sink: W) -> io::Result<()>
where
    T: Serialize + LongRows + ?Sized,
    W: Write,
{
    match format {
        OutputFormat::Json => write_json(value, sink),
        OutputFormat::Csv => write_csv(&value.long_rows(), sink),
    }
}

impl LongRows for ShareReport {
    fn long_rows(&self) -> Vec<LongRow> {
        ShareMetric::ALL
            .iter()
            .flat_map(|&m| {
                self.metric(m)
                    .iter()
                    .map(move |e| LongRow::new(self.year, &e.entity, m.name(), e.share))
            })
            .collect()
    }
}

impl LongRows for DynamicsReport {
    fn long_rows(&self) -> Vec<LongRow> {
        let mut rows = Vec::new();
        for step in &self.steps {
            for m in ShareMetric::ALL {
                let metric = format!("{}_delta", m.name());
                for d in step.deltas(m) {
                    rows.push(LongRow::new(step.to_year, &d.entity, &metric, d.delta));
                }
            }
        }
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::EntityShare;

    #[test]
    fn g_formatting_matches_printf() {
        assert_eq!(format_g(0.28, 6), "0.28");
        assert_eq!(format_g(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_g(123456789.0, 6), "1.23457e+08");
        assert_eq!(format_g(0.0001234, 6), "0.0001234");
        assert_eq!(format_g(0.00001234, 6), "1.234e-05");
        assert_eq!(format_g(-2.5, 6), "-2.5");
        assert_eq!(format_g(100.0, 6), "100");
        assert_eq!(format_g(0.1, 17), "0.10000000000000001");
        assert_eq!(format_g(0.5, 17), "0.5");
    }

    #[test]
    fn json_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, 6.02e23, -7.5e-9] {
            let s = format_json_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(serde_json::from_str::<f64>(&s).is_ok(), "{s}");
        }
        assert_eq!(format_json_float(2.0), "2.0");
    }

    #[test]
    fn json_keeps_field_order() {
        let r = ShareReport {
            year: Some(2020),
            country_supply_shares: vec![EntityShare {
                entity: "China".into(),
                share: 0.28,
            }],
            ..ShareReport::default()
        };
        let s = to_json_string(&r);
        let a = s.find("country_supply_shares").unwrap();
        let b = s.find("goods_demand_shares").unwrap();
        assert!(a < b);
        assert!(s.contains("0.28000000000000003"));
    }

    #[test]
    fn share_report_csv_is_long() {
        let r = ShareReport {
            year: Some(2020),
            country_supply_shares: vec![EntityShare {
                entity: "China".into(),
                share: 0.28,
            }],
            ..ShareReport::default()
        };
        let mut buf = Vec::new();
        emit_report(&r, OutputFormat::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "year,entity,metric,value\n2020,China,country_supply_share,0.28\n"
        );
    }
}
