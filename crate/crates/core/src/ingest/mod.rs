//! Bilateral trade-flow ingestion.
//!
//! Input is a UTF-8 CSV with the mandatory header
//! `year,reporter,partner,product,direction,value_usd` (or `value_cents`
//! for integer cents). Each row is one reported flow; `direction` is
//! `export` or `import` as seen from the reporter.

mod fixtures;

pub use fixtures::{
    caption_report, fixture_names, load_fixture, CaptionEntry, CaptionFixture, Fixture,
    InstanceFixture,
};

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{CountrySet, GoodsSet, ModelError, TradeTensors};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("missing header row")]
    MissingHeader,
    #[error("unexpected header `{found}`, expected `{expected}`")]
    BadHeader { found: String, expected: String },
    #[error("row {row}: malformed record: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: unknown direction `{token}` (expected `export` or `import`)")]
    UnknownDirection { row: usize, token: String },
    #[error("row {row}: reporter and partner are both `{country}`")]
    SelfFlow { row: usize, country: String },
    #[error("row {row}: negative value {value}")]
    NegativeValue { row: usize, value: f64 },
    #[error("record {row}: unknown {kind} label `{label}`")]
    UnknownLabel {
        row: usize,
        kind: &'static str,
        label: String,
    },
    #[error("no record matches year {0}")]
    EmptySelection(i32),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("label file: {0}")]
    Labels(#[from] ModelError),
}

impl From<csv::Error> for IngestError {
    fn from(e: csv::Error) -> Self {
        IngestError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Export,
    Import,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Export => "export",
            Direction::Import => "import",
        }
    }

    fn parse(token: &str) -> Option<Self> {
        if token.eq_ignore_ascii_case("export") {
            Some(Direction::Export)
        } else if token.eq_ignore_ascii_case("import") {
            Some(Direction::Import)
        } else {
            None
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub year: i32,
    pub reporter: String,
    pub partner: String,
    pub product: String,
    pub direction: Direction,
    /// USD.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueUnit {
    /// Decimal US dollars, column `value_usd`.
    #[default]
    Usd,
    /// Integer cents, column `value_cents`.
    Cents,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlowFormat {
    pub unit: ValueUnit,
}

impl FlowFormat {
    pub fn header(&self) -> [&'static str; 6] {
        let value = match self.unit {
            ValueUnit::Usd => "value_usd",
            ValueUnit::Cents => "value_cents",
        };
        ["year", "reporter", "partner", "product", "direction", value]
    }
}

fn parse_value(raw: &str, unit: ValueUnit, row: usize) -> Result<f64, IngestError> {
    let malformed = |reason: String| IngestError::MalformedRow { row, reason };
    let value = match unit {
        ValueUnit::Usd => raw
            .parse::<f64>()
            .map_err(|_| malformed(format!("value `{raw}` is not a number")))?,
        ValueUnit::Cents => {
            let cents = raw
                .parse::<i64>()
                .map_err(|_| malformed(format!("value `{raw}` is not an integer cent amount")))?;
            cents as f64 / 100.0
        }
    };
    if !value.is_finite() {
        return Err(malformed(format!("value `{raw}` is not finite")));
    }
    if value < 0.0 {
        return Err(IngestError::NegativeValue { row, value });
    }
    Ok(value)
}

/// Parses a flow file. Row numbers in errors count data rows from 1.
pub fn parse_flows<R: Read>(reader: R, format: FlowFormat) -> Result<Vec<FlowRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();
    let expected = format.header();
    let header = rows.next().ok_or(IngestError::MissingHeader)??;
    if header.len() != expected.len()
        || header
            .iter()
            .zip(expected)
            .any(|(h, e)| !h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(e))
    {
        return Err(IngestError::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: expected.join(","),
        });
    }

    let mut out = Vec::new();
    for (i, rec) in rows.enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 6 {
            return Err(IngestError::MalformedRow {
                row,
                reason: format!("expected 6 fields, found {}", rec.len()),
            });
        }
        let year = rec[0]
            .parse::<i32>()
            .map_err(|_| IngestError::MalformedRow {
                row,
                reason: format!("year `{}` is not an integer", &rec[0]),
            })?;
        for (idx, name) in [(1, "reporter"), (2, "partner"), (3, "product")] {
            if rec[idx].is_empty() {
                return Err(IngestError::MalformedRow {
                    row,
                    reason: format!("empty {name}"),
                });
            }
        }
        let direction = Direction::parse(&rec[4]).ok_or_else(|| IngestError::UnknownDirection {
            row,
            token: rec[4].to_string(),
        })?;
        if rec[1] == rec[2] {
            return Err(IngestError::SelfFlow {
                row,
                country: rec[1].to_string(),
            });
        }
        let value = parse_value(&rec[5], format.unit, row)?;
        out.push(FlowRecord {
            year,
            reporter: rec[1].to_string(),
            partner: rec[2].to_string(),
            product: rec[3].to_string(),
            direction,
            value,
        });
    }
    Ok(out)
}

pub fn read_flows_file(path: &Path, format: FlowFormat) -> Result<Vec<FlowRecord>, IngestError> {
    parse_flows(std::fs::File::open(path)?, format)
}

/// Writes records in the canonical USD layout. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_flows<W: Write>(records: &[FlowRecord], writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FlowFormat::default().header())?;
    for r in records {
        w.write_record([
            r.year.to_string().as_str(),
            &r.reporter,
            &r.partner,
            &r.product,
            r.direction.as_str(),
            &r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMode {
    /// Unknown labels are an error.
    #[default]
    Strict,
    /// Unknown labels are skipped and counted.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub tensors: TradeTensors,
    pub aggregated: usize,
    /// Records of the selected year dropped for unknown labels.
    pub skipped: usize,
    /// Records belonging to other years.
    pub other_years: usize,
}

/// Neumaier-compensated accumulator so results do not depend on record order
/// beyond the last bit.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Sums the selected year's records into import/export tensors over the
/// given country and goods sets. Duplicate keys add up.
pub fn aggregate(
    records: &[FlowRecord],
    countries: &CountrySet,
    goods: &GoodsSet,
    year: i32,
    mode: LabelMode,
) -> Result<Aggregation, IngestError> {
    let (m, n) = (countries.len(), goods.len());
    let mut imports = vec![Compensated::default(); m * m * n];
    let mut exports = vec![Compensated::default(); m * m * n];
    let (mut aggregated, mut skipped, mut other_years) = (0, 0, 0);

    for (i, r) in records.iter().enumerate() {
        if r.year != year {
            other_years += 1;
            continue;
        }
        let lookups = [
            ("country", &r.reporter, countries.index_of(&r.reporter)),
            ("country", &r.partner, countries.index_of(&r.partner)),
            ("goods", &r.product, goods.index_of(&r.product)),
        ];
        let resolved: Option<Vec<usize>> = lookups.iter().map(|(_, _, idx)| *idx).collect();
        let Some(idx) = resolved else {
            match mode {
                LabelMode::Lenient => {
                    skipped += 1;
                    continue;
                }
                LabelMode::Strict => {
                    let (kind, label, _) = lookups
                        .iter()
                        .find(|(_, _, idx)| idx.is_none())
                        .expect("some lookup failed");
                    return Err(IngestError::UnknownLabel {
                        row: i + 1,
                        kind,
                        label: (*label).clone(),
                    });
                }
            }
        };
        let (k, j, s) = (idx[0], idx[1], idx[2]);
        let cell = (k * m + j) * n + s;
        match r.direction {
            Direction::Import => imports[cell].add(r.value),
            Direction::Export => exports[cell].add(r.value),
        }
        aggregated += 1;
    }
    if aggregated + skipped == 0 {
        return Err(IngestError::EmptySelection(year));
    }
    let tensors = TradeTensors::from_flat(
        m,
        n,
        year,
        imports.into_iter().map(Compensated::value).collect(),
        exports.into_iter().map(Compensated::value).collect(),
    )?;
    Ok(Aggregation {
        tensors,
        aggregated,
        skipped,
        other_years,
    })
}

/// One label per line; blank lines are ignored, order is kept.
pub fn parse_label_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

pub fn read_goods_set(path: &Path) -> Result<GoodsSet, IngestError> {
    Ok(GoodsSet::new(parse_label_list(&std::fs::read_to_string(
        path,
    )?))?)
}

pub fn read_country_set(path: &Path) -> Result<CountrySet, IngestError> {
    Ok(CountrySet::new(parse_label_list(
        &std::fs::read_to_string(path)?,
    ))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "year,reporter,partner,product,direction,value_usd\n";

    fn parse(body: &str) -> Result<Vec<FlowRecord>, IngestError> {
        parse_flows(format!("{HEADER}{body}").as_bytes(), FlowFormat::default())
    }

    #[test]
    fn parses_a_record() {
        let r = parse("2020,China,Canada,Fuels,export,1000.5\n").unwrap();
        assert_eq!(
            r,
            vec![FlowRecord {
                year: 2020,
                reporter: "China".into(),
                partner: "Canada".into(),
                product: "Fuels".into(),
                direction: Direction::Export,
                value: 1000.5,
            }]
        );
    }

    #[test]
    fn row_errors() {
        assert!(matches!(
            parse("2020,China,China,Fuels,export,5\n"),
            Err(IngestError::SelfFlow { row: 1, .. })
        ));
        assert!(matches!(
            parse("2020,China,Canada,Fuels,north,5\n"),
            Err(IngestError::UnknownDirection { row: 1, .. })
        ));
        assert!(matches!(
            parse("2020,China,Canada,Fuels,export,5\n2020,China,Canada,Fuels,export\n"),
            Err(IngestError::MalformedRow { row: 2, .. })
        ));
        assert!(matches!(
            parse("2020,China,Canada,Fuels,export,abc\n"),
            Err(IngestError::MalformedRow { row: 1, .. })
        ));
        assert!(matches!(
            parse("2020,China,Canada,Fuels,export,inf\n"),
            Err(IngestError::MalformedRow { row: 1, .. })
        ));
        assert!(matches!(
            parse("2020,China,Canada,Fuels,import,-3\n"),
            Err(IngestError::NegativeValue { row: 1, .. })
        ));
        assert!(matches!(
            parse_flows("a,b,c\n".as_bytes(), FlowFormat::default()),
            Err(IngestError::BadHeader { .. })
        ));
        assert!(matches!(
            parse_flows("".as_bytes(), FlowFormat::default()),
            Err(IngestError::MissingHeader)
        ));
    }

    #[test]
    fn cents_unit() {
        let text = "year,reporter,partner,product,direction,value_cents\n2021,A,B,x,import,12345\n";
        let fmt = FlowFormat {
            unit: ValueUnit::Cents,
        };
        let r = parse_flows(text.as_bytes(), fmt).unwrap();
        assert_eq!(r[0].value, 123.45);
        let bad = "year,reporter,partner,product,direction,value_cents\n2021,A,B,x,import,1.5\n";
        assert!(matches!(
            parse_flows(bad.as_bytes(), fmt),
            Err(IngestError::MalformedRow { .. })
        ));
    }

    fn sets() -> (CountrySet, GoodsSet) {
        (
            CountrySet::new(["A", "B"]).unwrap(),
            GoodsSet::new(["x", "y"]).unwrap(),
        )
    }

    #[test]
    fn duplicates_are_summed() {
        let recs = parse("2020,A,B,x,import,3\n2020,A,B,x,import,4\n").unwrap();
        let (c, g) = sets();
        let agg = aggregate(&recs, &c, &g, 2020, LabelMode::Strict).unwrap();
        assert_eq!(agg.tensors.import(0, 1, 0), 7.0);
        assert_eq!(agg.aggregated, 2);
    }

    #[test]
    fn wrong_year_is_empty_selection() {
        let recs = parse("2019,A,B,x,import,3\n").unwrap();
        let (c, g) = sets();
        assert!(matches!(
            aggregate(&recs, &c, &g, 2020, LabelMode::Strict),
            Err(IngestError::EmptySelection(2020))
        ));
    }

    #[test]
    fn directions_route_to_their_tensor() {
        let recs = parse(
            "2020,A,B,x,import,1\n2020,A,B,y,export,2\n2020,B,A,y,import,3\n2020,B,A,x,export,4\n",
        )
        .unwrap();
        let (c, g) = sets();
        let t = aggregate(&recs, &c, &g, 2020, LabelMode::Strict)
            .unwrap()
            .tensors;
        assert_eq!(t.import(0, 1, 0), 1.0);
        assert_eq!(t.export(0, 1, 1), 2.0);
        assert_eq!(t.import(1, 0, 1), 3.0);
        assert_eq!(t.export(1, 0, 0), 4.0);
        assert_eq!(t.imports_flat().iter().sum::<f64>(), 4.0);
        assert_eq!(t.exports_flat().iter().sum::<f64>(), 6.0);
    }

    #[test]
    fn strict_and_lenient_labels() {
        let recs =
            parse("2020,A,B,x,import,1\n2020,A,Z,x,import,2\n2020,A,B,w,export,1\n").unwrap();
        let (c, g) = sets();
        match aggregate(&recs, &c, &g, 2020, LabelMode::Strict) {
            Err(IngestError::UnknownLabel { row, kind, label }) => {
                assert_eq!((row, kind, label.as_str()), (2, "country", "Z"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let agg = aggregate(&recs, &c, &g, 2020, LabelMode::Lenient).unwrap();
        assert_eq!((agg.aggregated, agg.skipped), (1, 2));
        assert_eq!(agg.aggregated + agg.skipped, recs.len());
    }

    #[test]
    fn label_lists() {
        assert_eq!(parse_label_list("a\n\n b \nc\n"), vec!["a", "b", "c"]);
        assert!(GoodsSet::new(parse_label_list("a\na\n")).is_err());
    }
}
