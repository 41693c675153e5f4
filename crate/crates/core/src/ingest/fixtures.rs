//! Bundled datasets: published share captions for 2020–2022 and two small
//! synthetic instances.
//!
//! Caption fixtures carry the printed share of each entity as a total of a
//! unit market, so their shares are `value / 1` and need not sum to one
//! (the printed values are rounded inconsistently).

use crate::analytics::{shares_of_total, AnalyticsError, EntityShare, ShareMetric, ShareReport};
use crate::model::{CountrySet, DemandMatrix, GoodsSet, SupplyMatrix};

use super::IngestError;

const CAPTIONS: &str = include_str!("../../data/captions.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionEntry {
    pub entity: String,
    /// Value as printed.
    pub text: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionFixture {
    pub name: String,
    pub figure: u8,
    pub year: i32,
    pub metric: ShareMetric,
    pub entries: Vec<CaptionEntry>,
    pub declared_total: f64,
}

impl CaptionFixture {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn share_report(&self) -> Result<ShareReport, AnalyticsError> {
        let shares = shares_of_total(&self.values(), self.declared_total)?;
        let mut report = ShareReport {
            year: Some(self.year),
            ..ShareReport::default()
        };
        *report.metric_mut(self.metric) = self
            .entries
            .iter()
            .zip(shares)
            .map(|(e, share)| EntityShare {
                entity: e.entity.clone(),
                share,
            })
            .collect();
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFixture {
    pub name: String,
    pub goods: GoodsSet,
    pub countries: CountrySet,
    pub demand: DemandMatrix,
    pub supply: SupplyMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fixture {
    Caption(CaptionFixture),
    Instance(InstanceFixture),
}

impl Fixture {
    pub fn name(&self) -> &str {
        match self {
            Fixture::Caption(c) => &c.name,
            Fixture::Instance(i) => &i.name,
        }
    }
}

fn parse_captions() -> Vec<CaptionFixture> {
    let mut out: Vec<CaptionFixture> = Vec::new();
    for line in CAPTIONS.lines().skip(1).filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let figure: u8 = f[0].parse().expect("bundled figure number");
        let year: i32 = f[1].parse().expect("bundled year");
        let metric = ShareMetric::parse(f[2]).expect("bundled metric");
        let entry = CaptionEntry {
            entity: f[3].to_string(),
            text: f[4].to_string(),
            value: f[4].parse().expect("bundled value"),
        };
        match out.last_mut() {
            Some(last) if last.figure == figure => last.entries.push(entry),
            _ => out.push(CaptionFixture {
                name: format!("fig{figure}_{year}"),
                figure,
                year,
                metric,
                entries: vec![entry],
                declared_total: 1.0,
            }),
        }
    }
    out
}

fn instance(name: &str, demand: [[f64; 2]; 2], supply: [[f64; 2]; 2]) -> InstanceFixture {
    let rows = |m: [[f64; 2]; 2]| m.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    InstanceFixture {
        name: name.to_string(),
        goods: GoodsSet::new(["good_1", "good_2"]).expect("static labels"),
        countries: CountrySet::new(["country_1", "country_2"]).expect("static labels"),
        demand: DemandMatrix::from_rows(&rows(demand)).expect("static matrix"),
        supply: SupplyMatrix::from_rows(&rows(supply)).expect("static matrix"),
    }
}

fn instances() -> [InstanceFixture; 2] {
    [
        // each country buys what the other sells: zero trade balances
        instance(
            "ideal_2x2",
            [[1.0, 0.0], [0.0, 1.0]],
            [[0.0, 1.0], [1.0, 0.0]],
        ),
        // nobody imports goods 2, so it must be priced at zero
        instance(
            "degenerate_2x2",
            [[1.0, 1.0], [0.0, 0.0]],
            [[1.0, 1.0], [1.0, 1.0]],
        ),
    ]
}

pub fn fixture_names() -> Vec<String> {
    parse_captions()
        .into_iter()
        .map(|c| c.name)
        .chain(instances().into_iter().map(|i| i.name))
        .collect()
}

pub fn load_fixture(name: &str) -> Result<Fixture, IngestError> {
    if let Some(c) = parse_captions().into_iter().find(|c| c.name == name) {
        return Ok(Fixture::Caption(c));
    }
    instances()
        .into_iter()
        .find(|i| i.name == name)
        .map(Fixture::Instance)
        .ok_or_else(|| IngestError::UnknownFixture(name.to_string()))
}

/// Combines the four caption figures of one year into a single report.
pub fn caption_report(year: i32) -> Result<ShareReport, IngestError> {
    let figures: Vec<CaptionFixture> = parse_captions()
        .into_iter()
        .filter(|c| c.year == year)
        .collect();
    if figures.is_empty() {
        return Err(IngestError::UnknownFixture(format!("captions for {year}")));
    }
    let mut report = ShareReport {
        year: Some(year),
        ..ShareReport::default()
    };
    for fig in figures {
        let part = fig.share_report().expect("caption totals are positive");
        *report.metric_mut(fig.metric) = part.metric(fig.metric).to_vec();
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_figures_and_two_instances() {
        let names = fixture_names();
        assert_eq!(names.len(), 14);
        assert_eq!(names[0], "fig1_2020");
        assert_eq!(names[11], "fig12_2022");
        assert!(names.contains(&"degenerate_2x2".to_string()));
    }

    #[test]
    fn fig3_caption_values() {
        let Fixture::Caption(c) = load_fixture("fig3_2022").unwrap() else {
            panic!("caption fixture expected");
        };
        assert_eq!(c.metric, ShareMetric::CountrySupply);
        assert_eq!(c.entries[0].entity, "Canada");
        assert_eq!(c.entries[0].text, "0.123");
        assert_eq!(c.entries[1].entity, "China");
        assert_eq!(c.entries[1].value, 0.281);
    }

    #[test]
    fn degenerate_instance() {
        let Fixture::Instance(i) = load_fixture("degenerate_2x2").unwrap() else {
            panic!("instance fixture expected");
        };
        assert_eq!(i.demand.rows(), vec![vec![1.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(i.supply.rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(
            load_fixture("nope"),
            Err(IngestError::UnknownFixture(_))
        ));
    }

    #[test]
    fn caption_report_combines_four_figures() {
        let r = caption_report(2021).unwrap();
        assert_eq!(r.share_of(ShareMetric::CountrySupply, "China"), Some(0.291));
        assert_eq!(
            r.share_of(ShareMetric::CountryDemand, "United States"),
            Some(0.3409)
        );
        assert_eq!(r.share_of(ShareMetric::GoodsDemand, "Fuels"), Some(0.058));
        assert_eq!(r.share_of(ShareMetric::GoodsSupply, "Fuels"), Some(0.05));
        assert!(caption_report(2019).is_err());
    }
}
