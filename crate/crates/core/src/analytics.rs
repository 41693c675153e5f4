//! Market-share decompositions and trade-balance diagnostics.

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    expenditures, incomes, CostMatrix, CountrySet, DemandMatrix, GoodsSet, ModelError, PriceVector,
    SupplyMatrix,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("total supply is zero")]
    ZeroSupply,
    #[error("total demand is zero")]
    ZeroDemand,
    #[error("share total must be finite and positive, got {0}")]
    InvalidTotal(f64),
    #[error("inconsistent label sets for {metric} between report {left} and report {right}")]
    InconsistentSets {
        metric: &'static str,
        left: usize,
        right: usize,
    },
    #[error("dynamics need at least two reports, got {0}")]
    TooFewReports(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareMetric {
    CountrySupply,
    CountryDemand,
    GoodsSupply,
    GoodsDemand,
}

impl ShareMetric {
    pub const ALL: [ShareMetric; 4] = [
        ShareMetric::CountrySupply,
        ShareMetric::CountryDemand,
        ShareMetric::GoodsSupply,
        ShareMetric::GoodsDemand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShareMetric::CountrySupply => "country_supply_share",
            ShareMetric::CountryDemand => "country_demand_share",
            ShareMetric::GoodsSupply => "goods_supply_share",
            ShareMetric::GoodsDemand => "goods_demand_share",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityShare {
    pub entity: String,
    pub share: f64,
}

/// Supply and demand shares of one year. A vector may be empty when the
/// underlying data only covers some of the four decompositions.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ShareReport {
    pub year: Option<i32>,
    pub country_supply_shares: Vec<EntityShare>,
    pub country_demand_shares: Vec<EntityShare>,
    pub goods_supply_shares: Vec<EntityShare>,
    pub goods_demand_shares: Vec<EntityShare>,
}

impl ShareReport {
    pub fn metric(&self, metric: ShareMetric) -> &[EntityShare] {
        match metric {
            ShareMetric::CountrySupply => &self.country_supply_shares,
            ShareMetric::CountryDemand => &self.country_demand_shares,
            ShareMetric::GoodsSupply => &self.goods_supply_shares,
            ShareMetric::GoodsDemand => &self.goods_demand_shares,
        }
    }

    pub fn metric_mut(&mut self, metric: ShareMetric) -> &mut Vec<EntityShare> {
        match metric {
            ShareMetric::CountrySupply => &mut self.country_supply_shares,
            ShareMetric::CountryDemand => &mut self.country_demand_shares,
            ShareMetric::GoodsSupply => &mut self.goods_supply_shares,
            ShareMetric::GoodsDemand => &mut self.goods_demand_shares,
        }
    }

    pub fn share_of(&self, metric: ShareMetric, entity: &str) -> Option<f64> {
        self.metric(metric)
            .iter()
            .find(|e| e.entity == entity)
            .map(|e| e.share)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityDelta {
    pub entity: String,
    pub from: f64,
    pub to: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsStep {
    pub from_year: Option<i32>,
    pub to_year: Option<i32>,
    pub country_supply_deltas: Vec<EntityDelta>,
    pub country_demand_deltas: Vec<EntityDelta>,
    pub goods_supply_deltas: Vec<EntityDelta>,
    pub goods_demand_deltas: Vec<EntityDelta>,
}

impl DynamicsStep {
    pub fn deltas(&self, metric: ShareMetric) -> &[EntityDelta] {
        match metric {
            ShareMetric::CountrySupply => &self.country_supply_deltas,
            ShareMetric::CountryDemand => &self.country_demand_deltas,
            ShareMetric::GoodsSupply => &self.goods_supply_deltas,
            ShareMetric::GoodsDemand => &self.goods_demand_deltas,
        }
    }

    fn deltas_mut(&mut self, metric: ShareMetric) -> &mut Vec<EntityDelta> {
        match metric {
            ShareMetric::CountrySupply => &mut self.country_supply_deltas,
            ShareMetric::CountryDemand => &mut self.country_demand_deltas,
            ShareMetric::GoodsSupply => &mut self.goods_supply_deltas,
            ShareMetric::GoodsDemand => &mut self.goods_demand_deltas,
        }
    }

    pub fn delta_of(&self, metric: ShareMetric, entity: &str) -> Option<f64> {
        self.deltas(metric)
            .iter()
            .find(|d| d.entity == entity)
            .map(|d| d.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsReport {
    pub years: Vec<Option<i32>>,
    pub steps: Vec<DynamicsStep>,
}

/// `values[i] / total`.
pub fn shares_of_total(values: &[f64], total: f64) -> Result<Vec<f64>, AnalyticsError> {
    if !(total.is_finite() && total > 0.0) {
        return Err(AnalyticsError::InvalidTotal(total));
    }
    Ok(values.iter().map(|v| v / total).collect())
}

fn normalized(values: Vec<f64>, on_zero: AnalyticsError) -> Result<Vec<f64>, AnalyticsError> {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(on_zero);
    }
    shares_of_total(&values, total)
}

fn column_shares(m: &CostMatrix, on_zero: AnalyticsError) -> Result<Vec<f64>, AnalyticsError> {
    normalized(m.column_sums(), on_zero)
}

fn row_shares(m: &CostMatrix, on_zero: AnalyticsError) -> Result<Vec<f64>, AnalyticsError> {
    normalized(m.row_sums(), on_zero)
}

/// Each country's part of total supply.
pub fn country_supply_shares(supply: &SupplyMatrix) -> Result<Vec<f64>, AnalyticsError> {
    column_shares(supply, AnalyticsError::ZeroSupply)
}

/// Each country's part of total demand.
pub fn country_demand_shares(demand: &DemandMatrix) -> Result<Vec<f64>, AnalyticsError> {
    column_shares(demand, AnalyticsError::ZeroDemand)
}

/// Each goods category's part of total demand.
pub fn goods_demand_shares(demand: &DemandMatrix) -> Result<Vec<f64>, AnalyticsError> {
    row_shares(demand, AnalyticsError::ZeroDemand)
}

/// Each goods category's part of total supply.
pub fn goods_supply_shares(supply: &SupplyMatrix) -> Result<Vec<f64>, AnalyticsError> {
    row_shares(supply, AnalyticsError::ZeroSupply)
}

/// Export income minus import expenditure per country at `p0`. With
/// `p0 = 1` this is the raw cost-form trade balance.
pub fn trade_balances(
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
    p0: &PriceVector,
) -> Result<Vec<f64>, AnalyticsError> {
    if demand.countries() != supply.countries() {
        return Err(ModelError::DimensionMismatch {
            what: "country count of supply matrix",
            expected: demand.countries(),
            got: supply.countries(),
        }
        .into());
    }
    let d = incomes(supply, p0)?;
    let e = expenditures(demand, p0)?;
    Ok(d.iter().zip(&e).map(|(d, e)| d - e).collect())
}

fn labeled(labels: &[String], shares: Vec<f64>) -> Vec<EntityShare> {
    labels
        .iter()
        .zip(shares)
        .map(|(l, s)| EntityShare {
            entity: l.clone(),
            share: s,
        })
        .collect()
}

/// All four share decompositions of one dataset.
pub fn share_report(
    year: Option<i32>,
    countries: &CountrySet,
    goods: &GoodsSet,
    demand: &DemandMatrix,
    supply: &SupplyMatrix,
) -> Result<ShareReport, AnalyticsError> {
    for (what, expected, got) in [
        ("demand countries", countries.len(), demand.countries()),
        ("supply countries", countries.len(), supply.countries()),
        ("demand goods", goods.len(), demand.goods()),
        ("supply goods", goods.len(), supply.goods()),
    ] {
        if expected != got {
            return Err(ModelError::DimensionMismatch {
                what,
                expected,
                got,
            }
            .into());
        }
    }
    Ok(ShareReport {
        year,
        country_supply_shares: labeled(countries.labels(), country_supply_shares(supply)?),
        country_demand_shares: labeled(countries.labels(), country_demand_shares(demand)?),
        goods_supply_shares: labeled(goods.labels(), goods_supply_shares(supply)?),
        goods_demand_shares: labeled(goods.labels(), goods_demand_shares(demand)?),
    })
}

/// Year-over-year share changes between consecutive reports.
///
/// Each decomposition must be present in all reports with identical labels
/// in identical order, or absent from all of them.
pub fn share_dynamics(reports: &[ShareReport]) -> Result<DynamicsReport, AnalyticsError> {
    if reports.len() < 2 {
        return Err(AnalyticsError::TooFewReports(reports.len()));
    }
    let mut steps = Vec::with_capacity(reports.len() - 1);
    for (i, pair) in reports.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let mut step = DynamicsStep {
            from_year: a.year,
            to_year: b.year,
            country_supply_deltas: Vec::new(),
            country_demand_deltas: Vec::new(),
            goods_supply_deltas: Vec::new(),
            goods_demand_deltas: Vec::new(),
        };
        for metric in ShareMetric::ALL {
            let (x, y) = (a.metric(metric), b.metric(metric));
            let same = x.len() == y.len() && x.iter().zip(y).all(|(x, y)| x.entity == y.entity);
            if !same {
                return Err(AnalyticsError::InconsistentSets {
                    metric: metric.name(),
                    left: i,
                    right: i + 1,
                });
            }
            *step.deltas_mut(metric) = x
                .iter()
                .zip(y)
                .map(|(x, y)| EntityDelta {
                    entity: x.entity.clone(),
                    from: x.share,
                    to: y.share,
                    delta: y.share - x.share,
                })
                .collect();
        }
        steps.push(step);
    }
    Ok(DynamicsReport {
        years: reports.iter().map(|r| r.year).collect(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-15, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn country_share_examples() {
        let b = SupplyMatrix::from_rows(&[vec![5.0]]).unwrap();
        assert_eq!(country_supply_shares(&b).unwrap(), vec![1.0]);
        let b = SupplyMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        close(&country_supply_shares(&b).unwrap(), &[0.25, 0.75]);
        let c = DemandMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        close(&country_demand_shares(&c).unwrap(), &[0.5, 0.5]);
        let c = DemandMatrix::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(country_demand_shares(&c).unwrap(), vec![1.0]);
    }

    #[test]
    fn goods_share_examples() {
        let c = DemandMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]]).unwrap();
        close(&goods_demand_shares(&c).unwrap(), &[0.25, 0.25, 0.5]);
        let c = DemandMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(goods_demand_shares(&c).unwrap(), vec![1.0]);
        let b = SupplyMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 0.0]]).unwrap();
        close(&goods_supply_shares(&b).unwrap(), &[0.75, 0.25]);
        let b = SupplyMatrix::from_rows(&[vec![2.0, 1.0]]).unwrap();
        assert_eq!(goods_supply_shares(&b).unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_totals_are_errors() {
        assert_eq!(
            country_supply_shares(&SupplyMatrix::zeros(2, 2)),
            Err(AnalyticsError::ZeroSupply)
        );
        assert_eq!(
            goods_demand_shares(&DemandMatrix::zeros(2, 2)),
            Err(AnalyticsError::ZeroDemand)
        );
        assert!(shares_of_total(&[1.0], 0.0).is_err());
    }

    #[test]
    fn trade_balance_examples() {
        let c = DemandMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = SupplyMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(
            trade_balances(&c, &b, &PriceVector::ones(2)).unwrap(),
            vec![0.0, 0.0]
        );

        // supply column totals (3, 1), demand column totals (1, 3)
        let b = SupplyMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let c = DemandMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let bal = trade_balances(&c, &b, &PriceVector::ones(2)).unwrap();
        assert_eq!(bal, vec![2.0, -2.0]);
        let rows: f64 = b
            .row_sums()
            .iter()
            .zip(c.row_sums())
            .map(|(x, y)| x - y)
            .sum();
        assert_eq!(bal.iter().sum::<f64>(), rows);
    }

    fn report(year: i32, china: f64) -> ShareReport {
        ShareReport {
            year: Some(year),
            country_supply_shares: vec![
                EntityShare {
                    entity: "China".into(),
                    share: china,
                },
                EntityShare {
                    entity: "Japan".into(),
                    share: 1.0 - china,
                },
            ],
            ..ShareReport::default()
        }
    }

    #[test]
    fn dynamics_deltas() {
        let d = share_dynamics(&[report(2020, 0.28), report(2021, 0.291)]).unwrap();
        assert_eq!(d.years, vec![Some(2020), Some(2021)]);
        let delta = d.steps[0]
            .delta_of(ShareMetric::CountrySupply, "China")
            .unwrap();
        assert!((delta - 0.011).abs() < 1e-12);
        let sum: f64 = d.steps[0]
            .country_supply_deltas
            .iter()
            .map(|e| e.delta)
            .sum();
        assert!(sum.abs() < 1e-12);

        let same = share_dynamics(&[report(2020, 0.3), report(2021, 0.3)]).unwrap();
        assert!(same.steps[0]
            .country_supply_deltas
            .iter()
            .all(|d| d.delta == 0.0));
    }

    #[test]
    fn dynamics_reject_mismatched_sets() {
        let mut b = report(2021, 0.3);
        b.country_supply_shares[1].entity = "Italy".into();
        assert!(matches!(
            share_dynamics(&[report(2020, 0.2), b]),
            Err(AnalyticsError::InconsistentSets { .. })
        ));
        let mut c = report(2021, 0.3);
        c.goods_supply_shares.push(EntityShare {
            entity: "Fuels".into(),
            share: 1.0,
        });
        assert!(share_dynamics(&[report(2020, 0.2), c]).is_err());
        assert_eq!(
            share_dynamics(&[report(2020, 0.2)]),
            Err(AnalyticsError::TooFewReports(1))
        );
    }

    #[test]
    fn share_report_labels_vectors() {
        let countries = CountrySet::new(["A", "B"]).unwrap();
        let goods = GoodsSet::new(["x"]).unwrap();
        let c = DemandMatrix::from_rows(&[vec![1.0, 3.0]]).unwrap();
        let b = SupplyMatrix::from_rows(&[vec![2.0, 2.0]]).unwrap();
        let r = share_report(Some(2020), &countries, &goods, &c, &b).unwrap();
        assert_eq!(r.share_of(ShareMetric::CountryDemand, "B"), Some(0.75));
        assert_eq!(r.share_of(ShareMetric::CountrySupply, "A"), Some(0.5));
        assert_eq!(r.share_of(ShareMetric::GoodsSupply, "x"), Some(1.0));
        assert!(share_report(None, &countries, &goods, &c, &SupplyMatrix::zeros(1, 3)).is_err());
    }
}
