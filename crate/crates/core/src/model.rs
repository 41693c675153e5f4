//! Domain types of the cost-form exchange model and the deterministic
//! constructions built from bilateral trade tensors: demand and supply
//! matrices, the supply vector, country incomes and expenditures.
//!
//! Matrices are indexed `[goods][country]` (n rows, M columns). Tensors are
//! indexed `[reporter][partner][goods]`. All values are USD in the cost form.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("label set is empty")]
    EmptyLabels,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("blank label at position {0}")]
    BlankLabel(usize),
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} entry at {index} is not a finite nonnegative value: {value}")]
    InvalidEntry {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("self-flow for country {country} in {what} tensor (goods {goods})")]
    NonZeroDiagonal {
        what: &'static str,
        country: usize,
        goods: usize,
    },
    #[error("price vector is all zero")]
    ZeroPrices,
    #[error("price vector is empty")]
    EmptyPrices,
}

/// Ordered, unique, nonempty list of labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct LabelSet(Vec<String>);

impl LabelSet {
    pub fn new<I, S>(labels: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ModelError::EmptyLabels);
        }
        for (i, label) in labels.iter().enumerate() {
            if label.trim().is_empty() {
                return Err(ModelError::BlankLabel(i));
            }
            if labels[..i].contains(label) {
                return Err(ModelError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<&str> {
        self.0.get(i).map(String::as_str)
    }
}

/// Goods categories (rows of the cost matrices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct GoodsSet(pub LabelSet);

/// Participating countries (columns of the cost matrices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CountrySet(pub LabelSet);

pub const DEFAULT_GOODS: [&str; 16] = [
    "Animal",
    "Vegetable",
    "FoodProd",
    "Minerals",
    "Fuels",
    "Chemicals",
    "PlastiRub",
    "HidesSkin",
    "Wood",
    "TextCloth",
    "Footwear",
    "StoneGlas",
    "Metals",
    "MachElec",
    "Transport",
    "Miscellan",
];

pub const DEFAULT_COUNTRIES: [&str; 8] = [
    "Canada",
    "China",
    "Germany",
    "France",
    "United Kingdom",
    "Italy",
    "Japan",
    "United States",
];

impl GoodsSet {
    pub fn new<I, S>(labels: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LabelSet::new(labels).map(Self)
    }

    /// The sixteen product groups used for the G7+China study.
    pub fn standard() -> Self {
        Self::new(DEFAULT_GOODS).expect("static goods list is valid")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        self.0.labels()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.index_of(label)
    }
}

impl CountrySet {
    pub fn new<I, S>(labels: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LabelSet::new(labels).map(Self)
    }

    /// Canada, China, Germany, France, United Kingdom, Italy, Japan, United States.
    pub fn standard() -> Self {
        Self::new(DEFAULT_COUNTRIES).expect("static country list is valid")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        self.0.labels()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.index_of(label)
    }
}

fn check_entries(what: &'static str, data: &[f64]) -> Result<(), ModelError> {
    match data
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        Some((index, &value)) => Err(ModelError::InvalidEntry { what, index, value }),
        None => Ok(()),
    }
}

/// Dense goods × country matrix of nonnegative USD values, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix {
    goods: usize,
    countries: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn zeros(goods: usize, countries: usize) -> Self {
        Self {
            goods,
            countries,
            data: vec![0.0; goods * countries],
        }
    }

    /// Builds from row-major data of length `goods * countries`.
    pub fn from_row_major(
        goods: usize,
        countries: usize,
        data: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if data.len() != goods * countries {
            return Err(ModelError::DimensionMismatch {
                what: "matrix data",
                expected: goods * countries,
                got: data.len(),
            });
        }
        check_entries("matrix", &data)?;
        Ok(Self {
            goods,
            countries,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let goods = rows.len();
        let countries = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(goods * countries);
        for row in rows {
            if row.len() != countries {
                return Err(ModelError::DimensionMismatch {
                    what: "matrix row",
                    expected: countries,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(goods, countries, data)
    }

    pub fn goods(&self) -> usize {
        self.goods
    }

    pub fn countries(&self) -> usize {
        self.countries
    }

    #[inline]
    pub fn get(&self, s: usize, k: usize) -> f64 {
        self.data[s * self.countries + k]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.countries..(s + 1) * self.countries]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.goods).map(|s| self.row(s).to_vec()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.goods).map(|s| self.row(s).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.countries];
        for s in 0..self.goods {
            for (acc, v) in sums.iter_mut().zip(self.row(s)) {
                *acc += v;
            }
        }
        sums
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn column_is_zero(&self, k: usize) -> bool {
        (0..self.goods).all(|s| self.get(s, k) == 0.0)
    }

    /// `out[k] = Σ_s p[s]·m[s][k]`.
    pub fn weighted_column_sums(&self, p: &[f64]) -> Vec<f64> {
        debug_assert_eq!(p.len(), self.goods);
        let mut out = vec![0.0; self.countries];
        for (s, &ps) in p.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for (acc, v) in out.iter_mut().zip(self.row(s)) {
                *acc += ps * v;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::from_row_major(
            self.goods,
            self.countries,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }
}

macro_rules! matrix_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize)]
        #[serde(transparent)]
        pub struct $name(pub CostMatrix);

        impl $name {
            pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
                CostMatrix::from_rows(rows).map(Self)
            }

            pub fn from_row_major(
                goods: usize,
                countries: usize,
                data: Vec<f64>,
            ) -> Result<Self, ModelError> {
                CostMatrix::from_row_major(goods, countries, data).map(Self)
            }

            pub fn zeros(goods: usize, countries: usize) -> Self {
                Self(CostMatrix::zeros(goods, countries))
            }
        }

        impl std::ops::Deref for $name {
            type Target = CostMatrix;

            fn deref(&self) -> &CostMatrix {
                &self.0
            }
        }
    };
}

matrix_newtype!(
    /// `c[s][k]`: value of goods `s` imported by country `k`.
    DemandMatrix
);
matrix_newtype!(
    /// `b[s][k]`: value of goods `s` exported by country `k`.
    SupplyMatrix
);

/// `psi[s]`: total value of goods `s` supplied by all countries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SupplyVector(pub Vec<f64>);

impl SupplyVector {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Nonnegative, finite, not-all-zero relative prices.
///
/// The model is homogeneous of degree zero in prices, so scale is a free
/// gauge; [`PriceVector::normalized`] gives the canonical max-one form.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self, ModelError> {
        if prices.is_empty() {
            return Err(ModelError::EmptyPrices);
        }
        check_entries("price", &prices)?;
        if prices.iter().all(|&p| p == 0.0) {
            return Err(ModelError::ZeroPrices);
        }
        Ok(Self(prices))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n.max(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn normalized(&self) -> Self {
        let m = self.max();
        Self(self.0.iter().map(|p| p / m).collect())
    }

    pub fn scaled(&self, t: f64) -> Result<Self, ModelError> {
        Self::new(self.0.iter().map(|p| p * t).collect())
    }
}

/// Bilateral import and export value tensors for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeTensors {
    countries: usize,
    goods: usize,
    year: i32,
    imports: Vec<f64>,
    exports: Vec<f64>,
}

impl TradeTensors {
    pub fn zeros(countries: usize, goods: usize, year: i32) -> Self {
        let len = countries * countries * goods;
        Self {
            countries,
            goods,
            year,
            imports: vec![0.0; len],
            exports: vec![0.0; len],
        }
    }

    /// Builds from flat `[reporter][partner][goods]` arrays.
    pub fn from_flat(
        countries: usize,
        goods: usize,
        year: i32,
        imports: Vec<f64>,
        exports: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let len = countries * countries * goods;
        for (what, data) in [("imports", &imports), ("exports", &exports)] {
            if data.len() != len {
                return Err(ModelError::DimensionMismatch {
                    what,
                    expected: len,
                    got: data.len(),
                });
            }
            check_entries(what, data)?;
            for k in 0..countries {
                for s in 0..goods {
                    if data[(k * countries + k) * goods + s] != 0.0 {
                        return Err(ModelError::NonZeroDiagonal {
                            what,
                            country: k,
                            goods: s,
                        });
                    }
                }
            }
        }
        Ok(Self {
            countries,
            goods,
            year,
            imports,
            exports,
        })
    }

    pub fn countries(&self) -> usize {
        self.countries
    }

    pub fn goods(&self) -> usize {
        self.goods
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    #[inline]
    fn offset(&self, k: usize, j: usize, s: usize) -> usize {
        (k * self.countries + j) * self.goods + s
    }

    /// Import of goods `s` by country `k` from country `j`.
    pub fn import(&self, k: usize, j: usize, s: usize) -> f64 {
        self.imports[self.offset(k, j, s)]
    }

    /// Export of goods `s` by country `k` to country `j`.
    pub fn export(&self, k: usize, j: usize, s: usize) -> f64 {
        self.exports[self.offset(k, j, s)]
    }

    pub fn imports_flat(&self) -> &[f64] {
        &self.imports
    }

    pub fn exports_flat(&self) -> &[f64] {
        &self.exports
    }
}

fn partner_sums(flat: &[f64], countries: usize, goods: usize) -> Vec<f64> {
    // row-major [s][k]
    let mut out = vec![0.0; goods * countries];
    for k in 0..countries {
        for j in 0..countries {
            let base = (k * countries + j) * goods;
            for s in 0..goods {
                out[s * countries + k] += flat[base + s];
            }
        }
    }
    out
}

/// `c[s][k] = Σ_j i[k][j][s]`.
pub fn build_demand_matrix(tensors: &TradeTensors) -> DemandMatrix {
    let data = partner_sums(tensors.imports_flat(), tensors.countries, tensors.goods);
    DemandMatrix(CostMatrix {
        goods: tensors.goods,
        countries: tensors.countries,
        data,
    })
}

/// `b[s][k] = Σ_j e[k][j][s]`.
pub fn build_supply_matrix(tensors: &TradeTensors) -> SupplyMatrix {
    let data = partner_sums(tensors.exports_flat(), tensors.countries, tensors.goods);
    SupplyMatrix(CostMatrix {
        goods: tensors.goods,
        countries: tensors.countries,
        data,
    })
}

pub fn supply_vector(supply: &SupplyMatrix) -> SupplyVector {
    SupplyVector(supply.row_sums())
}

fn check_price_len(p: &PriceVector, goods: usize) -> Result<(), ModelError> {
    if p.len() != goods {
        return Err(ModelError::DimensionMismatch {
            what: "price vector",
            expected: goods,
            got: p.len(),
        });
    }
    Ok(())
}

/// Export income of each country at prices `p`: `D[k] = Σ_s p[s]·b[s][k]`.
pub fn incomes(supply: &SupplyMatrix, p: &PriceVector) -> Result<Vec<f64>, ModelError> {
    check_price_len(p, supply.goods())?;
    Ok(supply.weighted_column_sums(p.as_slice()))
}

/// Import expenditure of each country at prices `p`: `E[k] = Σ_s p[s]·c[s][k]`.
pub fn expenditures(demand: &DemandMatrix, p: &PriceVector) -> Result<Vec<f64>, ModelError> {
    check_price_len(p, demand.goods())?;
    Ok(demand.weighted_column_sums(p.as_slice()))
}
