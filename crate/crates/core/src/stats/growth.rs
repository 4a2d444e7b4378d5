use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::UserId;

/// Per-user values of one metric across `periods` consecutive periods.
/// Missing entries are `None`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSeries {
    pub name: String,
    pub periods: usize,
    pub values: BTreeMap<UserId, Vec<Option<f64>>>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, periods: usize) -> Self {
        MetricSeries {
            name: name.into(),
            periods,
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, user: UserId, period: usize, value: f64) {
        assert!(period < self.periods, "period {period} out of range");
        let periods = self.periods;
        self.values.entry(user).or_insert_with(|| vec![None; periods])[period] = Some(value);
    }

    pub fn get(&self, user: UserId, period: usize) -> Option<f64> {
        self.values.get(&user).and_then(|v| v.get(period).copied().flatten())
    }

    pub fn users(&self) -> usize {
        self.values.len()
    }

    /// All present values for one period, in user order.
    pub fn column(&self, period: usize) -> Vec<f64> {
        self.values.values().filter_map(|v| v[period]).collect()
    }
}

/// Relative change `(next - current) / current`; `None` for a zero base.
pub fn growth_rate(current: f64, next: f64) -> Option<f64> {
    if current == 0.0 {
        None
    } else {
        Some((next - current) / current)
    }
}

/// Growth rates around period `center`: `g_prev = G[center-1 -> center]`,
/// `g_next = G[center -> center+1]`, `d = g_next - g_prev`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthTriple {
    pub user: UserId,
    pub center: usize,
    pub g_prev: f64,
    pub g_next: f64,
    pub d: f64,
}

/// Bookkeeping for (user, transition) pairs that could not be used.
/// Transition `i` is the step from period `i` to `i + 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrowthExclusions {
    pub zero_base: Vec<usize>,
    pub missing_value: Vec<usize>,
    /// Users dropped from each triple, indexed by center period.
    pub excluded_triples: Vec<usize>,
}

impl GrowthExclusions {
    pub fn total_zero_base(&self) -> usize {
        self.zero_base.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SecondDifferences {
    pub triples: Vec<GrowthTriple>,
    pub exclusions: GrowthExclusions,
}

impl SecondDifferences {
    /// The `d` values of every user around `center`.
    pub fn sample(&self, center: usize) -> Vec<f64> {
        self.triples
            .iter()
            .filter(|t| t.center == center)
            .map(|t| t.d)
            .collect()
    }
}

/// Second differences of per-user growth rates for every interior period.
/// A user contributes to a triple only when both growth rates are defined.
pub fn growth_second_difference(series: &MetricSeries) -> SecondDifferences {
    let k = series.periods;
    let mut out = SecondDifferences::default();
    if k < 3 {
        return out;
    }
    out.exclusions = GrowthExclusions {
        zero_base: vec![0; k - 1],
        missing_value: vec![0; k - 1],
        excluded_triples: vec![0; k],
    };
    let mut rates: Vec<Option<f64>> = Vec::with_capacity(k - 1);
    for (&user, values) in &series.values {
        rates.clear();
        for i in 0..k - 1 {
            let g = match (values[i], values[i + 1]) {
                (Some(x), Some(y)) => {
                    let g = growth_rate(x, y);
                    if g.is_none() {
                        out.exclusions.zero_base[i] += 1;
                    }
                    g
                }
                _ => {
                    out.exclusions.missing_value[i] += 1;
                    None
                }
            };
            rates.push(g);
        }
        for center in 1..k - 1 {
            match (rates[center - 1], rates[center]) {
                (Some(g_prev), Some(g_next)) => out.triples.push(GrowthTriple {
                    user,
                    center,
                    g_prev,
                    g_next,
                    d: g_next - g_prev,
                }),
                _ => out.exclusions.excluded_triples[center] += 1,
            }
        }
    }
    // Triples grouped by center, users ascending within a center.
    out.triples.sort_by_key(|t| (t.center, t.user));
    out
}
