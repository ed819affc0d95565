//! Main-effects fixed-effects ANOVA on a dummy-coded design.
//!
//! The model is `y ~ 1 + A + B + C` (no interactions). Each factor with L
//! observed levels contributes L-1 treatment-coded columns; factors observed at
//! a single level contribute none and are left out of the test table.

use std::collections::BTreeMap;

use super::linalg::least_squares_rss;
use super::special::f_sf;
use super::StatsError;

/// Sums-of-squares convention for the per-factor tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SsType {
    /// Sequential, in the order the factors are given.
    #[serde(rename = "I")]
    I,
    /// Full model against the model without the factor.
    #[default]
    #[serde(rename = "II")]
    II,
}

/// A categorical predictor coded as level indices `0..n_levels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub name: String,
    pub codes: Vec<usize>,
    pub levels: Vec<String>,
}

impl Factor {
    /// Codes levels in sorted order of their display strings.
    pub fn from_levels<T: ToString>(name: &str, values: &[T]) -> Self {
        let strings: Vec<String> = values.iter().map(ToString::to_string).collect();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &strings {
            index.entry(s.as_str()).or_insert(0);
        }
        let levels: Vec<String> = index.keys().map(|s| s.to_string()).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let codes = strings.iter().map(|s| index[s.as_str()]).collect();
        Self {
            name: name.to_string(),
            codes,
            levels,
        }
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Treatment-coded columns, first level as reference.
    fn dummy_columns(&self) -> Vec<Vec<f64>> {
        (1..self.n_levels())
            .map(|level| {
                self.codes
                    .iter()
                    .map(|&c| if c == level { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FactorTest {
    pub factor: String,
    #[serde(rename = "F")]
    pub f: f64,
    pub p: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub ss: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AnovaResult {
    pub tests: Vec<FactorTest>,
    pub residual_df: usize,
    pub residual_ss: f64,
}

impl AnovaResult {
    pub fn test(&self, factor: &str) -> Option<&FactorTest> {
        self.tests.iter().find(|t| t.factor == factor)
    }
}

/// Relative size below which a sum of squares counts as exactly zero.
const ZERO_SS: f64 = 1e-12;

/// Fits `y ~ 1 + factors...` and tests each multi-level factor.
///
/// The first factor must have at least two levels; later factors (the
/// confounders) with a single observed level are dropped.
pub fn linear_anova(response: &[f64], factors: &[Factor], ss_type: SsType) -> Result<AnovaResult, StatsError> {
    let n = response.len();
    for f in factors {
        if f.codes.len() != n {
            return Err(StatsError::LengthMismatch(n, f.codes.len()));
        }
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if let Some(main) = factors.first() {
        if main.n_levels() < 2 {
            return Err(StatsError::SingleLevelFactor(main.name.clone()));
        }
    }
    let active: Vec<&Factor> = factors.iter().filter(|f| f.n_levels() > 1).collect();
    let blocks: Vec<Vec<Vec<f64>>> = active.iter().map(|f| f.dummy_columns()).collect();
    let p = 1 + blocks.iter().map(Vec::len).sum::<usize>();
    if n <= p {
        return Err(StatsError::TooFewObservations { n, need: p + 1 });
    }

    let intercept = vec![1.0; n];
    let design = |included: &[bool]| -> Vec<Vec<f64>> {
        let mut cols = vec![intercept.clone()];
        for (block, &keep) in blocks.iter().zip(included) {
            if keep {
                cols.extend(block.iter().cloned());
            }
        }
        cols
    };
    let rss = |included: &[bool]| -> Result<f64, StatsError> {
        least_squares_rss(&design(included), response).map_err(|j| {
            let name = column_name(&active, j);
            StatsError::RankDeficientDesign { column: name }
        })
    };

    let all = vec![true; active.len()];
    let rss_full = rss(&all)?;
    let df_den = n - p;
    let mean = response.iter().sum::<f64>() / n as f64;
    let tss: f64 = response.iter().map(|v| (v - mean) * (v - mean)).sum();

    let mut tests = Vec::with_capacity(active.len());
    for (k, factor) in active.iter().enumerate() {
        let ss = match ss_type {
            SsType::II => {
                let mut without = all.clone();
                without[k] = false;
                rss(&without)? - rss_full
            }
            SsType::I => {
                let before: Vec<bool> = (0..active.len()).map(|i| i < k).collect();
                let upto: Vec<bool> = (0..active.len()).map(|i| i <= k).collect();
                rss(&before)? - rss(&upto)?
            }
        };
        let df_num = factor.n_levels() - 1;
        let (f, p_value) = f_test(ss.max(0.0), df_num, rss_full, df_den, tss)?;
        tests.push(FactorTest {
            factor: factor.name.clone(),
            f,
            p: p_value,
            df_num,
            df_den,
            ss: ss.max(0.0),
        });
    }
    Ok(AnovaResult {
        tests,
        residual_df: df_den,
        residual_ss: rss_full,
    })
}

fn f_test(ss: f64, df_num: usize, rss: f64, df_den: usize, tss: f64) -> Result<(f64, f64), StatsError> {
    if tss == 0.0 || ss <= ZERO_SS * tss {
        return Ok((0.0, 1.0));
    }
    if rss <= ZERO_SS * ZERO_SS * tss {
        return Ok((f64::INFINITY, 0.0));
    }
    let f = (ss / df_num as f64) / (rss / df_den as f64);
    let p = f_sf(f, df_num as f64, df_den as f64)?;
    Ok((f, p))
}

fn column_name(active: &[&Factor], j: usize) -> String {
    if j == 0 {
        return "intercept".into();
    }
    let mut j = j - 1;
    for f in active {
        let k = f.n_levels() - 1;
        if j < k {
            return format!("{}={}", f.name, f.levels[j + 1]);
        }
        j -= k;
    }
    format!("column {j}")
}

/// Main-effects ANOVA of `response` on `factor` with `sex` and `age` as confounders.
pub fn three_way_anova<A: ToString, B: ToString, C: ToString>(
    response: &[f64],
    factor: &[A],
    sex: &[B],
    age: &[C],
    ss_type: SsType,
) -> Result<AnovaResult, StatsError> {
    let factors = [
        Factor::from_levels("factor", factor),
        Factor::from_levels("sex", sex),
        Factor::from_levels("age", age),
    ];
    linear_anova(response, &factors, ss_type)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_responses_give_zero_f() {
        let y = [2.0; 8];
        let g = ["a", "a", "b", "b", "a", "b", "a", "b"];
        let sex = ["m", "f", "m", "f", "f", "m", "m", "f"];
        let res = three_way_anova(&y, &g, &sex, &["x"; 8], SsType::II).unwrap();
        let t = res.test("factor").unwrap();
        assert_eq!((t.f, t.p), (0.0, 1.0));
    }

    #[test]
    fn noiseless_effect_is_maximally_significant() {
        let g = ["a", "a", "a", "b", "b", "b"];
        let y: Vec<f64> = g.iter().map(|&l| if l == "a" { 1.0 } else { 3.0 }).collect();
        let res = three_way_anova(&y, &g, &["f"; 6], &["x"; 6], SsType::II).unwrap();
        assert!(res.test("factor").unwrap().p < 1e-12);
    }

    #[test]
    fn single_level_main_factor() {
        let r = three_way_anova(&[1.0, 2.0, 3.0], &["a"; 3], &["m", "f", "m"], &["x"; 3], SsType::II);
        assert!(matches!(r, Err(StatsError::SingleLevelFactor(_))));
    }

    #[test]
    fn confounded_design_is_rank_deficient() {
        let g = ["a", "a", "b", "b", "a", "b"];
        let sex = ["m", "m", "f", "f", "m", "f"];
        let r = three_way_anova(&[1.0, 2.0, 3.0, 4.0, 2.0, 5.0], &g, &sex, &["x"; 6], SsType::II);
        assert!(matches!(r, Err(StatsError::RankDeficientDesign { .. })));
    }

    #[test]
    fn too_few_observations() {
        let r = three_way_anova(&[1.0, 2.0], &["a", "b"], &["m", "m"], &["x", "x"], SsType::II);
        assert!(matches!(r, Err(StatsError::TooFewObservations { .. })));
    }

    #[test]
    fn balanced_design_types_agree() {
        // Fully balanced 2x2: sequential and partial sums of squares coincide.
        let g = ["a", "a", "b", "b", "a", "a", "b", "b"];
        let s = ["m", "f", "m", "f", "m", "f", "m", "f"];
        let y = [1.0, 2.5, 3.1, 4.0, 1.4, 2.2, 2.9, 4.6];
        let t1 = three_way_anova(&y, &g, &s, &["x"; 8], SsType::I).unwrap();
        let t2 = three_way_anova(&y, &g, &s, &["x"; 8], SsType::II).unwrap();
        for name in ["factor", "sex"] {
            let (a, b) = (t1.test(name).unwrap(), t2.test(name).unwrap());
            assert!((a.f - b.f).abs() < 1e-9 * b.f.max(1.0));
        }
        assert!(t1.test("age").is_none());
    }
}
