//! One-way ANOVA and Tukey's range test at the 5% level.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_statistic: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ms_within: f64,
}

impl AnovaResult {
    pub fn significant(&self) -> bool {
        self.p_value < ALPHA
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Upper tail `P(F > f)` of the F distribution.
pub fn f_survival(f: f64, df1: f64, df2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f)).clamp(0.0, 1.0)
}

pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::Stats("ANOVA needs at least two groups".into()));
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(Error::Stats("every ANOVA group needs two samples".into()));
    }
    if groups.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Stats("non-finite sample".into()));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let (df_between, df_within) = (k - 1, n - k);
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let f_statistic = if ms_within > 0.0 {
        ms_between / ms_within
    } else if ms_between > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(AnovaResult {
        f_statistic,
        df_between,
        df_within,
        p_value: f_survival(f_statistic, df_between as f64, df_within as f64),
        ms_within,
    })
}

/// Two-sided paired t-test on `a - b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTResult {
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl PairedTResult {
    pub fn significant(&self) -> bool {
        self.p_value < ALPHA
    }
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTResult> {
    if a.len() != b.len() {
        return Err(Error::Stats("paired samples differ in length".into()));
    }
    if a.len() < 2 {
        return Err(Error::Stats("paired test needs two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::Stats("non-finite sample".into()));
    }
    let n = d.len() as f64;
    let m = mean(&d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let df = d.len() - 1;
    let t_statistic = if var > 0.0 {
        m / (var / n).sqrt()
    } else if m == 0.0 {
        0.0
    } else {
        m.signum() * f64::INFINITY
    };
    let p_value = if t_statistic.is_infinite() {
        0.0
    } else {
        let v = df as f64;
        beta_reg(v / 2.0, 0.5, v / (v + t_statistic * t_statistic)).clamp(0.0, 1.0)
    };
    Ok(PairedTResult {
        mean_difference: m,
        t_statistic,
        df,
        p_value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub group_i: usize,
    pub group_j: usize,
    /// `mean_i - mean_j`
    pub mean_difference: f64,
    pub q: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub q_critical: f64,
    pub df_within: usize,
    pub pairs: Vec<TukeyPair>,
}

impl TukeyResult {
    pub fn pair(&self, i: usize, j: usize) -> Option<&TukeyPair> {
        self.pairs
            .iter()
            .find(|p| (p.group_i, p.group_j) == (i.min(j), i.max(j)))
    }
}

/// Tukey's range test for a balanced design at the 5% level.
pub fn tukey_hsd(groups: &[Vec<f64>]) -> Result<TukeyResult> {
    let anova = one_way_anova(groups)?;
    let n = groups[0].len();
    if groups.iter().any(|g| g.len() != n) {
        return Err(Error::Stats("Tukey test requires equal group sizes".into()));
    }
    let k = groups.len();
    let q_critical = studentized_range_critical(k, anova.df_within)?;
    let se = (anova.ms_within / n as f64).sqrt();
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = means[i] - means[j];
            let q = if se > 0.0 {
                diff.abs() / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            pairs.push(TukeyPair {
                group_i: i,
                group_j: j,
                mean_difference: diff,
                q,
                significant: q > q_critical,
            });
        }
    }
    Ok(TukeyResult {
        q_critical,
        df_within: anova.df_within,
        pairs,
    })
}

/// Degrees of freedom of the table columns; the last column is infinity.
const TABLE_DF: [f64; 30] = [
    5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0,
    21.0, 22.0, 23.0, 24.0, 25.0, 26.0, 27.0, 28.0, 29.0, 30.0, 40.0, 60.0, 120.0, f64::INFINITY,
];

/// Upper 5% points of the studentized range, rows k = 2..=10.
const Q_TABLE: [[f64; 30]; 9] = [
    [3.6354, 3.4605, 3.3441, 3.2612, 3.1992, 3.1511, 3.1127, 3.0813, 3.0552, 3.0332, 3.0143, 2.9980, 2.9837, 2.9712, 2.9600, 2.9500, 2.9410, 2.9329, 2.9255, 2.9188, 2.9126, 2.9070, 2.9017, 2.8969, 2.8924, 2.8882, 2.8582, 2.8288, 2.8000, 2.7718],
    [4.6017, 4.3392, 4.1649, 4.0410, 3.9485, 3.8768, 3.8196, 3.7729, 3.7341, 3.7014, 3.6734, 3.6491, 3.6280, 3.6093, 3.5927, 3.5779, 3.5646, 3.5526, 3.5417, 3.5317, 3.5226, 3.5142, 3.5064, 3.4993, 3.4926, 3.4864, 3.4421, 3.3987, 3.3561, 3.3145],
    [5.2183, 4.8956, 4.6813, 4.5288, 4.4149, 4.3266, 4.2561, 4.1987, 4.1509, 4.1105, 4.0760, 4.0461, 4.0200, 3.9970, 3.9766, 3.9583, 3.9419, 3.9270, 3.9136, 3.9013, 3.8900, 3.8796, 3.8701, 3.8612, 3.8530, 3.8454, 3.7907, 3.7371, 3.6846, 3.6332],
    [5.6731, 5.3049, 5.0601, 4.8858, 4.7554, 4.6543, 4.5736, 4.5077, 4.4529, 4.4066, 4.3670, 4.3327, 4.3027, 4.2763, 4.2528, 4.2319, 4.2130, 4.1959, 4.1805, 4.1663, 4.1534, 4.1415, 4.1305, 4.1203, 4.1109, 4.1021, 4.0391, 3.9774, 3.9169, 3.8577],
    [6.0329, 5.6284, 5.3591, 5.1672, 5.0235, 4.9120, 4.8230, 4.7502, 4.6897, 4.6385, 4.5947, 4.5568, 4.5237, 4.4944, 4.4685, 4.4452, 4.4244, 4.4055, 4.3883, 4.3727, 4.3583, 4.3451, 4.3329, 4.3217, 4.3112, 4.3015, 4.2316, 4.1632, 4.0960, 4.0301],
    [6.3299, 5.8953, 5.6057, 5.3991, 5.2444, 5.1242, 5.0281, 4.9496, 4.8842, 4.8290, 4.7816, 4.7406, 4.7048, 4.6731, 4.6450, 4.6199, 4.5973, 4.5769, 4.5583, 4.5413, 4.5258, 4.5115, 4.4983, 4.4861, 4.4747, 4.4642, 4.3885, 4.3141, 4.2412, 4.1696],
    [6.5823, 6.1222, 5.8153, 5.5962, 5.4319, 5.3042, 5.2021, 5.1187, 5.0491, 4.9903, 4.9399, 4.8962, 4.8580, 4.8243, 4.7944, 4.7676, 4.7435, 4.7217, 4.7018, 4.6838, 4.6672, 4.6519, 4.6378, 4.6248, 4.6127, 4.6014, 4.5205, 4.4411, 4.3630, 4.2863],
    [6.8014, 6.3192, 5.9973, 5.7673, 5.5947, 5.4605, 5.3531, 5.2653, 5.1921, 5.1301, 5.0770, 5.0310, 4.9907, 4.9552, 4.9236, 4.8954, 4.8699, 4.8469, 4.8260, 4.8069, 4.7894, 4.7733, 4.7584, 4.7446, 4.7318, 4.7199, 4.6345, 4.5504, 4.4678, 4.3865],
    [6.9947, 6.4931, 6.1579, 5.9183, 5.7384, 5.5984, 5.4863, 5.3946, 5.3181, 5.2534, 5.1979, 5.1498, 5.1077, 5.0705, 5.0375, 5.0079, 4.9813, 4.9572, 4.9353, 4.9152, 4.8969, 4.8800, 4.8644, 4.8500, 4.8366, 4.8241, 4.7345, 4.6463, 4.5595, 4.4741],
];

/// Critical value `q(k, df)` at the 5% level, interpolated linearly in `1/df`
/// between tabulated degrees of freedom.
pub fn studentized_range_critical(k: usize, df: usize) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(Error::Stats(format!("no studentized range table for k = {k}")));
    }
    if df < 5 {
        return Err(Error::Stats(format!(
            "no studentized range table for df = {df}"
        )));
    }
    let row = &Q_TABLE[k - 2];
    let df = df as f64;
    let hi = TABLE_DF.iter().position(|&d| d >= df).unwrap_or(TABLE_DF.len() - 1);
    if TABLE_DF[hi] == df {
        return Ok(row[hi]);
    }
    let lo = hi - 1;
    let inv = |d: f64| if d.is_infinite() { 0.0 } else { 1.0 / d };
    let (x0, x1, x) = (inv(TABLE_DF[lo]), inv(TABLE_DF[hi]), inv(df));
    let w = (x - x0) / (x1 - x0);
    Ok(row[lo] + w * (row[hi] - row[lo]))
}
