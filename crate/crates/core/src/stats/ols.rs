use serde::Serialize;
use statrs::function::beta::beta_reg;

use super::{mean, DesignMatrix, StatsError, RANK_TOL};

pub const INTERCEPT: &str = "const";

/// Householder QR with column pivoting on relative residual norm.
struct PivotedQr {
    /// Transformed columns; the upper triangle holds `R`.
    a: Vec<Vec<f64>>,
    /// Householder vectors (rows `k..n`) and their squared norms.
    reflectors: Vec<(Vec<f64>, f64)>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn new(columns: Vec<Vec<f64>>, force_first: bool) -> Self {
        let q = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        let norm0: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
        let mut a = columns;
        let mut perm: Vec<usize> = (0..q).collect();
        let mut reflectors = Vec::new();
        let mut rank = 0;

        for k in 0..q.min(n) {
            let rel = |j: usize, a: &[Vec<f64>]| {
                let o = norm0[perm[j]];
                if o > 0.0 {
                    norm(&a[j][k..]) / o
                } else {
                    0.0
                }
            };
            let pick = if k == 0 && force_first {
                0
            } else {
                let mut best = k;
                for j in k + 1..q {
                    if rel(j, &a) > rel(best, &a) {
                        best = j;
                    }
                }
                best
            };
            if rel(pick, &a) <= RANK_TOL {
                break;
            }
            a.swap(k, pick);
            perm.swap(k, pick);

            let x = &a[k][k..];
            let alpha = -x[0].signum() * norm(x);
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|t| t * t).sum();
            for col in a.iter_mut().skip(k + 1) {
                apply_reflector(&v, vv, &mut col[k..]);
            }
            a[k][k] = alpha;
            for t in &mut a[k][k + 1..] {
                *t = 0.0;
            }
            reflectors.push((v, vv));
            rank = k + 1;
        }
        Self {
            a,
            reflectors,
            perm,
            rank,
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j][i]
    }

    fn dependent(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    /// Least-squares coefficients in original column order; columns beyond
    /// the numerical rank get 0.
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        for (k, (v, vv)) in self.reflectors.iter().enumerate() {
            apply_reflector(v, *vv, &mut qty[k..]);
        }
        let r = self.rank;
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let s: f64 = (i + 1..r).map(|j| self.r(i, j) * z[j]).sum();
            z[i] = (qty[i] - s) / self.r(i, i);
        }
        let mut beta = vec![0.0; self.a.len()];
        for (k, &zk) in z.iter().enumerate() {
            beta[self.perm[k]] = zk;
        }
        beta
    }

    /// Diagonal of `(X^T X)^{-1}` in original column order (full rank only).
    fn inverse_gram_diag(&self) -> Vec<f64> {
        let r = self.rank;
        let mut inv = vec![vec![0.0; r]; r];
        for j in 0..r {
            inv[j][j] = 1.0 / self.r(j, j);
            for i in (0..j).rev() {
                let s: f64 = (i + 1..=j).map(|k| self.r(i, k) * inv[k][j]).sum();
                inv[i][j] = -s / self.r(i, i);
            }
        }
        let mut diag = vec![0.0; self.a.len()];
        for i in 0..r {
            diag[self.perm[i]] = inv[i].iter().map(|t| t * t).sum();
        }
        diag
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn apply_reflector(v: &[f64], vv: f64, x: &mut [f64]) {
    if vv == 0.0 {
        return;
    }
    let s = 2.0 * v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() / vv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

fn with_intercept(x: &DesignMatrix) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![1.0; x.n()]];
    cols.extend(x.columns().iter().cloned());
    cols
}

/// Rank-tolerant least-squares fit with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// Intercept first, then one entry per column; dependent columns get 0.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub rank: usize,
}

impl LeastSquares {
    pub fn r_squared(&self) -> f64 {
        1.0 - self.rss / self.tss
    }
}

pub fn least_squares(x: &DesignMatrix, y: &[f64]) -> LeastSquares {
    let qr = PivotedQr::new(with_intercept(x), true);
    let coefficients = qr.solve(y);
    let fitted: Vec<f64> = (0..y.len())
        .map(|i| {
            coefficients[0]
                + (0..x.p())
                    .map(|j| coefficients[j + 1] * x.get(i, j))
                    .sum::<f64>()
        })
        .collect();
    let rss = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let my = mean(y);
    let tss = y.iter().map(|v| (v - my) * (v - my)).sum();
    LeastSquares {
        coefficients,
        fitted,
        rss,
        tss,
        rank: qr.rank,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    /// `"const"` followed by the design's column names.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub f_p_value: f64,
    pub residual_std_error: f64,
    pub df_model: usize,
    pub df_resid: usize,
    pub n: usize,
}

/// Two-sided Student-t tail probability `P(|T| >= |t|)`.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Upper tail `P(F >= f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_upper(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)).clamp(0.0, 1.0)
}

/// Ordinary least squares of `y` on an intercept plus the columns of `x`.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<RegressionReport, StatsError> {
    let n = x.n();
    let p = x.p();
    if p == 0 {
        return Err(StatsError::EmptyDesign);
    }
    if y.len() != n {
        return Err(StatsError::Design(format!(
            "response has {} values for {n} rows",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Design("response has a non-finite value".into()));
    }
    if n <= p + 1 {
        return Err(StatsError::TooFewObservations { n, needed: p + 2 });
    }
    let qr = PivotedQr::new(with_intercept(x), true);
    if qr.rank < p + 1 {
        let names = qr
            .dependent()
            .iter()
            .map(|&j| {
                if j == 0 {
                    INTERCEPT.to_string()
                } else {
                    x.names()[j - 1].clone()
                }
            })
            .collect();
        return Err(StatsError::RankDeficient(names));
    }
    let coefficients = qr.solve(y);
    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            y[i] - coefficients[0]
                - (0..p)
                    .map(|j| coefficients[j + 1] * x.get(i, j))
                    .sum::<f64>()
        })
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let my = mean(y);
    let tss: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if tss == 0.0 {
        return Err(StatsError::ConstantResponse);
    }

    let df_resid = n - p - 1;
    let dfr = df_resid as f64;
    let sigma2 = rss / dfr;
    let std_errors: Vec<f64> = qr
        .inverse_gram_diag()
        .iter()
        .map(|d| (sigma2 * d).sqrt())
        .collect();
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| {
            if se > 0.0 {
                b / se
            } else if b != 0.0 {
                b.signum() * f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    let p_values = t_values.iter().map(|&t| t_two_sided(t, dfr)).collect();

    let r_squared = (1.0 - rss / tss).clamp(0.0, 1.0);
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / dfr;
    let f_statistic = if r_squared < 1.0 {
        (r_squared / p as f64) / ((1.0 - r_squared) / dfr)
    } else {
        f64::INFINITY
    };
    let f_p_value = f_upper(f_statistic, p as f64, dfr);

    let mut terms = vec![INTERCEPT.to_string()];
    terms.extend(x.names().iter().cloned());
    Ok(RegressionReport {
        terms,
        coefficients,
        std_errors,
        t_values,
        p_values,
        residuals,
        r_squared,
        adj_r_squared,
        f_statistic,
        f_p_value,
        residual_std_error: sigma2.sqrt(),
        df_model: p,
        df_resid,
        n,
    })
}

/// Variance inflation factor of each column against the others plus an
/// intercept. Exact or numerical collinearity yields `+inf`.
pub fn vif(x: &DesignMatrix) -> Result<Vec<f64>, StatsError> {
    let p = x.p();
    if x.n() <= p {
        return Err(StatsError::TooFewObservations {
            n: x.n(),
            needed: p + 1,
        });
    }
    Ok((0..p)
        .map(|j| {
            let others = x.without(&[x.names()[j].clone()]);
            let fit = least_squares(&others, x.column(j));
            if fit.tss == 0.0 {
                return f64::INFINITY;
            }
            let tol = 1.0 - fit.r_squared();
            if tol < 1e-12 {
                f64::INFINITY
            } else {
                1.0 / tol
            }
        })
        .collect())
}

/// Significance marker at the 0.10 / 0.05 / 0.01 levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Percentage change of a combined model's R² over the TDA-only model's.
pub fn delta_pct(r2_combined: f64, r2_tda: f64) -> Option<f64> {
    (r2_tda != 0.0).then(|| 100.0 * (r2_combined - r2_tda) / r2_tda)
}
