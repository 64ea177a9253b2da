use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    #[default]
    FisherZ,
    /// Degenerate-Gaussian likelihood ratio: binary columns enter as 0/1
    /// indicators and nested linear-Gaussian models are compared.
    DgLrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiTest {
    pub kind: CiKind,
    pub alpha: f64,
}

impl Default for CiTest {
    fn default() -> Self {
        CiTest { kind: CiKind::FisherZ, alpha: 0.05 }
    }
}

impl CiTest {
    pub fn new(kind: CiKind, alpha: f64) -> Result<Self> {
        let t = CiTest { kind, alpha };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("alpha {} must lie strictly between 0 and 1", self.alpha)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub independent: bool,
    pub p_value: f64,
    pub statistic: f64,
}

/// Sample covariance of all dataset columns, shared by every test on the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub n: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl Covariance {
    pub fn of(data: &Dataset) -> Result<Self> {
        let n = data.n_rows();
        if n < 2 {
            return Err(Error::InsufficientData { rows: n, required: 2 });
        }
        let k = data.n_cols();
        let means: Vec<f64> = (0..k).map(|j| data.column_at(j).iter().sum::<f64>() / n as f64).collect();
        let mut matrix = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let (ca, cb) = (data.column_at(a), data.column_at(b));
                let s: f64 = ca.iter().zip(cb).map(|(x, y)| (x - means[a]) * (y - means[b])).sum();
                matrix[a][b] = s / (n - 1) as f64;
                matrix[b][a] = matrix[a][b];
            }
        }
        Ok(Covariance { n, matrix })
    }

    /// Partial correlation of `x` and `y` given `z`, from the Schur complement
    /// of the conditioning block. Equal to the correlation of the residuals of
    /// regressing `x` and `y` on `z`.
    pub fn partial_correlation(&self, x: usize, y: usize, z: &[usize]) -> Result<f64> {
        let c = &self.matrix;
        let mut sxx = c[x][x];
        let mut syy = c[y][y];
        let mut sxy = c[x][y];
        if !z.is_empty() {
            let szz: Vec<Vec<f64>> = z.iter().map(|&i| z.iter().map(|&j| c[i][j]).collect()).collect();
            let l = cholesky(&szz).ok_or(Error::SingularCovariance)?;
            let bx = solve_lower(&l, &z.iter().map(|&i| c[i][x]).collect::<Vec<_>>());
            let by = solve_lower(&l, &z.iter().map(|&i| c[i][y]).collect::<Vec<_>>());
            sxx -= dot(&bx, &bx);
            syy -= dot(&by, &by);
            sxy -= dot(&bx, &by);
        }
        let scale = (c[x][x] * c[y][y]).sqrt();
        if sxx <= 1e-12 * c[x][x].max(f64::MIN_POSITIVE)
            || syy <= 1e-12 * c[y][y].max(f64::MIN_POSITIVE)
            || scale == 0.0
        {
            return Err(Error::SingularCovariance);
        }
        Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }

    pub fn test(&self, x: usize, y: usize, z: &[usize], test: &CiTest) -> Result<CiResult> {
        if self.n < z.len() + 10 {
            return Err(Error::InsufficientData { rows: self.n, required: z.len() + 10 });
        }
        let r = self.partial_correlation(x, y, z)?;
        let n = self.n as f64;
        let (statistic, p_value) = match test.kind {
            CiKind::FisherZ => {
                let r = r.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                let z_stat = r.atanh() * (n - z.len() as f64 - 3.0).sqrt();
                let normal = Normal::standard();
                (z_stat, 2.0 * (1.0 - normal.cdf(z_stat.abs())))
            }
            CiKind::DgLrt => {
                // RSS(without x) / RSS(with x) = 1 / (1 - r^2)
                let lr = -n * (1.0 - r * r).max(f64::MIN_POSITIVE).ln();
                let chi = ChiSquared::new(1.0).expect("one degree of freedom");
                (lr, 1.0 - chi.cdf(lr.max(0.0)))
            }
        };
        Ok(CiResult { independent: p_value > test.alpha, p_value, statistic })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i][j] - dot(&l[i][..j], &l[j][..j]);
            if i == j {
                if s <= 1e-12 * a[i][i].abs().max(f64::MIN_POSITIVE) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn solve_lower(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for i in 0..b.len() {
        x[i] = (b[i] - dot(&l[i][..i], &x[..i])) / l[i][i];
    }
    x
}

/// Tests `x ⟂ y | given` on `data`.
pub fn ci_test(data: &Dataset, x: &str, y: &str, given: &[&str], test: &CiTest) -> Result<CiResult> {
    test.validate()?;
    let cov = Covariance::of(data)?;
    let z = given.iter().map(|g| data.position(g)).collect::<Result<Vec<_>>>()?;
    cov.test(data.position(x)?, data.position(y)?, &z, test)
}
