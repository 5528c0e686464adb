//! Linear soft-margin SVM.
//!
//! Training solves the dual of
//!
//! ```text
//! min_{w,b} 1/2 |w|^2 + C sum_i max(0, 1 - y_i (w . x_i + b))
//! ```
//!
//! with sequential minimal optimization: each step picks the maximal
//! violating pair using second-order information and solves the
//! two-variable subproblem in closed form. The weight vector is kept
//! explicitly, so memory is linear in the data. The run is deterministic:
//! ties are broken by the lowest index and no step is randomized.
//!
//! Labels are `{0, 1}` at the API boundary and map to `{-1, +1}` internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension min-max scaling to `[0, 1]`, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaler {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::invalid("scaler bounds must be non-empty and equally long"));
        }
        if min
            .iter()
            .zip(&max)
            .any(|(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite())
        {
            return Err(Error::invalid("scaler requires finite min <= max per dimension"));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Maps each value to `[0, 1]`; constant dimensions map to 0.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "feature has {} dimensions, scaler expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<Scaler> {
    let first = rows
        .first()
        .ok_or_else(|| Error::invalid("cannot fit a scaler on no rows"))?;
    let dim = first.len();
    let mut min = first.clone();
    let mut max = first.clone();
    for row in rows {
        if row.len() != dim {
            return Err(Error::invalid("rows differ in dimension"));
        }
        for (k, &v) in row.iter().enumerate() {
            min[k] = min[k].min(v);
            max[k] = max[k].max(v);
        }
    }
    Scaler::new(min, max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Hinge-loss weight `C`.
    pub c: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 10_000.0,
            tol: 1e-4,
            max_iter: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub scaler: Scaler,
    pub c: f64,
}

impl LinearModel {
    /// `w . scale(x) + b`.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        let z = self.scaler.transform(x)?;
        Ok(dot(&self.w, &z) + self.b)
    }

    /// 1 when the score is strictly positive, 0 otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(label_for_score(self.decision_score(x)?))
    }

    /// Five-line text form: `C`, `b`, `w`, scaler minima, scaler maxima.
    pub fn to_text(&self) -> String {
        let row = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        format!(
            "{}\n{}\n{}\n{}\n{}\n",
            self.c,
            self.b,
            row(&self.w),
            row(self.scaler.min()),
            row(self.scaler.max())
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() != 5 {
            return Err(Error::Data(format!(
                "model file has {} lines, expected 5",
                lines.len()
            )));
        }
        let num = |s: &str, line: usize| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Data(format!("model line {line}: '{s}': {e}")))
        };
        let row =
            |i: usize| -> Result<Vec<f64>> { lines[i].split_whitespace().map(|s| num(s, i + 1)).collect() };
        let c = num(lines[0], 1)?;
        let b = num(lines[1], 2)?;
        let w = row(2)?;
        let scaler = Scaler::new(row(3)?, row(4)?).map_err(|e| Error::Data(format!("model scaler: {e}")))?;
        if w.len() != scaler.dim() {
            return Err(Error::Data(format!(
                "model has {} weights but {} scaler dimensions",
                w.len(),
                scaler.dim()
            )));
        }
        if !(c > 0.0) || !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("model values must be finite with C > 0".into()));
        }
        Ok(Self { w, b, scaler, c })
    }
}

pub fn label_for_score(score: f64) -> u8 {
    u8::from(score > 0.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1/2 |w|^2 + C sum hinge` on already-scaled rows with labels in `{0, 1}`.
pub fn primal_objective(w: &[f64], b: f64, rows: &[Vec<f64>], labels: &[u8], c: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, &l)| {
            let y = if l == 1 { 1.0 } else { -1.0 };
            (1.0 - y * (dot(w, x) + b)).max(0.0)
        })
        .sum();
    0.5 * dot(w, w) + c * hinge
}

/// Result of the dual solver on scaled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub w: Vec<f64>,
    pub b: f64,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Final maximal KKT violation `m(alpha) - M(alpha)`.
    pub violation: f64,
}

const TAU: f64 = 1e-12;

/// SMO on rows that are used as given (no scaling).
pub fn solve_dual(rows: &[Vec<f64>], labels: &[u8], params: &SvmParams) -> Result<DualSolution> {
    let n = rows.len();
    if n != labels.len() {
        return Err(Error::invalid("row and label counts differ"));
    }
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::invalid(format!("label {l} is not 0 or 1")));
    }
    for (class, name) in [(0u8, "non-smoke (0)"), (1u8, "smoke (1)")] {
        if !labels.contains(&class) {
            return Err(Error::Training(format!("no training examples of class {name}")));
        }
    }
    if !(params.c > 0.0 && params.c.is_finite() && params.tol > 0.0) {
        return Err(Error::invalid(format!("invalid SVM parameters {params:?}")));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("rows differ in dimension"));
    }

    let c = params.c;
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let sq: Vec<f64> = rows.iter().map(|r| dot(r, r)).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    // Dual gradient Q alpha - 1, with Q_ij = y_i y_j x_i . x_j.
    let mut grad = vec![-1.0; n];

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let violation = loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i != usize::MAX {
            let xi = &rows[i];
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                g_max2 = g_max2.max(y[t] * grad[t]);
                let b_it = g_max + y[t] * grad[t];
                if b_it > 0.0 {
                    let a_it = (sq[i] + sq[t] - 2.0 * dot(xi, &rows[t])).max(TAU);
                    let obj = -(b_it * b_it) / a_it;
                    if obj < obj_min {
                        obj_min = obj;
                        j = t;
                    }
                }
            }
        }
        let gap = g_max + g_max2;
        if j == usize::MAX || gap < params.tol {
            break gap.max(0.0);
        }
        if iterations >= params.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let kij = dot(&rows[i], &rows[j]);
        let (qii, qjj, qij) = (sq[i], sq[j], y[i] * y[j] * kij);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = ((alpha[i] - old_i) * y[i], (alpha[j] - old_j) * y[j]);
        let mut dw = vec![0.0; dim];
        for k in 0..dim {
            dw[k] = di * rows[i][k] + dj * rows[j][k];
            w[k] += dw[k];
        }
        for t in 0..n {
            grad[t] += y[t] * dot(&rows[t], &dw);
        }
    };

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };

    Ok(DualSolution {
        w,
        b: -rho,
        alpha,
        iterations,
        violation,
    })
}

/// Fits the scaler on `rows`, then trains on the scaled rows.
pub fn train(rows: &[Vec<f64>], labels: &[u8], params: &SvmParams) -> Result<LinearModel> {
    let scaler = fit_scaler(rows)?;
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect::<Result<_>>()?;
    let sol = solve_dual(&scaled, labels, params)?;
    log::debug!(
        "svm: {} rows, {} SMO steps, KKT violation {:e}",
        rows.len(),
        sol.iterations,
        sol.violation
    );
    Ok(LinearModel {
        w: sol.w,
        b: sol.b,
        scaler,
        c: params.c,
    })
}
