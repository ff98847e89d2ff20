//! Unconstrained COBYLA: linear models on a simplex with a shrinking trust region.
//!
//! Follows Powell's update rules (acceptability of the simplex, geometry steps,
//! vertex replacement by largest `|simi·d|`), without the constraint machinery.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
const GAMMA: f64 = 0.5;
const DELTA: f64 = 1.1;

#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub rho_beg: f64,
    pub rho_end: f64,
    pub max_evals: usize,
    /// Stop as soon as a value at or below this is seen.
    pub f_target: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub f: f64,
    /// Every function value in evaluation order.
    pub history: Vec<f64>,
}

struct Evaluator<F> {
    f: F,
    history: Vec<f64>,
    params: Params,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Evaluator<F> {
    fn eval(&mut self, x: &DVector<f64>) -> Result<f64> {
        let v = (self.f)(x.as_slice())?;
        self.history.push(v);
        Ok(v)
    }

    fn done(&self) -> bool {
        self.history.len() >= self.params.max_evals
            || self.history.iter().any(|&v| v <= self.params.f_target)
    }
}

pub fn minimize<F>(f: F, x0: &[f64], params: Params) -> Result<Outcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut ev = Evaluator {
        f,
        history: Vec::with_capacity(params.max_evals),
        params,
    };
    let mut rho = params.rho_beg;
    let mut pts = vec![DVector::from_column_slice(x0)];
    let mut fs = vec![ev.eval(&pts[0])?];
    for j in 0..n {
        if ev.done() {
            break;
        }
        let mut x = pts[0].clone();
        x[j] += rho;
        fs.push(ev.eval(&x)?);
        pts.push(x);
    }

    let mut ibrnch = false;
    while pts.len() == n + 1 && n > 0 && !ev.done() {
        let p = argmin(&fs);
        let (x0, f0) = (pts[p].clone(), fs[p]);
        let others: Vec<usize> = (0..=n).filter(|&j| j != p).collect();

        let sim = DMatrix::from_fn(n, n, |r, c| pts[others[c]][r] - x0[r]);
        let Some(simi) = sim.clone().try_inverse() else {
            break;
        };
        let df = DVector::from_fn(n, |j, _| fs[others[j]] - f0);
        let g = simi.transpose() * df;
        let veta: Vec<f64> = (0..n).map(|j| sim.column(j).norm()).collect();
        let vsig: Vec<f64> = (0..n).map(|j| 1.0 / simi.row(j).norm()).collect();
        let parsig = ALPHA * rho;
        let pareta = BETA * rho;
        let acceptable = !(vsig.iter().any(|&s| s < parsig) || veta.iter().any(|&e| e > pareta));

        if !ibrnch && !acceptable {
            let jd = if veta.iter().cloned().fold(0.0, f64::max) > pareta {
                argmax(&veta)
            } else {
                argmin(&vsig)
            };
            let mut dx: DVector<f64> = simi.row(jd).transpose() * (GAMMA * rho * vsig[jd]);
            if g.dot(&dx) > 0.0 {
                dx = -dx;
            }
            let x = &x0 + dx;
            fs[others[jd]] = ev.eval(&x)?;
            pts[others[jd]] = x;
            continue;
        }

        let gn = g.norm();
        let mut reduce = true;
        if gn > 0.0 {
            let d: DVector<f64> = &g * (-rho / gn);
            let x = &x0 + &d;
            let fx = ev.eval(&x)?;
            ibrnch = true;
            let trured = f0 - fx;
            let prerem = rho * gn;

            let mut ratio = if trured <= 0.0 { 1.0 } else { 0.0 };
            let mut jd = None;
            let mut sigbar = vec![0.0; n];
            for j in 0..n {
                let t = simi.row(j).transpose().dot(&d).abs();
                if t > ratio {
                    jd = Some(j);
                    ratio = t;
                }
                sigbar[j] = t * vsig[j];
            }
            let mut edg = DELTA * rho;
            let mut far = None;
            for j in 0..n {
                if sigbar[j] >= parsig || sigbar[j] >= vsig[j] {
                    let t = if trured > 0.0 {
                        (&d - sim.column(j)).norm()
                    } else {
                        veta[j]
                    };
                    if t > edg {
                        far = Some(j);
                        edg = t;
                    }
                }
            }
            if let Some(j) = far.or(jd) {
                fs[others[j]] = fx;
                pts[others[j]] = x;
                reduce = !(trured > 0.0 && trured >= 0.1 * prerem);
            }
        }
        if ev.done() {
            break;
        }
        if reduce {
            if !acceptable {
                ibrnch = false;
                continue;
            }
            if rho <= params.rho_end {
                break;
            }
            rho *= 0.5;
            if rho <= 1.5 * params.rho_end {
                rho = params.rho_end;
            }
        }
    }

    let best = argmin(&fs);
    Ok(Outcome {
        x: pts[best].iter().copied().collect(),
        f: fs[best],
        history: ev.history,
    })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}
