//! Dense bounded-variable primal simplex with Bland's anti-cycling rule.
//!
//! Problems have the form `min c·x  s.t.  A x <= b,  lo <= x <= hi` with
//! finite variable bounds, so every LP here is either infeasible or has a
//! finite optimum. Variables that appear in no constraint row are set
//! analytically and never enter the tableau.

use crate::error::{Error, Result};

/// Constraint violations up to this amount count as feasible.
pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const MAX_ITERS: usize = 50_000;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        debug_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h && l.is_finite() && h.is_finite()));
        Self { lo, hi, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.lo.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds the row `coeffs · x <= rhs`.
    pub fn add_row(&mut self, coeffs: Vec<f64>, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    pub fn is_feasible(&self) -> Result<bool> {
        Ok(self.prepare()?.is_some())
    }

    pub fn minimize(&self, c: &[f64]) -> Result<Option<Optimum>> {
        match self.prepare()? {
            Some(p) => p.minimize(c).map(Some),
            None => Ok(None),
        }
    }

    pub fn maximize(&self, c: &[f64]) -> Result<Option<Optimum>> {
        match self.prepare()? {
            Some(p) => p.maximize(c).map(Some),
            None => Ok(None),
        }
    }

    /// Runs phase 1 once; the returned handle answers any number of
    /// objectives over the same feasible region.
    pub fn prepare(&self) -> Result<Option<PreparedLp<'_>>> {
        let n = self.num_vars();
        let active: Vec<usize> = (0..n)
            .filter(|&j| self.rows.iter().any(|r| r[j] != 0.0))
            .collect();
        if active.is_empty() {
            let ok = self.rhs.iter().all(|&b| b >= -FEAS_TOL);
            return Ok(ok.then(|| PreparedLp { lp: self, active, tableau: None }));
        }
        let mut tab = Tableau::build(self, &active);
        let ok = tab.phase_one()?;
        Ok(ok.then(|| PreparedLp { lp: self, active, tableau: Some(tab) }))
    }
}

/// A feasible LP with a phase-1 basis ready for optimization.
pub struct PreparedLp<'a> {
    lp: &'a LinearProgram,
    active: Vec<usize>,
    tableau: Option<Tableau>,
}

impl PreparedLp<'_> {
    pub fn minimize(&self, c: &[f64]) -> Result<Optimum> {
        let lp = self.lp;
        assert_eq!(c.len(), lp.num_vars());
        // Columns outside every constraint sit at whichever bound is best.
        let mut x: Vec<f64> = (0..lp.num_vars())
            .map(|j| if c[j] < 0.0 { lp.hi[j] } else { lp.lo[j] })
            .collect();
        if let Some(tab) = &self.tableau {
            let mut tab = tab.clone();
            let cost: Vec<f64> = self.active.iter().map(|&j| c[j]).collect();
            tab.optimize(&cost)?;
            for (k, &j) in self.active.iter().enumerate() {
                x[j] = tab.value_of(k);
            }
        }
        let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        Ok(Optimum { value, x })
    }

    pub fn maximize(&self, c: &[f64]) -> Result<Optimum> {
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let mut opt = self.minimize(&neg)?;
        opt.value = -opt.value;
        Ok(opt)
    }

    /// Any feasible point.
    pub fn point(&self) -> Vec<f64> {
        let lp = self.lp;
        let mut x = lp.lo.clone();
        if let Some(tab) = &self.tableau {
            for (k, &j) in self.active.iter().enumerate() {
                x[j] = tab.value_of(k);
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Full tableau `B⁻¹ [A | I | ±I_art]` over structural, slack and artificial
/// columns, in that order.
#[derive(Debug, Clone)]
struct Tableau {
    m: usize,
    cols: usize,
    n_struct: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n_art: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram, active: &[usize]) -> Self {
        let m = lp.num_rows();
        let n = active.len();
        let residual: Vec<f64> = (0..m)
            .map(|i| lp.rhs[i] - active.iter().map(|&j| lp.rows[i][j] * lp.lo[j]).sum::<f64>())
            .collect();
        let art_rows: Vec<usize> = (0..m).filter(|&i| residual[i] < 0.0).collect();
        let n_art = art_rows.len();
        let cols = n + m + n_art;

        let mut lo: Vec<f64> = active.iter().map(|&j| lp.lo[j]).collect();
        let mut hi: Vec<f64> = active.iter().map(|&j| lp.hi[j]).collect();
        lo.extend(std::iter::repeat_n(0.0, m + n_art));
        hi.extend(std::iter::repeat_n(f64::INFINITY, m + n_art));

        let mut t = vec![0.0; m * cols];
        let mut beta = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut state = vec![VarState::AtLower; cols];
        let mut art_of_row = vec![None; m];
        for (k, &i) in art_rows.iter().enumerate() {
            art_of_row[i] = Some(n + m + k);
        }
        for i in 0..m {
            let row = &mut t[i * cols..(i + 1) * cols];
            let sign = if art_of_row[i].is_some() { -1.0 } else { 1.0 };
            for (k, &j) in active.iter().enumerate() {
                row[k] = sign * lp.rows[i][j];
            }
            row[n + i] = sign;
            match art_of_row[i] {
                Some(a) => {
                    row[a] = 1.0;
                    basis[i] = a;
                    beta[i] = -residual[i];
                }
                None => {
                    basis[i] = n + i;
                    beta[i] = residual[i];
                }
            }
            state[basis[i]] = VarState::Basic(i);
        }
        Self { m, cols, n_struct: n, t, beta, basis, state, lo, hi, n_art }
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(i) => self.beta[i].clamp(self.lo[j], self.hi[j]),
            VarState::AtLower => self.lo[j],
            VarState::AtUpper => self.hi[j],
        }
    }

    fn phase_one(&mut self) -> Result<bool> {
        if self.n_art == 0 {
            return Ok(true);
        }
        let first_art = self.n_struct + self.m;
        let mut cost = vec![0.0; self.cols];
        cost[first_art..].iter_mut().for_each(|c| *c = 1.0);
        self.run(&cost)?;
        let infeas: f64 = (first_art..self.cols).map(|j| self.value_of(j)).sum();
        if infeas > FEAS_TOL {
            return Ok(false);
        }
        // Freeze artificials at zero for phase 2.
        for j in first_art..self.cols {
            self.hi[j] = 0.0;
            if let VarState::AtUpper = self.state[j] {
                self.state[j] = VarState::AtLower;
            }
        }
        Ok(true)
    }

    fn optimize(&mut self, structural_cost: &[f64]) -> Result<()> {
        let mut cost = vec![0.0; self.cols];
        cost[..self.n_struct].copy_from_slice(structural_cost);
        self.run(&cost)
    }

    fn run(&mut self, cost: &[f64]) -> Result<()> {
        let (m, cols) = (self.m, self.cols);
        let mut d = cost.to_vec();
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * cols..(i + 1) * cols];
                for (dj, &tij) in d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }

        for _ in 0..MAX_ITERS {
            // Bland: lowest-index improving column.
            let entering = (0..cols).find(|&j| match self.state[j] {
                VarState::Basic(_) => false,
                VarState::AtLower => d[j] < -COST_TOL && self.hi[j] > self.lo[j],
                VarState::AtUpper => d[j] > COST_TOL,
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let dir = if self.state[j] == VarState::AtLower { 1.0 } else { -1.0 };

            let mut step = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..m {
                let g = self.t[i * cols + j] * dir;
                let b = self.basis[i];
                let (limit, to_lower) = if g > PIVOT_TOL {
                    (((self.beta[i] - self.lo[b]) / g).max(0.0), true)
                } else if g < -PIVOT_TOL && self.hi[b].is_finite() {
                    (((self.hi[b] - self.beta[i]) / -g).max(0.0), false)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < step,
                    Some((r, _)) => {
                        limit < step || (limit == step && self.basis[i] < self.basis[r])
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, to_lower));
                }
            }
            if !step.is_finite() {
                return Err(Error::Dimension("unbounded LP over a bounded region".into()));
            }

            for i in 0..m {
                self.beta[i] -= self.t[i * cols + j] * dir * step;
            }
            match leave {
                None => {
                    self.state[j] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                }
                Some((r, to_lower)) => {
                    let start = if dir > 0.0 { self.lo[j] } else { self.hi[j] };
                    let old = self.basis[r];
                    self.state[old] = if to_lower { VarState::AtLower } else { VarState::AtUpper };
                    self.beta[r] = start + dir * step;
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic(r);
                    self.pivot(r, j, &mut d);
                }
            }
        }
        Err(Error::LpIterationLimit(MAX_ITERS))
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [f64]) {
        let cols = self.cols;
        let inv = 1.0 / self.t[r * cols + j];
        let (before, rest) = self.t.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        prow.iter_mut().for_each(|v| *v *= inv);
        prow[j] = 1.0;
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let f = d[j];
        if f != 0.0 {
            for (v, &p) in d.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            d[j] = 0.0;
        }
    }
}
