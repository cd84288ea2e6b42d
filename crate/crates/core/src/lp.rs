//! Exact rational linear programming.
//!
//! A dense two-phase simplex over `BigRational` with Bland's pivoting rule,
//! plus a Carathéodory-style decomposition of a point of an integral polytope
//! into integral vertices, and a structural check for constraint systems made
//! of two laminar families.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub cmp: Cmp,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(v, a)| a * &x[*v]).sum()
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let l = self.lhs(x);
        match self.cmp {
            Cmp::Le => l <= self.rhs,
            Cmp::Ge => l >= self.rhs,
            Cmp::Eq => l == self.rhs,
        }
    }
}

/// A linear program `max c·x` subject to linear constraints and per-variable
/// bounds. Variables default to `x >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalLP {
    lower: Vec<Option<Rational>>,
    upper: Vec<Option<Rational>>,
    constraints: Vec<Constraint>,
    objective: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub x: Vec<Rational>,
    pub value: Rational,
}

impl RationalLP {
    pub fn new(n_vars: usize) -> Self {
        RationalLP {
            lower: vec![Some(Rational::zero()); n_vars],
            upper: vec![None; n_vars],
            constraints: Vec::new(),
            objective: vec![Rational::zero(); n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.lower.len()
    }

    /// Appends a variable with the given bounds and returns its index.
    pub fn add_var(&mut self, lo: Option<Rational>, hi: Option<Rational>) -> usize {
        self.lower.push(lo);
        self.upper.push(hi);
        self.objective.push(Rational::zero());
        self.lower.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lo: Option<Rational>, hi: Option<Rational>) -> Result<()> {
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h {
                return Err(Error::domain(format!("bounds of x{var} are inconsistent")));
            }
        }
        self.lower[var] = lo;
        self.upper[var] = hi;
        Ok(())
    }

    pub fn bounds(&self, var: usize) -> (Option<&Rational>, Option<&Rational>) {
        (self.lower[var].as_ref(), self.upper[var].as_ref())
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, cmp: Cmp, rhs: Rational) -> Result<()> {
        if let Some((v, _)) = coeffs.iter().find(|(v, _)| *v >= self.n_vars()) {
            return Err(Error::domain(format!("constraint refers to unknown variable x{v}")));
        }
        self.constraints.push(Constraint { coeffs, cmp, rhs });
        Ok(())
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Sets the objective to maximize; unmentioned variables get coefficient 0.
    pub fn maximize(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = vec![Rational::zero(); self.n_vars()];
        for (v, c) in coeffs {
            self.objective[v] += c;
        }
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Exact feasibility test.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        x.len() == self.n_vars()
            && x.iter().enumerate().all(|(v, xv)| {
                self.lower[v].as_ref().is_none_or(|l| xv >= l)
                    && self.upper[v].as_ref().is_none_or(|h| xv <= h)
            })
            && self.constraints.iter().all(|c| c.holds(x))
    }

    /// Canonical text dump for debugging.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let term = |c: &Rational, v: usize| format!("{} x{v}", rational::to_text(c));
        let obj: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| term(c, v))
            .collect();
        let _ = writeln!(s, "max {}", if obj.is_empty() { "0".into() } else { obj.join(" + ") });
        for c in &self.constraints {
            let lhs: Vec<String> = c.coeffs.iter().map(|(v, a)| term(a, *v)).collect();
            let op = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(s, "  {} {op} {}", lhs.join(" + "), rational::to_text(&c.rhs));
        }
        for v in 0..self.n_vars() {
            let lo = self.lower[v].as_ref().map_or("-inf".to_string(), rational::to_text);
            let hi = self.upper[v].as_ref().map_or("inf".to_string(), rational::to_text);
            let _ = writeln!(s, "  {lo} <= x{v} <= {hi}");
        }
        s
    }

    /// Maximizes the objective exactly. Returns a basic optimal solution.
    pub fn solve(&self) -> Result<Solution> {
        let (std, map) = self.standard_form();
        let y = std.solve()?;
        let x: Vec<Rational> = map.iter().map(|m| m.value(&y)).collect();
        let value = self.objective_value(&x);
        debug_assert!(self.is_feasible(&x));
        Ok(Solution { x, value })
    }

    fn standard_form(&self) -> (StandardForm, Vec<VarMap>) {
        let mut map = Vec::with_capacity(self.n_vars());
        let mut ncols = 0;
        let mut extra_rows: Vec<(Vec<(usize, Rational)>, Cmp, Rational)> = Vec::new();
        for v in 0..self.n_vars() {
            match (&self.lower[v], &self.upper[v]) {
                (Some(lo), hi) => {
                    map.push(VarMap::Shift(ncols, lo.clone()));
                    if let Some(h) = hi {
                        extra_rows.push((vec![(ncols, Rational::one())], Cmp::Le, h - lo));
                    }
                    ncols += 1;
                }
                (None, Some(hi)) => {
                    map.push(VarMap::Neg(ncols, hi.clone()));
                    ncols += 1;
                }
                (None, None) => {
                    map.push(VarMap::Split(ncols, ncols + 1));
                    ncols += 2;
                }
            }
        }
        let mut rows = Vec::new();
        for c in &self.constraints {
            let mut coeffs = Vec::new();
            let mut rhs = c.rhs.clone();
            for (v, a) in &c.coeffs {
                match &map[*v] {
                    VarMap::Shift(col, lo) => {
                        coeffs.push((*col, a.clone()));
                        rhs -= a * lo;
                    }
                    VarMap::Neg(col, hi) => {
                        coeffs.push((*col, -a));
                        rhs -= a * hi;
                    }
                    VarMap::Split(p, n) => {
                        coeffs.push((*p, a.clone()));
                        coeffs.push((*n, -a));
                    }
                }
            }
            rows.push((coeffs, c.cmp, rhs));
        }
        rows.extend(extra_rows);
        let mut obj = vec![Rational::zero(); ncols];
        for (v, c) in self.objective.iter().enumerate() {
            match &map[v] {
                VarMap::Shift(col, _) => obj[*col] += c,
                VarMap::Neg(col, _) => obj[*col] -= c,
                VarMap::Split(p, n) => {
                    obj[*p] += c;
                    obj[*n] -= c;
                }
            }
        }
        (StandardForm { ncols, rows, obj }, map)
    }
}

enum VarMap {
    /// `x = lo + y[col]`
    Shift(usize, Rational),
    /// `x = hi - y[col]`
    Neg(usize, Rational),
    /// `x = y[p] - y[n]`
    Split(usize, usize),
}

impl VarMap {
    fn value(&self, y: &[Rational]) -> Rational {
        match self {
            VarMap::Shift(c, lo) => lo + &y[*c],
            VarMap::Neg(c, hi) => hi - &y[*c],
            VarMap::Split(p, n) => &y[*p] - &y[*n],
        }
    }
}

/// `max obj·y` over `y >= 0` and the rows.
struct StandardForm {
    ncols: usize,
    rows: Vec<(Vec<(usize, Rational)>, Cmp, Rational)>,
    obj: Vec<Rational>,
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    d: Vec<Rational>,
    d0: Rational,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.a[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.b[r] *= &inv;
        }
        let nz: Vec<usize> = (0..self.a[r].len()).filter(|&j| !self.a[r][j].is_zero()).collect();
        let prow = self.a[r].clone();
        let pb = self.b[r].clone();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for &j in &nz {
                let delta = &f * &prow[j];
                self.a[i][j] -= delta;
            }
            self.b[i] -= &f * &pb;
        }
        if !self.d[c].is_zero() {
            let f = self.d[c].clone();
            for &j in &nz {
                let delta = &f * &prow[j];
                self.d[j] -= delta;
            }
            self.d0 -= &f * &pb;
        }
        self.basis[r] = c;
    }

    fn price(&mut self, cost: &[Rational]) {
        self.d = cost.to_vec();
        self.d0 = Rational::zero();
        for i in 0..self.a.len() {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.a[i].iter().enumerate() {
                if !v.is_zero() {
                    self.d[j] -= &cb * v;
                }
            }
            self.d0 -= &cb * &self.b[i];
        }
    }

    /// Bland's rule iterations; `allowed` marks columns that may enter.
    fn run(&mut self, allowed: &[bool]) -> Result<()> {
        loop {
            let Some(c) = (0..self.d.len()).find(|&j| allowed[j] && self.d[j].is_positive()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                if self.a[i][c].is_positive() {
                    let ratio = &self.b[i] / &self.a[i][c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(Error::Unbounded),
            }
        }
    }
}

impl StandardForm {
    fn solve(&self) -> Result<Vec<Rational>> {
        let n = self.ncols;
        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let total = n + n_slack + m;
        let art0 = n + n_slack;
        let mut a = vec![vec![Rational::zero(); total]; m];
        let mut b = vec![Rational::zero(); m];
        let mut basis = vec![0; m];
        let mut slack = n;
        for (i, (coeffs, cmp, rhs)) in self.rows.iter().enumerate() {
            let flip = rhs.is_negative();
            let sign = if flip { -Rational::one() } else { Rational::one() };
            for (j, v) in coeffs {
                a[i][*j] += &sign * v;
            }
            b[i] = &sign * rhs;
            let mut basic = None;
            match cmp {
                Cmp::Le | Cmp::Ge => {
                    let s = if *cmp == Cmp::Le { Rational::one() } else { -Rational::one() };
                    a[i][slack] = &sign * s;
                    if a[i][slack].is_positive() {
                        basic = Some(slack);
                    }
                    slack += 1;
                }
                Cmp::Eq => {}
            }
            basis[i] = basic.unwrap_or(art0 + i);
            if basic.is_none() {
                a[i][art0 + i] = Rational::one();
            }
        }
        let mut t = Tableau {
            a,
            b,
            basis,
            d: Vec::new(),
            d0: Rational::zero(),
        };
        let mut phase1 = vec![Rational::zero(); total];
        for i in 0..m {
            if t.basis[i] >= art0 {
                phase1[art0 + i] = -Rational::one();
            }
        }
        t.price(&phase1);
        let mut allowed = vec![true; total];
        t.run(&allowed)?;
        if !t.d0.is_zero() {
            return Err(Error::Infeasible);
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.a.len() {
            if t.basis[i] >= art0 {
                match (0..art0).find(|&j| !t.a[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.a.remove(i);
                        t.b.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for f in allowed.iter_mut().skip(art0) {
            *f = false;
        }
        let mut cost = vec![Rational::zero(); total];
        cost[..n].clone_from_slice(&self.obj);
        t.price(&cost);
        t.run(&allowed)?;
        let mut y = vec![Rational::zero(); n];
        for (i, &bv) in t.basis.iter().enumerate() {
            if bv < n {
                y[bv] = t.b[i].clone();
            }
        }
        Ok(y)
    }
}

/// Convex combination of integral points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexDecomposition {
    pub points: Vec<Vec<Rational>>,
    pub weights: Vec<Rational>,
}

impl ConvexDecomposition {
    pub fn recompose(&self) -> Vec<Rational> {
        let dim = self.points.first().map_or(0, Vec::len);
        let mut out = vec![Rational::zero(); dim];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (o, v) in out.iter_mut().zip(p) {
                *o += w * v;
            }
        }
        out
    }
}

/// Rows of the polytope, bounds included, as `a·x <= b` / `a·x = b` pairs.
fn as_inequalities(poly: &RationalLP) -> Vec<(Vec<(usize, Rational)>, bool, Rational)> {
    let mut out = Vec::new();
    for c in &poly.constraints {
        match c.cmp {
            Cmp::Le => out.push((c.coeffs.clone(), false, c.rhs.clone())),
            Cmp::Ge => out.push((c.coeffs.iter().map(|(v, a)| (*v, -a)).collect(), false, -&c.rhs)),
            Cmp::Eq => out.push((c.coeffs.clone(), true, c.rhs.clone())),
        }
    }
    for v in 0..poly.n_vars() {
        if let Some(lo) = &poly.lower[v] {
            out.push((vec![(v, -Rational::one())], false, -lo));
        }
        if let Some(hi) = &poly.upper[v] {
            out.push((vec![(v, Rational::one())], false, hi.clone()));
        }
    }
    out
}

fn dot(coeffs: &[(usize, Rational)], x: &[Rational]) -> Rational {
    coeffs.iter().map(|(v, a)| a * &x[*v]).sum()
}

/// Writes `target` as a convex combination of integral vertices of `poly`.
///
/// Each round finds a vertex `y` of the smallest face containing the current
/// residual `z` (every inequality tight at `z` is imposed as an equation,
/// objective `max Σ z_c y_c`), then moves `z` away from `y` as far as the
/// polytope allows. Each round makes at least one more inequality tight, so
/// at most `dim + 1` points are produced. The polytope must be bounded and
/// have integral vertices; a fractional vertex yields a structural error.
pub fn decompose(target: &[Rational], poly: &RationalLP) -> Result<ConvexDecomposition> {
    if target.len() != poly.n_vars() {
        return Err(Error::domain("target dimension differs from the polytope"));
    }
    if !poly.is_feasible(target) {
        return Err(Error::Infeasible);
    }
    let rows = as_inequalities(poly);
    let mut z = target.to_vec();
    let mut lambda = Rational::one();
    let mut out = ConvexDecomposition {
        points: Vec::new(),
        weights: Vec::new(),
    };
    for _ in 0..=poly.n_vars() + 1 {
        if z.iter().all(rational::is_integral) {
            out.points.push(z);
            out.weights.push(lambda);
            return Ok(out);
        }
        let mut face = poly.clone();
        for c in face.constraints.iter_mut() {
            if c.lhs(&z) == c.rhs {
                c.cmp = Cmp::Eq;
            }
        }
        for v in 0..face.n_vars() {
            if face.lower[v].as_ref() == Some(&z[v]) || face.upper[v].as_ref() == Some(&z[v]) {
                face.lower[v] = Some(z[v].clone());
                face.upper[v] = Some(z[v].clone());
            }
        }
        face.maximize(z.iter().cloned().enumerate().collect());
        let y = face.solve()?.x;
        if !y.iter().all(rational::is_integral) {
            return Err(Error::structural(format!(
                "fractional vertex encountered: {:?}",
                y.iter().map(rational::to_text).collect::<Vec<_>>()
            )));
        }
        let mut mu: Option<Rational> = None;
        for (coeffs, is_eq, b) in &rows {
            if *is_eq {
                continue;
            }
            let sy = b - dot(coeffs, &y);
            if sy.is_positive() {
                let ratio = (b - dot(coeffs, &z)) / sy;
                if mu.as_ref().is_none_or(|m| ratio < *m) {
                    mu = Some(ratio);
                }
            }
        }
        let mu = match mu {
            Some(m) if m < Rational::one() => m,
            _ => {
                // No inequality limits the step: the residual is the vertex itself
                // unless the polytope is unbounded in that direction.
                if y != z {
                    return Err(Error::structural("polytope is not bounded"));
                }
                out.points.push(y);
                out.weights.push(lambda);
                return Ok(out);
            }
        };
        let rest = Rational::one() - &mu;
        for (zv, yv) in z.iter_mut().zip(&y) {
            *zv = (&*zv - &mu * yv) / &rest;
        }
        out.points.push(y);
        out.weights.push(&lambda * &mu);
        lambda *= rest;
    }
    Err(Error::structural("decomposition did not terminate within dim + 1 rounds"))
}

/// Checks the sufficient condition for total unimodularity used by the
/// scheduling polytopes: after dropping single-variable rows, every row has
/// 0/1 coefficients (up to a global sign) and the row supports split into two
/// laminar families.
pub fn verify_tu_laminar(lp: &RationalLP) -> bool {
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    for c in &lp.constraints {
        let nz: Vec<&(usize, Rational)> = c.coeffs.iter().filter(|(_, a)| !a.is_zero()).collect();
        let support: BTreeSet<usize> = nz.iter().map(|(v, _)| *v).collect();
        if support.len() <= 1 {
            continue;
        }
        if support.len() != nz.len() {
            return false;
        }
        let all_pos = nz.iter().all(|(_, a)| a.is_one());
        let all_neg = nz.iter().all(|(_, a)| *a == -Rational::one());
        if !all_pos && !all_neg {
            return false;
        }
        sets.push(support);
    }
    let cross = |a: &BTreeSet<usize>, b: &BTreeSet<usize>| {
        !a.is_disjoint(b) && !a.is_subset(b) && !b.is_subset(a)
    };
    let mut color: Vec<Option<bool>> = vec![None; sets.len()];
    for s in 0..sets.len() {
        if color[s].is_some() {
            continue;
        }
        color[s] = Some(false);
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            let cu = color[u].expect("colored");
            for v in 0..sets.len() {
                if v != u && cross(&sets[u], &sets[v]) {
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            stack.push(v);
                        }
                        Some(cv) if cv == cu => return false,
                        _ => {}
                    }
                }
            }
        }
    }
    true
}
