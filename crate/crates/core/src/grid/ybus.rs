use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{GridCase, Outages};
use crate::error::Result;
use crate::ComponentRef;

/// Sparse bus admittance matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of row `i` as `(column, value)`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Number of structurally present off-diagonal entries.
    pub fn offdiag_nnz(&self) -> usize {
        (0..self.n)
            .map(|i| self.row(i).filter(|&(j, _)| j != i).count())
            .sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, y) in self.row(i) {
                row[j] = y;
            }
        }
        dense
    }

    /// Current injections `I = Y V`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, y)| y * v[j]).sum())
            .collect()
    }
}

/// Two-port admittances `(y_ff, y_ft, y_tf, y_tt)` of a branch, with the
/// ideal tap on the from side.
pub(crate) fn branch_admittances(
    branch: &super::Branch,
) -> (Complex64, Complex64, Complex64, Complex64) {
    let y = Complex64::new(branch.r, branch.x).inv();
    let half_charging = Complex64::new(0.0, branch.b_shunt / 2.0);
    let t = branch.tap_ratio;
    let ytt = y + half_charging;
    let yff = ytt / (t * t);
    let yft = -y / t;
    (yff, yft, yft, ytt)
}

/// Builds the admittance matrix of `case` with the listed components out of
/// service. Generator outages leave the matrix unchanged.
pub fn build_ybus(case: &GridCase, outages: &[ComponentRef]) -> Result<AdmittanceMatrix> {
    let resolved = Outages::resolve(case, outages)?;
    Ok(build_ybus_resolved(case, &resolved))
}

pub(crate) fn build_ybus_resolved(case: &GridCase, outages: &Outages) -> AdmittanceMatrix {
    let n = case.n_bus();
    let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); n];
    let zero = Complex64::new(0.0, 0.0);

    for (i, bus) in case.buses.iter().enumerate() {
        if bus.shunt_g != 0.0 || bus.shunt_b != 0.0 {
            *rows[i].entry(i).or_insert(zero) += Complex64::new(bus.shunt_g, bus.shunt_b);
        }
    }
    for (k, br) in case.branches.iter().enumerate() {
        if !br.in_service || outages.branch_out(k) {
            continue;
        }
        let (yff, yft, ytf, ytt) = branch_admittances(br);
        let (f, t) = (br.from_bus, br.to_bus);
        *rows[f].entry(f).or_insert(zero) += yff;
        *rows[f].entry(t).or_insert(zero) += yft;
        *rows[t].entry(f).or_insert(zero) += ytf;
        *rows[t].entry(t).or_insert(zero) += ytt;
    }

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for row in rows {
        for (j, y) in row {
            cols.push(j);
            vals.push(y);
        }
        row_ptr.push(cols.len());
    }
    AdmittanceMatrix {
        n,
        row_ptr,
        cols,
        vals,
    }
}
