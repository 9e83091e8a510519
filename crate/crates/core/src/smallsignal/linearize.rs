use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DynamicParams, Linearization, StateMatrix};
use crate::error::{Error, Result};
use crate::grid::{build_ybus_resolved, ComponentRef, GridCase, Outages};
use crate::powerflow::PowerFlowSolution;

/// Entries of the inverted augmented network above this magnitude are
/// treated as a singular reduction.
const SINGULAR_LIMIT: f64 = 1e12;

/// Builds the relative-angle swing model around a converged operating
/// point. Only in-service, non-outaged machines on energized buses take
/// part.
pub fn linearize(
    case: &GridCase,
    outages: &[ComponentRef],
    solution: &PowerFlowSolution,
    params: &DynamicParams,
) -> Result<Linearization> {
    let resolved = Outages::resolve(case, outages)?;
    linearize_resolved(case, &resolved, solution, params)
}

pub(crate) fn linearize_resolved(
    case: &GridCase,
    outages: &Outages,
    solution: &PowerFlowSolution,
    params: &DynamicParams,
) -> Result<Linearization> {
    if !solution.converged {
        return Err(Error::Contract("linearization needs a converged power flow".into()));
    }
    if params.machines.len() != case.generators.len() {
        return Err(Error::Contract(format!(
            "{} machine parameter sets for {} generators",
            params.machines.len(),
            case.generators.len()
        )));
    }
    let units: Vec<usize> = (0..case.generators.len())
        .filter(|&k| {
            let g = &case.generators[k];
            g.in_service && !outages.generator_out(k) && solution.energized[g.bus]
        })
        .collect();
    let m = units.len();
    if m < 2 {
        return Ok(Linearization::Degenerate { machines: m });
    }

    let buses: Vec<usize> = (0..case.n_bus()).filter(|&b| solution.energized[b]).collect();
    let mut local = vec![usize::MAX; case.n_bus()];
    for (l, &b) in buses.iter().enumerate() {
        local[b] = l;
    }
    let nb = buses.len();

    // augmented network: lines, constant-impedance loads, transient reactances
    let ybus = build_ybus_resolved(case, outages);
    let mut y_aug = DMatrix::<Complex64>::zeros(nb, nb);
    for (l, &b) in buses.iter().enumerate() {
        for (j, v) in ybus.row(b) {
            if local[j] != usize::MAX {
                y_aug[(l, local[j])] += v;
            }
        }
        let bus = &case.buses[b];
        let v2 = solution.v_mag[b] * solution.v_mag[b];
        y_aug[(l, l)] += Complex64::new(bus.load_p, -bus.load_q) / v2;
    }
    let mut y_int = Vec::with_capacity(m);
    let mut emf = Vec::with_capacity(m);
    for &k in &units {
        let g = &case.generators[k];
        let x = params.machines[k].xd_transient * case.base_mva / g.mva_base;
        let y = Complex64::new(0.0, -1.0 / x);
        y_aug[(local[g.bus], local[g.bus])] += y;
        y_int.push(y);
        let v = solution.voltage(g.bus);
        let current = (Complex64::new(solution.gen_p[k], solution.gen_q[k]) / v).conj();
        emf.push(v + Complex64::new(0.0, x) * current);
    }

    // Kron reduction onto the internal nodes
    let mut rhs = DMatrix::<Complex64>::zeros(nb, m);
    for (i, &k) in units.iter().enumerate() {
        rhs[(local[case.generators[k].bus], i)] = Complex64::new(1.0, 0.0);
    }
    let z = y_aug
        .lu()
        .solve(&rhs)
        .filter(|z| z.iter().all(|v| v.re.is_finite() && v.im.is_finite() && v.norm() < SINGULAR_LIMIT))
        .ok_or_else(|| Error::Numerical("network reduction is singular".into()))?;
    let y_red = DMatrix::<Complex64>::from_fn(m, m, |i, j| {
        let zij = z[(local[case.generators[units[i]].bus], j)];
        let diag = if i == j { y_int[i] } else { Complex64::new(0.0, 0.0) };
        diag - y_int[i] * y_int[j] * zij
    });

    // synchronizing coefficients dP_i / d delta_j
    let mut k_sync = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..m {
            if i == j {
                continue;
            }
            let delta = emf[i].arg() - emf[j].arg();
            let (g, b) = (y_red[(i, j)].re, y_red[(i, j)].im);
            let kij = emf[i].norm() * emf[j].norm() * (g * delta.sin() - b * delta.cos());
            k_sync[(i, j)] = kij;
            row_sum += kij;
        }
        k_sync[(i, i)] = -row_sum;
    }

    let mut inertia = Vec::with_capacity(m);
    let mut damping = Vec::with_capacity(m);
    for &k in &units {
        let scale = case.generators[k].mva_base / (params.omega_s * case.base_mva);
        inertia.push(2.0 * params.machines[k].inertia_h * scale);
        damping.push(params.machines[k].damping_d * scale);
    }

    let reference = (0..m)
        .max_by(|&a, &b| {
            let pa = case.generators[units[a]].p_max;
            let pb = case.generators[units[b]].p_max;
            pa.total_cmp(&pb).then(b.cmp(&a))
        })
        .expect("at least two machines");
    let others: Vec<usize> = (0..m).filter(|&i| i != reference).collect();
    let n = others.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (row, &i) in others.iter().enumerate() {
        a[(row, n + row)] = 1.0;
        for (col, &k) in others.iter().enumerate() {
            a[(n + row, col)] = -(k_sync[(i, k)] / inertia[i] - k_sync[(reference, k)] / inertia[reference]);
        }
        a[(n + row, n + row)] = -damping[i] / inertia[i];
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("state matrix has non-finite entries".into()));
    }
    Ok(Linearization::Model(StateMatrix {
        matrix: a,
        generators: others.iter().map(|&i| units[i]).collect(),
        reference: units[reference],
    }))
}
