//! Newton-Raphson power flow in polar coordinates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{BranchFlow, Dispatch, PfFailure, PowerFlowOptions, PowerFlowSolution};
use crate::error::{Error, Result};
use crate::grid::{branch_admittances, build_ybus_resolved, BusKind, ComponentRef, GridCase, Outages};
use crate::topology::{find_islands_resolved, IslandPartition};

/// Mismatch beyond which an iterate is considered to have diverged.
const DIVERGENCE_LIMIT: f64 = 1e8;

/// Solves the island holding the case's slack bus.
///
/// Fails with a contract error when that bus has no available unit or has
/// been cut off from the main island; callers should then pick a new
/// reference with [`select_slack`] and use [`solve_power_flow_anchored`].
pub fn solve_power_flow(
    case: &GridCase,
    outages: &[ComponentRef],
    dispatch: &Dispatch,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution> {
    let resolved = Outages::resolve(case, outages)?;
    let partition = find_islands_resolved(case, &resolved);
    let slack = case
        .slack_bus()
        .ok_or_else(|| Error::Contract("case has no slack bus".into()))?;
    if !partition.in_main(slack) || !has_unit(case, &resolved, dispatch, slack) {
        return Err(Error::Contract(format!(
            "slack bus {} is outside the main island or has no available unit; re-anchor with select_slack",
            case.buses[slack].external_id
        )));
    }
    Ok(solve_resolved(case, &resolved, &partition, dispatch, slack, opts, None))
}

/// Solves the island containing `slack_bus`, which must host an available
/// generator.
pub fn solve_power_flow_anchored(
    case: &GridCase,
    outages: &[ComponentRef],
    dispatch: &Dispatch,
    slack_bus: usize,
    opts: &PowerFlowOptions,
    warm_start: Option<&PowerFlowSolution>,
) -> Result<PowerFlowSolution> {
    let resolved = Outages::resolve(case, outages)?;
    let partition = find_islands_resolved(case, &resolved);
    if slack_bus >= case.n_bus() || !has_unit(case, &resolved, dispatch, slack_bus) {
        return Err(Error::Contract(format!("bus {slack_bus} hosts no available generator")));
    }
    Ok(solve_resolved(case, &resolved, &partition, dispatch, slack_bus, opts, warm_start))
}

/// Reference bus for the main island: the case's slack bus when it is in
/// the main island with an available unit, otherwise the bus of the
/// available generator with the largest `p_max` in the main island.
pub fn select_slack(case: &GridCase, outages: &[ComponentRef], dispatch: &Dispatch) -> Result<Option<usize>> {
    let resolved = Outages::resolve(case, outages)?;
    let partition = find_islands_resolved(case, &resolved);
    Ok(select_slack_resolved(case, &resolved, &partition, dispatch))
}

pub(crate) fn select_slack_resolved(
    case: &GridCase,
    outages: &Outages,
    partition: &IslandPartition,
    dispatch: &Dispatch,
) -> Option<usize> {
    if let Some(s) = case.slack_bus() {
        if partition.in_main(s) && has_unit(case, outages, dispatch, s) {
            return Some(s);
        }
    }
    let mut best: Option<(usize, f64)> = None;
    for (k, g) in case.generators.iter().enumerate() {
        if !available(case, outages, dispatch, k) || !partition.in_main(g.bus) {
            continue;
        }
        if best.map_or(true, |(_, p)| g.p_max > p) {
            best = Some((g.bus, g.p_max));
        }
    }
    best.map(|(bus, _)| bus)
}

fn available(case: &GridCase, outages: &Outages, dispatch: &Dispatch, k: usize) -> bool {
    let g = &case.generators[k];
    g.in_service && !outages.generator_out(k) && dispatch.gen_p.contains_key(&g.id)
}

fn has_unit(case: &GridCase, outages: &Outages, dispatch: &Dispatch, bus: usize) -> bool {
    case.generators
        .iter()
        .enumerate()
        .any(|(k, g)| g.bus == bus && available(case, outages, dispatch, k))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Slack,
    PV,
    PQ,
}

struct Island {
    /// global bus index of each local bus
    buses: Vec<usize>,
    /// sparse rows in local indices
    y: Vec<Vec<(usize, Complex64)>>,
}

struct NewtonOutcome {
    iterations: usize,
    mismatch: f64,
    failure: Option<PfFailure>,
}

pub(crate) fn solve_resolved(
    case: &GridCase,
    outages: &Outages,
    partition: &IslandPartition,
    dispatch: &Dispatch,
    slack_bus: usize,
    opts: &PowerFlowOptions,
    warm_start: Option<&PowerFlowSolution>,
) -> PowerFlowSolution {
    let n_bus = case.n_bus();
    let island_label = partition.labels[slack_bus];
    let ybus = build_ybus_resolved(case, outages);

    let buses: Vec<usize> = partition.buses_in(island_label).collect();
    let mut local = vec![usize::MAX; n_bus];
    for (l, &b) in buses.iter().enumerate() {
        local[b] = l;
    }
    let y: Vec<Vec<(usize, Complex64)>> = buses
        .iter()
        .map(|&b| ybus.row(b).map(|(j, v)| (local[j], v)).collect())
        .collect();
    let island = Island { buses, y };
    let n = island.buses.len();

    // units in the island, grouped by bus
    let units: Vec<usize> = (0..case.generators.len())
        .filter(|&k| available(case, outages, dispatch, k) && local[case.generators[k].bus] != usize::MAX)
        .collect();
    let mut bus_units: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &k in &units {
        bus_units[local[case.generators[k].bus]].push(k);
    }

    let mut role = vec![Role::PQ; n];
    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    for (l, &b) in island.buses.iter().enumerate() {
        let bus = &case.buses[b];
        p_spec[l] = -bus.load_p;
        q_spec[l] = -bus.load_q;
        for &k in &bus_units[l] {
            p_spec[l] += dispatch.gen_p[&case.generators[k].id];
        }
        if b == slack_bus {
            role[l] = Role::Slack;
        } else if !bus_units[l].is_empty() && matches!(bus.kind, BusKind::PV | BusKind::Slack) {
            role[l] = Role::PV;
        }
        if role[l] != Role::PQ {
            let first = bus_units[l][0];
            vm[l] = dispatch
                .gen_v
                .get(&case.generators[first].id)
                .copied()
                .unwrap_or(bus.voltage_setpoint);
        }
        if let Some(w) = warm_start {
            if w.energized[b] {
                if role[l] == Role::PQ {
                    vm[l] = w.v_mag[b];
                }
                va[l] = w.v_ang[b];
            }
        }
    }
    // warm angles are re-referenced to the slack
    let slack_local = local[slack_bus];
    let shift = va[slack_local];
    for a in va.iter_mut() {
        *a -= shift;
    }

    let mut iterations = 0;
    let mut switches = 0;
    let switch_budget = 2 * case.n_generators();
    let mut switched_limit: Vec<Option<f64>> = vec![None; n];
    let mut outcome;
    loop {
        outcome = newton(&island, &role, &p_spec, &q_spec, &mut vm, &mut va, opts);
        iterations += outcome.iterations;
        if outcome.failure.is_some() || !opts.enforce_q_limits {
            break;
        }
        let s = power_injections(&island, &vm, &va);
        let mut violated = false;
        for l in 0..n {
            if role[l] != Role::PV {
                continue;
            }
            let b = island.buses[l];
            let q_gen = s[l].im + case.buses[b].load_q;
            let q_max: f64 = bus_units[l].iter().map(|&k| case.generators[k].q_max).sum();
            let q_min: f64 = bus_units[l].iter().map(|&k| case.generators[k].q_min).sum();
            let limit = if q_gen > q_max {
                Some(q_max)
            } else if q_gen < q_min {
                Some(q_min)
            } else {
                None
            };
            if let Some(q_lim) = limit {
                role[l] = Role::PQ;
                q_spec[l] = q_lim - case.buses[b].load_q;
                switched_limit[l] = Some(q_lim);
                switches += 1;
                violated = true;
            }
        }
        if !violated {
            break;
        }
        if switches > switch_budget {
            outcome.failure = Some(PfFailure::QLimitCycling);
            break;
        }
    }

    // assemble global outputs
    let mut v_mag = vec![0.0; n_bus];
    let mut v_ang = vec![0.0; n_bus];
    let mut energized = vec![false; n_bus];
    let mut bus_kinds = vec![None; n_bus];
    for (l, &b) in island.buses.iter().enumerate() {
        v_mag[b] = vm[l];
        v_ang[b] = va[l];
        energized[b] = true;
        bus_kinds[b] = Some(match role[l] {
            Role::Slack => BusKind::Slack,
            Role::PV => BusKind::PV,
            Role::PQ => BusKind::PQ,
        });
    }
    let s = power_injections(&island, &vm, &va);
    let mut gen_p = vec![0.0; case.generators.len()];
    let mut gen_q = vec![0.0; case.generators.len()];
    let mut slack_p = 0.0;
    for l in 0..n {
        let b = island.buses[l];
        let units_here = &bus_units[l];
        if units_here.is_empty() {
            continue;
        }
        for &k in units_here {
            gen_p[k] = dispatch.gen_p[&case.generators[k].id];
        }
        if role[l] == Role::Slack {
            // the first unit absorbs the balance
            slack_p = s[l].re + case.buses[b].load_p;
            let others: f64 = units_here[1..].iter().map(|&k| gen_p[k]).sum();
            gen_p[units_here[0]] = slack_p - others;
        }
        let q_total = match (role[l], switched_limit[l]) {
            (Role::PQ, Some(_)) | (Role::Slack, _) | (Role::PV, _) => s[l].im + case.buses[b].load_q,
            (Role::PQ, None) => 0.0,
        };
        split_reactive(case, units_here, q_total, switched_limit[l], &mut gen_q);
    }

    let branch_flow = case
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            let live = br.in_service && !outages.branch_out(k) && energized[br.from_bus] && energized[br.to_bus];
            if !live {
                return BranchFlow {
                    from: Complex64::new(0.0, 0.0),
                    to: Complex64::new(0.0, 0.0),
                };
            }
            let (yff, yft, ytf, ytt) = branch_admittances(br);
            let vf = Complex64::from_polar(v_mag[br.from_bus], v_ang[br.from_bus]);
            let vt = Complex64::from_polar(v_mag[br.to_bus], v_ang[br.to_bus]);
            BranchFlow {
                from: vf * (yff * vf + yft * vt).conj(),
                to: vt * (ytf * vf + ytt * vt).conj(),
            }
        })
        .collect();

    PowerFlowSolution {
        v_mag,
        v_ang,
        energized,
        bus_kinds,
        branch_flow,
        gen_p,
        gen_q,
        slack_bus,
        slack_p,
        converged: outcome.failure.is_none(),
        iterations,
        max_mismatch: outcome.mismatch,
        failure: outcome.failure,
    }
}

fn split_reactive(case: &GridCase, units: &[usize], q_total: f64, at_limit: Option<f64>, gen_q: &mut [f64]) {
    if let Some(limit) = at_limit {
        let upper: f64 = units.iter().map(|&k| case.generators[k].q_max).sum();
        for &k in units {
            let g = &case.generators[k];
            gen_q[k] = if limit == upper { g.q_max } else { g.q_min };
        }
        return;
    }
    let range: f64 = units.iter().map(|&k| case.generators[k].q_max - case.generators[k].q_min).sum();
    for &k in units {
        let g = &case.generators[k];
        gen_q[k] = if range > 0.0 {
            q_total * (g.q_max - g.q_min) / range
        } else {
            q_total / units.len() as f64
        };
    }
}

fn power_injections(island: &Island, vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    let v: Vec<Complex64> = vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
    island
        .y
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let current: Complex64 = row.iter().map(|&(j, y)| y * v[j]).sum();
            v[i] * current.conj()
        })
        .collect()
}

fn mismatch_norm(role: &[Role], s: &[Complex64], p_spec: &[f64], q_spec: &[f64]) -> f64 {
    let mut norm: f64 = 0.0;
    for i in 0..role.len() {
        if role[i] == Role::Slack {
            continue;
        }
        let dp = s[i].re - p_spec[i];
        norm = if dp.is_nan() { f64::NAN } else { norm.max(dp.abs()) };
        if role[i] == Role::PQ {
            let dq = s[i].im - q_spec[i];
            norm = if dq.is_nan() || norm.is_nan() { f64::NAN } else { norm.max(dq.abs()) };
        }
    }
    norm
}

fn newton(
    island: &Island,
    role: &[Role],
    p_spec: &[f64],
    q_spec: &[f64],
    vm: &mut [f64],
    va: &mut [f64],
    opts: &PowerFlowOptions,
) -> NewtonOutcome {
    let n = role.len();
    let mut th_col = vec![usize::MAX; n];
    let mut vm_col = vec![usize::MAX; n];
    let mut dim = 0;
    for i in 0..n {
        if role[i] != Role::Slack {
            th_col[i] = dim;
            dim += 1;
        }
    }
    for i in 0..n {
        if role[i] == Role::PQ {
            vm_col[i] = dim;
            dim += 1;
        }
    }

    let mut iterations = 0;
    loop {
        let v: Vec<Complex64> = vm.iter().zip(va.iter()).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        let current: Vec<Complex64> = island
            .y
            .iter()
            .map(|row| row.iter().map(|&(j, y)| y * v[j]).sum())
            .collect();
        let s: Vec<Complex64> = (0..n).map(|i| v[i] * current[i].conj()).collect();
        let norm = mismatch_norm(role, &s, p_spec, q_spec);
        if norm < opts.tol {
            return NewtonOutcome {
                iterations,
                mismatch: norm,
                failure: None,
            };
        }
        if !norm.is_finite() || norm > DIVERGENCE_LIMIT {
            return NewtonOutcome {
                iterations,
                mismatch: norm,
                failure: Some(PfFailure::Diverged),
            };
        }
        if iterations >= opts.max_iter {
            return NewtonOutcome {
                iterations,
                mismatch: norm,
                failure: Some(PfFailure::MaxIterations),
            };
        }

        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for i in 0..n {
            if role[i] == Role::Slack {
                continue;
            }
            let p_row = th_col[i];
            let q_row = vm_col[i];
            rhs[p_row] = -(s[i].re - p_spec[i]);
            if q_row != usize::MAX {
                rhs[q_row] = -(s[i].im - q_spec[i]);
            }
            let j_unit = Complex64::new(0.0, 1.0);
            for &(k, y) in &island.y[i] {
                let yv = y * v[k];
                let mut d_theta = -j_unit * v[i] * yv.conj();
                let mut d_vm = v[i] * (y * v[k] / vm[k]).conj();
                if k == i {
                    d_theta += j_unit * v[i] * current[i].conj();
                    d_vm += current[i].conj() * v[i] / vm[i];
                }
                if th_col[k] != usize::MAX {
                    jac[(p_row, th_col[k])] += d_theta.re;
                    if q_row != usize::MAX {
                        jac[(q_row, th_col[k])] += d_theta.im;
                    }
                }
                if vm_col[k] != usize::MAX {
                    jac[(p_row, vm_col[k])] += d_vm.re;
                    if q_row != usize::MAX {
                        jac[(q_row, vm_col[k])] += d_vm.im;
                    }
                }
            }
        }
        let step = match jac.lu().solve(&rhs) {
            Some(dx) if dx.iter().all(|x| x.is_finite()) => dx,
            _ => {
                return NewtonOutcome {
                    iterations,
                    mismatch: norm,
                    failure: Some(PfFailure::Singular),
                }
            }
        };
        for i in 0..n {
            if th_col[i] != usize::MAX {
                va[i] += step[th_col[i]];
            }
            if vm_col[i] != usize::MAX {
                vm[i] += step[vm_col[i]];
            }
        }
        iterations += 1;
    }
}
