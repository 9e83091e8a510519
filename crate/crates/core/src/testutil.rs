//! Small hand-built cases shared by unit tests.

use crate::grid::{Branch, BranchKind, Bus, BusKind, Generator, GridCase};

pub(crate) fn bus(id: usize, kind: BusKind, load_p: f64, load_q: f64) -> Bus {
    Bus {
        id,
        external_id: id as i64 + 1,
        kind,
        voltage_setpoint: 1.0,
        load_p,
        load_q,
        shunt_g: 0.0,
        shunt_b: 0.0,
        vmin: 0.9,
        vmax: 1.1,
    }
}

pub(crate) fn line(id: usize, from_bus: usize, to_bus: usize, x: f64) -> Branch {
    Branch {
        id,
        from_bus,
        to_bus,
        kind: BranchKind::Line,
        r: 0.0,
        x,
        b_shunt: 0.0,
        tap_ratio: 1.0,
        rating: Some(2.0),
        in_service: true,
    }
}

pub(crate) fn generator(id: usize, bus: usize, p_set: f64, p_max: f64) -> Generator {
    Generator {
        id,
        bus,
        p_set,
        p_min: 0.0,
        p_max,
        q_min: -5.0,
        q_max: 5.0,
        mva_base: 100.0,
        inertia_h: 4.0,
        damping_d: 2.0,
        xd_transient: 0.3,
        in_service: true,
    }
}

/// Slack bus 0 with one generator, PQ bus 1 with a 0.5 pu load, one line
/// of reactance 0.1 pu.
pub(crate) fn two_bus() -> GridCase {
    GridCase {
        base_mva: 100.0,
        frequency: 60.0,
        buses: vec![bus(0, BusKind::Slack, 0.0, 0.0), bus(1, BusKind::PQ, 0.5, 0.0)],
        branches: vec![line(0, 0, 1, 0.1)],
        generators: vec![generator(0, 0, 0.5, 2.0)],
    }
}

/// Three-bus ring (lines 0-1, 1-2, 0-2) with no generators.
pub(crate) fn ring3() -> GridCase {
    GridCase {
        base_mva: 100.0,
        frequency: 60.0,
        buses: vec![
            bus(0, BusKind::Slack, 0.0, 0.0),
            bus(1, BusKind::PQ, 0.0, 0.0),
            bus(2, BusKind::PQ, 0.0, 0.0),
        ],
        branches: vec![line(0, 0, 1, 0.1), line(1, 1, 2, 0.1), line(2, 0, 2, 0.1)],
        generators: vec![],
    }
}
