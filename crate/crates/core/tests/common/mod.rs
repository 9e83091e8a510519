#![allow(dead_code)]

use std::path::PathBuf;

use gridrisk::caseio::read_case;
use gridrisk::{Branch, BranchKind, Bus, BusKind, Generator, GridCase};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> GridCase {
    read_case(&fixture(name)).expect("fixture parses").grid
}

pub fn bus(id: usize, kind: BusKind, load_p: f64, load_q: f64) -> Bus {
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

pub fn line(id: usize, from_bus: usize, to_bus: usize, x: f64) -> Branch {
    Branch {
        id,
        from_bus,
        to_bus,
        kind: BranchKind::Line,
        r: 0.0,
        x,
        b_shunt: 0.0,
        tap_ratio: 1.0,
        rating: None,
        in_service: true,
    }
}

pub fn generator(id: usize, bus: usize, p_set: f64, p_max: f64) -> Generator {
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

/// Slack bus 0 feeding PQ bus 1 through one lossless line.
pub fn two_bus(load_p: f64, x: f64) -> GridCase {
    GridCase {
        base_mva: 100.0,
        frequency: 60.0,
        buses: vec![bus(0, BusKind::Slack, 0.0, 0.0), bus(1, BusKind::PQ, load_p, 0.0)],
        branches: vec![line(0, 0, 1, x)],
        generators: vec![generator(0, 0, 0.0, 100.0)],
    }
}

/// Path graph 0-1-...-(n-1) plus the given extra edges, slack at bus 0 with
/// one generator and no load.
pub fn graph_case(n: usize, edges: &[(usize, usize)]) -> GridCase {
    let mut buses = vec![bus(0, BusKind::Slack, 0.0, 0.0)];
    buses.extend((1..n).map(|b| bus(b, BusKind::PQ, 0.0, 0.0)));
    GridCase {
        base_mva: 100.0,
        frequency: 60.0,
        buses,
        branches: edges.iter().enumerate().map(|(k, &(a, b))| line(k, a, b, 0.1)).collect(),
        generators: vec![generator(0, 0, 0.0, 1.0)],
    }
}

/// Disjoint-set forest with path halving and union by size.
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// True when two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let n = a.len();
    (0..n).all(|i| (0..n).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Largest active mismatch over energized non-slack buses and reactive
/// mismatch over energized PQ buses, recomputed from the branch data.
pub fn independent_mismatch(case: &GridCase, sol: &gridrisk::powerflow::PowerFlowSolution, outaged: &[gridrisk::ComponentRef]) -> f64 {
    use num_complex::Complex64;
    let n = case.n_bus();
    let v: Vec<Complex64> = (0..n).map(|b| Complex64::from_polar(sol.v_mag[b], sol.v_ang[b])).collect();
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    for (k, br) in case.branches.iter().enumerate() {
        if !br.in_service || outaged.contains(&case.branch_ref(k)) {
            continue;
        }
        let (f, t) = (br.from_bus, br.to_bus);
        if !sol.energized[f] || !sol.energized[t] {
            continue;
        }
        let y = Complex64::new(br.r, br.x).inv();
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        let a = br.tap_ratio;
        let i_from = (y + half) / (a * a) * v[f] - y / a * v[t];
        let i_to = -y / a * v[f] + (y + half) * v[t];
        s[f] += v[f] * i_from.conj();
        s[t] += v[t] * i_to.conj();
    }
    let mut worst: f64 = 0.0;
    for b in 0..n {
        if !sol.energized[b] {
            continue;
        }
        let bus = &case.buses[b];
        let shunt = Complex64::new(bus.shunt_g, bus.shunt_b).conj() * sol.v_mag[b] * sol.v_mag[b];
        let mut spec = Complex64::new(-bus.load_p, -bus.load_q);
        for (k, g) in case.generators.iter().enumerate() {
            if g.bus == b {
                spec += Complex64::new(sol.gen_p[k], sol.gen_q[k]);
            }
        }
        let mis = s[b] + shunt - spec;
        match sol.bus_kinds[b] {
            Some(BusKind::Slack) => {}
            Some(BusKind::PV) => worst = worst.max(mis.re.abs()),
            _ => worst = worst.max(mis.re.abs()).max(mis.im.abs()),
        }
    }
    worst
}

/// Roots of the characteristic polynomial of `a`, computed with the
/// Faddeev-LeVerrier recursion and Durand-Kerner iteration, then polished
/// with Newton steps.
pub fn charpoly_eigenvalues(a: &nalgebra::DMatrix<f64>) -> Vec<num_complex::Complex64> {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    let n = a.nrows();
    // monic coefficients c[0] = 1, p(x) = sum c[k] x^(n-k)
    let mut c = vec![1.0; n + 1];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &id * c[k - 1];
        c[k] = -(a * &m).trace() / k as f64;
    }
    let eval = |z: Complex64| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * z + ck);
    let deriv = |z: Complex64| {
        c[..n]
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &ck)| acc * z + ck * (n - k) as f64)
    };
    let radius = 1.0 + c[1..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    for r in &mut roots {
        for _ in 0..5 {
            let d = deriv(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    roots
}

/// Greedy nearest matching; returns the largest distance.
pub fn spectrum_distance(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut unused: Vec<num_complex::Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = unused
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        worst = worst.max(d);
        unused.swap_remove(k);
    }
    worst
}
