//! First-order feasibility oracle for the k = 1 capacity program with real
//! data: Dykstra's alternating projections over the convex sets
//! `{Q0 >= 0}`, `{Q1 >= 0}`, their partial transposes, `Q0 + Q1 = rho (x) I`
//! with `Tr rho = 1`, `Tr[Q0 Gamma] >= 1 - eps` and `Tr_A Q0 <= lambda I`.

use nalgebra::DMatrix;

type M = DMatrix<f64>;

#[derive(Clone)]
struct Point {
    rho: M,
    q0: M,
    q1: M,
}

impl Point {
    fn zeros(da: usize, db: usize) -> Self {
        Point { rho: M::zeros(da, da), q0: M::zeros(da * db, da * db), q1: M::zeros(da * db, da * db) }
    }
    fn add(&self, o: &Point, s: f64) -> Point {
        Point { rho: &self.rho + &o.rho * s, q0: &self.q0 + &o.q0 * s, q1: &self.q1 + &o.q1 * s }
    }
}

fn psd_part(m: &M) -> M {
    let e = ((m + m.transpose()) * 0.5).symmetric_eigen();
    let d = M::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0)));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

fn min_eig(m: &M) -> f64 {
    ((m + m.transpose()) * 0.5).symmetric_eigenvalues().min()
}

fn pt(m: &M, da: usize, db: usize) -> M {
    M::from_fn(da * db, da * db, |r, s| m[((r / db) * db + s % db, (s / db) * db + r % db)])
}

fn trace_a(m: &M, da: usize, db: usize) -> M {
    M::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum())
}

fn trace_b(m: &M, da: usize, db: usize) -> M {
    M::from_fn(da, da, |i, j| (0..db).map(|b| m[(i * db + b, j * db + b)]).sum())
}

fn id_a_kron(s: &M, da: usize) -> M {
    M::identity(da, da).kronecker(s)
}

fn kron_id_b(r: &M, db: usize) -> M {
    r.kronecker(&M::identity(db, db))
}

pub struct Problem {
    pub da: usize,
    pub db: usize,
    pub gamma: M,
    pub epsilon: f64,
    pub lambda: f64,
    pub ppt: bool,
}

impl Problem {
    fn project(&self, set: usize, p: &Point) -> Point {
        let (da, db) = (self.da, self.db);
        let mut out = p.clone();
        match set {
            0 => out.q0 = psd_part(&p.q0),
            1 => out.q1 = psd_part(&p.q1),
            2 => out.q0 = pt(&psd_part(&pt(&p.q0, da, db)), da, db),
            3 => out.q1 = pt(&psd_part(&pt(&p.q1, da, db)), da, db),
            4 => {
                // closed-form projection onto Q0 + Q1 = rho (x) I, Tr rho = 1
                let r = &p.q0 + &p.q1 - kron_id_b(&p.rho, db);
                let k = 2.0 + db as f64;
                let mu = (1.0 - p.rho.trace() - r.trace() / k) * k / (-2.0 * da as f64);
                let w = (trace_b(&r, da, db) + M::identity(da, da) * (mu * db as f64)) / k;
                let z = (&r - kron_id_b(&w, db) + M::identity(da * db, da * db) * mu) * 0.5;
                out.q0 = &p.q0 - &z;
                out.q1 = &p.q1 - &z;
                out.rho = &p.rho + &w - M::identity(da, da) * mu;
            }
            5 => {
                let short = (1.0 - self.epsilon) - p.q0.dot(&self.gamma);
                if short > 0.0 {
                    out.q0 = &p.q0 + &self.gamma * (short / self.gamma.norm_squared());
                }
            }
            6 => {
                let s = trace_a(&p.q0, da, db);
                let excess = psd_part(&(s - M::identity(db, db) * self.lambda));
                out.q0 = &p.q0 - id_a_kron(&excess, da) / da as f64;
            }
            _ => unreachable!(),
        }
        out
    }

    fn sets(&self) -> Vec<usize> {
        if self.ppt { vec![0, 1, 2, 3, 4, 5, 6] } else { vec![0, 1, 4, 5, 6] }
    }

    /// Largest violation of any constraint at `p`.
    fn violation(&self, p: &Point) -> f64 {
        let (da, db) = (self.da, self.db);
        let mut v: f64 = 0.0;
        v = v.max(-min_eig(&p.q0)).max(-min_eig(&p.q1));
        if self.ppt {
            v = v.max(-min_eig(&pt(&p.q0, da, db))).max(-min_eig(&pt(&p.q1, da, db)));
        }
        v = v.max((&p.q0 + &p.q1 - kron_id_b(&p.rho, db)).norm()).max((p.rho.trace() - 1.0).abs());
        v = v.max((1.0 - self.epsilon) - p.q0.dot(&self.gamma));
        v = v.max(-min_eig(&(M::identity(db, db) * self.lambda - trace_a(&p.q0, da, db))));
        v
    }

    /// Runs Dykstra's method from the origin and reports the final violation.
    pub fn dykstra(&self, cycles: usize) -> f64 {
        let sets = self.sets();
        let mut x = Point::zeros(self.da, self.db);
        let mut incr = vec![Point::zeros(self.da, self.db); sets.len()];
        for _ in 0..cycles {
            for (i, &s) in sets.iter().enumerate() {
                let y = x.add(&incr[i], 1.0);
                let proj = self.project(s, &y);
                incr[i] = y.add(&proj, -1.0);
                x = proj;
            }
        }
        self.violation(&x)
    }
}

/// Smallest `lambda` in `[lo, hi]` accepted by the projection oracle, to `tol`.
pub fn bisect_lambda(da: usize, db: usize, gamma: &M, epsilon: f64, ppt: bool, tol: f64) -> f64 {
    let feasible = |lambda: f64| {
        let p = Problem { da, db, gamma: gamma.clone(), epsilon, lambda, ppt };
        p.dykstra(3000) < 1e-9
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
