#![allow(dead_code)]

use ma_isac::qcqp::{ConvexProgram, QuadConstraint};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random program on the unit box with the origin strictly feasible.
pub fn random_program(rng: &mut ChaCha8Rng, n: usize) -> ConvexProgram {
    let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut prog = ConvexProgram::new(c, vec![(-1.0, 1.0); n]);
    for _ in 0..rng.random_range(0..=3) {
        let k = rng.random_range(1..=n);
        let l = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        prog.add_quad(QuadConstraint {
            p: &l * l.transpose(),
            q: DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.5),
            r: -(0.1 + rng.random::<f64>()),
        });
    }
    for _ in 0..rng.random_range(0..=4) {
        let a: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        prog.add_linear(&a, 0.1 + rng.random::<f64>());
    }
    prog
}

fn rows_value_grad(prog: &ConvexProgram, x: &DVector<f64>) -> Vec<(f64, DVector<f64>)> {
    let n = prog.dim();
    let mut out: Vec<(f64, DVector<f64>)> = prog
        .quad_constraints
        .iter()
        .map(|c| (c.value(x), c.gradient(x)))
        .collect();
    for i in 0..prog.lin_a.nrows() {
        let a = prog.lin_a.row(i).transpose();
        out.push((a.dot(x) - prog.lin_b[i], a));
    }
    for (i, &(lo, hi)) in prog.bounds.iter().enumerate() {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        out.push((x[i] - hi, e.clone()));
        out.push((lo - x[i], -e));
    }
    out
}

/// Optimal value of `max cᵀx` by the central-cut ellipsoid method, started
/// from the ball circumscribing the box. Independent of the barrier solver.
pub fn ellipsoid_max(prog: &ConvexProgram) -> f64 {
    // Lift 1-D programs into 2-D with a dummy bounded coordinate.
    let prog = if prog.dim() == 1 {
        let mut lifted = ConvexProgram::new(
            DVector::from_vec(vec![prog.c[0], 0.0]),
            vec![prog.bounds[0], (-1.0, 1.0)],
        );
        for q in &prog.quad_constraints {
            let mut p = DMatrix::zeros(2, 2);
            p[(0, 0)] = q.p[(0, 0)];
            lifted.add_quad(QuadConstraint {
                p,
                q: DVector::from_vec(vec![q.q[0], 0.0]),
                r: q.r,
            });
        }
        for i in 0..prog.lin_a.nrows() {
            lifted.add_linear(&[prog.lin_a[(i, 0)], 0.0], prog.lin_b[i]);
        }
        lifted
    } else {
        prog.clone()
    };
    let n = prog.dim();
    let nf = n as f64;
    let mut x = DVector::zeros(n);
    let mut p = DMatrix::identity(n, n) * nf;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..200_000 {
        let cpc = (prog.c.transpose() * &p * &prog.c)[(0, 0)].max(0.0).sqrt();
        let upper = prog.objective(&x) + cpc;
        if best > f64::NEG_INFINITY && upper.max(best) - best < 1e-10 {
            break;
        }
        let rows = rows_value_grad(&prog, &x);
        let (worst, g) = rows
            .into_iter()
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap();
        let g = if worst > 0.0 {
            g
        } else {
            best = best.max(prog.objective(&x));
            -prog.c.clone()
        };
        let pg = &p * &g;
        let denom = g.dot(&pg).sqrt();
        if !(denom > 1e-300) {
            break;
        }
        let gt = &pg / denom;
        x -= &gt / (nf + 1.0);
        p = (&p - &gt * gt.transpose() * (2.0 / (nf + 1.0))) * (nf * nf / (nf * nf - 1.0));
        p = (&p + p.transpose()) * 0.5;
    }
    best
}

/// Best feasible objective over a uniform grid of the unit box.
pub fn grid_max(prog: &ConvexProgram, per_axis: usize) -> f64 {
    let n = prog.dim();
    let total = per_axis.pow(n as u32);
    let mut best = f64::NEG_INFINITY;
    let mut x = DVector::zeros(n);
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..n {
            x[i] = -1.0 + 2.0 * (rem % per_axis) as f64 / (per_axis - 1) as f64;
            rem /= per_axis;
        }
        if rows_value_grad(prog, &x).iter().all(|(v, _)| *v <= 0.0) {
            best = best.max(prog.objective(&x));
        }
    }
    best
}
