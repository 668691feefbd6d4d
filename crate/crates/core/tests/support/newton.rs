//! Polar Newton-Raphson load flow on the full bus admittance matrix. Shares
//! nothing with the sweep solver beyond the network description, so it can
//! serve as an independent reference.

#![allow(dead_code)]

use dgsite::grid::Network;
use dgsite::powerflow::InjectionSet;
use nalgebra::{Complex, DMatrix, DVector};

pub struct NewtonSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    /// Sum of all bus injections, i.e. series loss, kW.
    pub loss_kw: f64,
    pub slack_p_kw: f64,
    pub iterations: usize,
}

impl NewtonSolution {
    pub fn min_voltage(&self) -> (usize, f64) {
        self.v_mag
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }
}

fn admittance(network: &Network) -> Vec<Vec<Complex<f64>>> {
    let n = network.bus_count();
    let base = network.base();
    let mut y = vec![vec![Complex::new(0.0, 0.0); n]; n];
    for br in network.branches() {
        let i = network.index_of(br.from).unwrap();
        let k = network.index_of(br.to).unwrap();
        let z = Complex::new(base.ohm_to_pu(br.r_ohm), base.ohm_to_pu(br.x_ohm));
        let yb = Complex::new(1.0, 0.0) / z;
        y[i][i] += yb;
        y[k][k] += yb;
        y[i][k] -= yb;
        y[k][i] -= yb;
    }
    y
}

/// Solves with net demand `injections` and slack magnitude `v_slack`.
pub fn newton_solve(network: &Network, injections: &InjectionSet, v_slack: f64, tol: f64) -> NewtonSolution {
    let n = network.bus_count();
    let slack = network.slack_index();
    let base = network.base();
    let y = admittance(network);
    let p_spec: Vec<f64> = injections.p_net_kw().iter().map(|&p| -base.kw_to_pu(p)).collect();
    let q_spec: Vec<f64> = injections.q_net_kvar().iter().map(|&q| -base.kw_to_pu(q)).collect();

    let pq: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = pq.len();
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    vm[slack] = v_slack;

    let calc = |vm: &[f64], va: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for i in 0..n {
            for k in 0..n {
                let (g, b) = (y[i][k].re, y[i][k].im);
                if g == 0.0 && b == 0.0 {
                    continue;
                }
                let t = va[i] - va[k];
                p[i] += vm[i] * vm[k] * (g * t.cos() + b * t.sin());
                q[i] += vm[i] * vm[k] * (g * t.sin() - b * t.cos());
            }
        }
        (p, q)
    };

    let mut iterations = 0;
    loop {
        let (p, q) = calc(&vm, &va);
        let mut mismatch = DVector::zeros(2 * m);
        for (r, &i) in pq.iter().enumerate() {
            mismatch[r] = p_spec[i] - p[i];
            mismatch[m + r] = q_spec[i] - q[i];
        }
        if mismatch.amax() < tol {
            break;
        }
        assert!(iterations < 50, "Newton-Raphson failed to converge");
        iterations += 1;

        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        for (r, &i) in pq.iter().enumerate() {
            for (c, &k) in pq.iter().enumerate() {
                let (g, b) = (y[i][k].re, y[i][k].im);
                if i == k {
                    jac[(r, c)] = -q[i] - b * vm[i] * vm[i];
                    jac[(r, m + c)] = p[i] / vm[i] + g * vm[i];
                    jac[(m + r, c)] = p[i] - g * vm[i] * vm[i];
                    jac[(m + r, m + c)] = q[i] / vm[i] - b * vm[i];
                } else {
                    let t = va[i] - va[k];
                    let (s, co) = (t.sin(), t.cos());
                    jac[(r, c)] = vm[i] * vm[k] * (g * s - b * co);
                    jac[(r, m + c)] = vm[i] * (g * co + b * s);
                    jac[(m + r, c)] = -vm[i] * vm[k] * (g * co + b * s);
                    jac[(m + r, m + c)] = vm[i] * (g * s - b * co);
                }
            }
        }
        let dx = jac.lu().solve(&mismatch).expect("Jacobian is singular");
        for (r, &i) in pq.iter().enumerate() {
            va[i] += dx[r];
            vm[i] += dx[m + r];
        }
    }

    let (p, _) = calc(&vm, &va);
    let loss_pu: f64 = p.iter().sum();
    NewtonSolution {
        v_mag: vm,
        v_ang: va,
        loss_kw: base.pu_to_kw(loss_pu),
        slack_p_kw: base.pu_to_kw(p[slack]),
        iterations,
    }
}
