//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's numerical routines: matrices are assembled densely and flows are
//! propagated by brute iteration.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use quantum_routing::network::RoutingNetwork;

pub type Dense = Vec<Vec<C>>;

pub fn identity(n: usize) -> Dense {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        C::new(1.0, 0.0)
                    } else {
                        C::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![C::new(0.0, 0.0); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..m {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, ca, rb, cb) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![C::new(0.0, 0.0); ca * cb]; ra * rb];
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn adjoint(a: &Dense) -> Dense {
    (0..a[0].len())
        .map(|j| (0..a.len()).map(|i| a[i][j].conj()).collect())
        .collect()
}

/// The single-qubit strategy matrix written out entry by entry.
pub fn u_oracle(theta: f64, phi: f64, alpha: f64) -> Dense {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = |x: f64| C::from_polar(1.0, x);
    vec![
        vec![e(-phi) * c, e(alpha) * s],
        vec![-e(-alpha) * s, e(phi) * c],
    ]
}

/// `cos γ · I + i sin γ · X⊗X⊗…⊗X`, built from Kronecker products.
pub fn j_oracle(gamma: f64, n: usize) -> Dense {
    let x = vec![
        vec![C::new(0.0, 0.0), C::new(1.0, 0.0)],
        vec![C::new(1.0, 0.0), C::new(0.0, 0.0)],
    ];
    let mut xn = x.clone();
    for _ in 1..n {
        xn = kron(&xn, &x);
    }
    let dim = 1 << n;
    let id = identity(dim);
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| id[i][j] * gamma.cos() + C::new(0.0, gamma.sin()) * xn[i][j])
                .collect()
        })
        .collect()
}

/// Full pipeline applied to `|0…0⟩`: the first column of `J† (U₀⊗U₁⊗…) J`.
pub fn dense_final_state(angles: &[(f64, f64, f64)], gamma: f64) -> Vec<C> {
    let n = angles.len();
    let mut local = u_oracle(angles[0].0, angles[0].1, angles[0].2);
    for &(t, p, a) in &angles[1..] {
        local = kron(&local, &u_oracle(t, p, a));
    }
    let j = j_oracle(gamma, n);
    let m = matmul(&adjoint(&j), &matmul(&local, &j));
    m.iter().map(|row| row[0]).collect()
}

/// Probability that qubit `k` (0 = most significant) reads 0.
pub fn dense_marginal(state: &[C], k: usize, n: usize) -> f64 {
    state
        .iter()
        .enumerate()
        .filter(|(b, _)| (b >> (n - 1 - k)) & 1 == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Edge flows by repeatedly pushing node inflows along the routing shares,
/// starting from nothing: `in ← injection + Pᵀ in`, `rounds` times.
pub fn propagate_flows(
    network: &RoutingNetwork<f64>,
    fractions: &[f64],
    rounds: usize,
) -> Vec<f64> {
    let n = network.nodes().len();
    let edges = network.edges();
    let mut share = vec![1.0; edges.len()];
    for (k, d) in network.decisions().iter().enumerate() {
        share[d.options[0]] = fractions[k];
        share[d.options[1]] = 1.0 - fractions[k];
    }
    let mut inflow = vec![0.0; n];
    for _ in 0..rounds {
        let mut next = vec![0.0; n];
        next[network.source()] += network.demand();
        for (e, edge) in edges.iter().enumerate() {
            if edge.from != network.sink() {
                next[edge.to] += share[e] * inflow[edge.from];
            }
        }
        inflow = next;
    }
    edges
        .iter()
        .enumerate()
        .map(|(e, edge)| share[e] * inflow[edge.from])
        .collect()
}

/// Minimum of `g` over `[0, 1]` sampled at `1/steps` resolution.
pub fn brute_min(g: impl Fn(f64) -> f64, steps: usize) -> (f64, f64) {
    (0..=steps)
        .map(|i| {
            let x = i as f64 / steps as f64;
            (x, g(x))
        })
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        })
}
