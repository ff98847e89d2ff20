//! Independent reference computations for the integration tests. Everything here
//! is built from plain vectors and explicit formulas, not from library helpers.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use wormhole::StateVector;

pub type C = Complex64;
pub type M = DMatrix<C>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The six probe states written out by hand.
pub fn six_states() -> Vec<(&'static str, [C; 2])> {
    let h = SQRT_HALF;
    vec![
        ("0", [c(1.0, 0.0), c(0.0, 0.0)]),
        ("1", [c(0.0, 0.0), c(1.0, 0.0)]),
        ("plus", [c(h, 0.0), c(h, 0.0)]),
        ("minus", [c(h, 0.0), c(-h, 0.0)]),
        ("left", [c(h, 0.0), c(0.0, -h)]),
        ("right", [c(h, 0.0), c(0.0, h)]),
    ]
}

pub fn haar_qubit<R: Rng>(rng: &mut R) -> [C; 2] {
    let mut v = [0; 4].map(|_| rng.sample::<f64, _>(StandardNormal));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    [c(v[0], v[1]), c(v[2], v[3])]
}

pub fn haar_state<R: Rng>(rng: &mut R, dim: usize) -> Vec<C> {
    let mut v: Vec<C> = (0..dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// Haar unitary: QR of a complex Ginibre matrix with the phases of R's diagonal removed.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> M {
    let g = M::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix `A A† / tr(A A†)` with a complex Gaussian `A`.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> M {
    let a = M::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &a * a.adjoint();
    let t = m.trace();
    m / t
}

pub fn sv(amps: Vec<C>) -> StateVector {
    StateVector::new(amps).expect("oracle produced a normalized state")
}

pub fn kron_vec(a: &[C], b: &[C]) -> Vec<C> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

pub fn eye(d: usize) -> M {
    M::identity(d, d)
}

/// `V` built entry by entry from its action on `|a b c>`.
pub fn v_from_formula() -> M {
    let mut v = M::zeros(8, 8);
    for a in 0..2usize {
        for b in 0..2usize {
            for cc in 0..2usize {
                let col = 4 * a + 2 * b + cc;
                let s = a ^ b ^ cc;
                let nb = a ^ b;
                let abar = 1 - a;
                let sign1 = if (abar * s) % 2 == 1 { -1.0 } else { 1.0 };
                let sign2 = if (a * s + a) % 2 == 1 { -1.0 } else { 1.0 };
                v[(4 * abar + 2 * nb + s, col)] += c(sign1 * SQRT_HALF, 0.0);
                v[(4 * a + 2 * nb + s, col)] += c(sign2 * SQRT_HALF, 0.0);
            }
        }
    }
    v
}

/// Amplitudes of `Π_i EPR(w_i, w'_i)` over `n` wires for the given pairs.
pub fn epr_layout(n: usize, pairs: &[(usize, usize)]) -> Vec<C> {
    let amp = SQRT_HALF.powi(pairs.len() as i32);
    let mut out = vec![c(0.0, 0.0); 1 << n];
    for bits in 0..(1usize << pairs.len()) {
        let mut idx = 0;
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if bits >> k & 1 == 1 {
                idx |= 1 << (n - 1 - a);
                idx |= 1 << (n - 1 - b);
            }
        }
        out[idx] = c(amp, 0.0);
    }
    out
}

/// Reduced density matrix of wire `w` computed by summing over all other bits.
pub fn reduce_to_wire(state: &[C], n: usize, w: usize) -> [[C; 2]; 2] {
    let mut r = [[c(0.0, 0.0); 2]; 2];
    let mask = 1usize << (n - 1 - w);
    for i in 0..state.len() {
        for j in 0..state.len() {
            if i & !mask == j & !mask {
                let (bi, bj) = (usize::from(i & mask != 0), usize::from(j & mask != 0));
                r[bi][bj] += state[i] * state[j].conj();
            }
        }
    }
    r
}

pub fn overlap(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C>()
        .norm_sqr()
}

pub fn mat_vec(m: &M, v: &[C]) -> Vec<C> {
    (0..m.nrows())
        .map(|i| (0..v.len()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// The five-wire protocol from the formula matrix: `(I4 ⊗ V)(V ⊗ I4)`.
pub fn five_wire_oracle(psi: &[C; 2]) -> (Vec<C>, Vec<C>) {
    let v = v_from_formula();
    let init = kron_vec(psi, &epr_layout(4, &[(0, 3), (1, 2)]));
    let pre = mat_vec(&kron(&v, &eye(4)), &init);
    let fin = mat_vec(&kron(&eye(4), &v), &pre);
    (pre, fin)
}

/// Final layout expected after the protocol: pairs (0,2), (1,3) and the state on wire 4.
pub fn expected_final(psi: &[C; 2]) -> Vec<C> {
    kron_vec(&epr_layout(4, &[(0, 2), (1, 3)]), psi)
}

/// Binary entropy in bits for a 2x2 Hermitian unit-trace matrix.
pub fn entropy_bits_2x2(r: &[[C; 2]; 2]) -> f64 {
    let (a, d) = (r[0][0].re, r[1][1].re);
    let off = r[0][1].norm();
    let disc = (((a - d) / 2.0).powi(2) + off * off).sqrt();
    [(a + d) / 2.0 + disc, (a + d) / 2.0 - disc]
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|l| -l * l.log2())
        .sum()
}
