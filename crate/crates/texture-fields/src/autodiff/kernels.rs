//! Raw matrix kernels shared by forward and backward passes.
//!
//! Output rows are independent, so row-level parallelism cannot change
//! results: every element is produced by exactly one task with a fixed
//! accumulation order.

use super::scalar::Scalar;
use rayon::prelude::*;

// Below this many multiply-adds the rayon dispatch overhead dominates.
const PAR_THRESHOLD: usize = 1 << 15;

/// C[m,n] = A[m,k] * B[k,n]
pub fn matmul_nn<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let row = |i: usize, out: &mut [T]| {
        out.fill(T::ZERO);
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &aip) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    };
    if m * k * n >= PAR_THRESHOLD && m > 1 {
        c.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out)| row(i, out));
    } else {
        for (i, out) in c.chunks_mut(n).enumerate() {
            row(i, out);
        }
    }
}

/// C[m,k] = A[m,n] * B[k,n]^T
pub fn matmul_nt<T: Scalar>(a: &[T], b: &[T], m: usize, n: usize, k: usize, c: &mut [T]) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * k);
    let row = |i: usize, out: &mut [T]| {
        let a_row = &a[i * n..(i + 1) * n];
        for (j, o) in out.iter_mut().enumerate() {
            let b_row = &b[j * n..(j + 1) * n];
            let mut acc = T::ZERO;
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            *o = acc;
        }
    };
    if m * n * k >= PAR_THRESHOLD && m > 1 {
        c.par_chunks_mut(k)
            .enumerate()
            .for_each(|(i, out)| row(i, out));
    } else {
        for (i, out) in c.chunks_mut(k).enumerate() {
            row(i, out);
        }
    }
}

/// C[k,n] = A[m,k]^T * B[m,n]
pub fn matmul_tn<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    let row = |i: usize, out: &mut [T]| {
        out.fill(T::ZERO);
        for p in 0..m {
            let api = a[p * k + i];
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out.iter_mut().zip(b_row) {
                *o += api * bv;
            }
        }
    };
    if m * k * n >= PAR_THRESHOLD && k > 1 {
        c.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out)| row(i, out));
    } else {
        for (i, out) in c.chunks_mut(n).enumerate() {
            row(i, out);
        }
    }
}
