//! Dense LU factorisation with partial pivoting.

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            lu: vec![T::zero(); n * n],
            piv: (0..n).collect(),
        }
    }

    /// Factors the row-major `n x n` matrix `a`. On a (numerically) zero
    /// pivot returns the index of the offending column.
    pub fn factor(&mut self, a: &[T]) -> Result<(), usize> {
        let n = self.n;
        debug_assert_eq!(a.len(), n * n);
        self.lu.copy_from_slice(a);
        let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tiny = (T::epsilon() * scale * T::lit(1e-6)).max(T::min_positive_value());
        for (i, p) in self.piv.iter_mut().enumerate() {
            *p = i;
        }
        let lu = &mut self.lu;
        for k in 0..n {
            let mut best = k;
            let mut best_abs = lu[k * n + k].abs();
            for r in k + 1..n {
                let v = lu[r * n + k].abs();
                if v > best_abs {
                    best = r;
                    best_abs = v;
                }
            }
            if !(best_abs > tiny) {
                return Err(k);
            }
            if best != k {
                for c in 0..n {
                    lu.swap(k * n + c, best * n + c);
                }
                self.piv.swap(k, best);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                if f == T::zero() {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] -= f * u;
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place using the last successful factorisation.
    pub fn solve(&self, b: &[T], x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] -= row
                .iter()
                .zip(&x[..i])
                .fold(T::zero(), |s, (&l, &xj)| s + l * xj);
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = x[i]
                - row
                    .iter()
                    .zip(&x[i + 1..])
                    .fold(T::zero(), |s, (&u, &xj)| s + u * xj);
            x[i] = s / self.lu[i * n + i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // needs pivoting: zero in the leading position
        let a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x_true = [1.0, -2.0, 3.0];
        let b: Vec<f64> = (0..3)
            .map(|r| (0..3).map(|c| a[r * 3 + c] * x_true[c]).sum())
            .collect();
        let mut lu = Lu::new(3);
        lu.factor(&a).unwrap();
        let mut x = [0.0; 3];
        lu.solve(&b, &mut x);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_reports_column() {
        let a = [1.0, 2.0, 2.0, 4.0];
        let mut lu = Lu::<f64>::new(2);
        assert_eq!(lu.factor(&a), Err(1));
    }

    #[test]
    fn works_in_f32() {
        let a = [4.0f32, 1.0, 1.0, 3.0];
        let mut lu = Lu::new(2);
        lu.factor(&a).unwrap();
        let mut x = [0.0f32; 2];
        lu.solve(&[1.0, 2.0], &mut x);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-6);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-6);
    }
}
