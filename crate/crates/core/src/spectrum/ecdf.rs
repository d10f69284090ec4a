use crate::scalar::{from_usize, Real};

/// Right-continuous step function `F(x) = #{λ_i <= x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<T> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalCdf<T> {
    /// Builds the ECDF of an arbitrary (unsorted) sample.
    pub fn from_sample(mut sample: Vec<T>) -> Self {
        assert!(!sample.is_empty(), "ECDF of an empty sample");
        sample.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
        EmpiricalCdf { sorted: sample }
    }

    /// Pools several samples into one ECDF (each point weighs 1/total).
    pub fn pooled<'a, I>(samples: I) -> Self
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        Self::from_sample(samples.into_iter().flat_map(|s| s.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Sample points in ascending order (with repetitions).
    pub fn sample(&self) -> &[T] {
        &self.sorted
    }

    pub fn eval(&self, x: T) -> T {
        let count = self.sorted.partition_point(|&v| v <= x);
        from_usize::<T>(count) / from_usize(self.sorted.len())
    }

    /// Distinct jump locations with the value of `F` just after each jump.
    pub fn steps(&self) -> Vec<(T, T)> {
        let n: T = from_usize(self.sorted.len());
        let mut out: Vec<(T, T)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = from_usize::<T>(i + 1) / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    /// Like [`steps`](Self::steps) but jumps closer than `tol` (relative to
    /// `max(1, |x|)`) are merged at their mean, so eigenvalues split by
    /// rounding print as one step.
    pub fn steps_merged(&self, tol: T) -> Vec<(T, T)> {
        let n: T = from_usize(self.sorted.len());
        let mut out: Vec<(T, T, T, usize)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = from_usize::<T>(i + 1) / n;
            match out.last_mut() {
                Some(last) if x - last.0 <= tol * T::one().max(x.abs()) => {
                    last.1 = f;
                    last.2 = last.2 + x;
                    last.3 += 1;
                }
                _ => out.push((x, f, x, 1)),
            }
        }
        out.into_iter().map(|(_, f, sum, k)| (sum / from_usize(k), f)).collect()
    }

    pub fn lower(&self) -> T {
        self.sorted[0]
    }

    pub fn upper(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }

    /// Same distribution shifted by `delta`.
    pub fn shifted(&self, delta: T) -> Self {
        EmpiricalCdf { sorted: self.sorted.iter().map(|&v| v + delta).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let p2 = EmpiricalCdf::from_sample(vec![0.5f64.sqrt(), -(0.5f64.sqrt())]);
        assert_eq!(p2.eval(0.0), 0.5);
        let k3 = EmpiricalCdf::from_sample(vec![2.0f64, -1.0, -1.0]);
        assert!((k3.eval(-1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(k3.eval(2.0), 1.0);
        assert_eq!(k3.eval(-1.0001), 0.0);
        assert_eq!(k3.steps(), vec![(-1.0, 2.0 / 3.0), (2.0, 1.0)]);
        let split = EmpiricalCdf::from_sample(vec![2.0f64, -1.0 - 4e-16, -1.0 + 2e-16]);
        assert_eq!(split.steps().len(), 3);
        let merged = split.steps_merged(1e-9);
        assert_eq!(merged.len(), 2);
        assert!((merged[0].0 + 1.0).abs() < 1e-15 && merged[0].1 == 2.0 / 3.0);
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_monotone(mut xs in prop::collection::vec(-5.0f64..5.0, 1..40), probe in -6.0f64..6.0) {
            let a = EmpiricalCdf::from_sample(xs.clone());
            xs.reverse();
            let b = EmpiricalCdf::from_sample(xs);
            prop_assert_eq!(a.eval(probe), b.eval(probe));
            prop_assert_eq!(a.eval(a.upper()), 1.0);
            prop_assert!(a.eval(probe) <= a.eval(probe + 0.1));
            prop_assert_eq!(a.eval(a.lower() - 1.0), 0.0);
        }
    }
}
