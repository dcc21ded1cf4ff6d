use std::cell::Cell;

/// A locally Lipschitz objective together with a subgradient oracle.
///
/// `value` must be deterministic. `subgradient` returns *some* element of the
/// Clarke subdifferential at `x`; at nondifferentiable points any element is
/// acceptable, but implementations in this crate break ties deterministically.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).subgradient(x)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).subgradient(x)
    }
}

/// Wraps an objective and counts value (`#Fun`) and subgradient (`#Sub`)
/// evaluations. Counters are per wrapper, so each run owns its own.
#[derive(Debug)]
pub struct CountingOracle<O> {
    inner: O,
    fun: Cell<u64>,
    sub: Cell<u64>,
}

impl<O: Objective> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            fun: Cell::new(0),
            sub: Cell::new(0),
        }
    }

    pub fn fun_evals(&self) -> u64 {
        self.fun.get()
    }

    pub fn sub_evals(&self) -> u64 {
        self.sub.get()
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for CountingOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.fun.set(self.fun.get() + 1);
        self.inner.value(x)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.sub.set(self.sub.get() + 1);
        self.inner.subgradient(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Abs;
    impl Objective for Abs {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].abs()
        }
        fn subgradient(&self, x: &[f64]) -> Vec<f64> {
            vec![crate::vecops::sign(x[0])]
        }
    }

    #[test]
    fn counts_each_call() {
        let o = CountingOracle::new(Abs);
        for _ in 0..3 {
            o.value(&[1.0]);
        }
        o.subgradient(&[0.0]);
        assert_eq!(o.fun_evals(), 3);
        assert_eq!(o.sub_evals(), 1);
    }

    #[test]
    fn value_is_repeatable() {
        let o = Abs;
        assert_eq!(o.value(&[-2.5]), o.value(&[-2.5]));
    }
}
