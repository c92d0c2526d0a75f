/// Nonnegative per-expert weights kept normalised to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Normalises arbitrary nonnegative weights. Returns `None` if they do not
    /// have a positive finite sum.
    pub fn from_weights(w: Vec<f64>) -> Option<Self> {
        if w.iter().any(|&x| x.is_nan() || x < 0.0) {
            return None;
        }
        let mut v = Self(w);
        let total: f64 = v.0.iter().sum();
        if total > 0.0 && total.is_finite() {
            v.normalize();
            Some(v)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub(crate) fn normalize(&mut self) {
        let total: f64 = self.0.iter().sum();
        if total > 0.0 && total.is_finite() {
            for w in &mut self.0 {
                *w /= total;
            }
        } else {
            let n = self.0.len();
            self.0.iter_mut().for_each(|w| *w = 1.0 / n as f64);
        }
    }
}
