//! Order-2 univariate Taylor jets: (value, first, second derivative) along
//! one input direction. Propagating a jet through the network gives exact
//! pure second derivatives without finite differencing.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet2 {
    /// Seed for the coordinate being differentiated: d/dx x = 1.
    pub fn seeded(v: f64) -> Self {
        Jet2 { v, d: 1.0, dd: 0.0 }
    }

    pub fn constant(v: f64) -> Self {
        Jet2 { v, d: 0.0, dd: 0.0 }
    }

    /// tanh with first and second derivative propagation:
    /// (tanh u)' = s u', (tanh u)'' = σ'' u'² + s u'' with s = 1 − t²,
    /// σ'' = −2 t s.
    pub fn tanh(self) -> Self {
        let t = self.v.tanh();
        let s = 1.0 - t * t;
        Jet2 {
            v: t,
            d: s * self.d,
            dd: -2.0 * t * s * self.d * self.d + s * self.dd,
        }
    }
}
