use nalgebra::DMatrix;

use crate::C64;

/// A linear map `C^cols -> C^rows` with its adjoint.
pub trait Dictionary {
    fn rows(&self) -> usize;

    fn cols(&self) -> usize;

    /// `T x`
    fn apply(&self, x: &[C64], out: &mut [C64]);

    /// `T^H r`
    fn apply_adjoint(&self, r: &[C64], out: &mut [C64]);

    fn to_dense(&self) -> DMatrix<C64>;

    fn all_finite(&self) -> bool {
        self.to_dense().iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl Dictionary for DMatrix<C64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (c, &xc) in x.iter().enumerate() {
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, t) in out.iter_mut().zip(self.column(c).iter()) {
                *o += t * xc;
            }
        }
    }

    fn apply_adjoint(&self, r: &[C64], out: &mut [C64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.column(c).iter().zip(r).map(|(t, ri)| t.conj() * ri).sum();
        }
    }

    fn to_dense(&self) -> DMatrix<C64> {
        self.clone()
    }
}
