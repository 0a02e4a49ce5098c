//! One LSTM time step over a batch.
//!
//! Gate blocks are stacked row-wise in the order input, forget, output,
//! candidate: `wx` is `[4U × in]`, `wh` is `[4U × U]`, `b` is `[1 × 4U]`.

use ndarray::{s, Array2, ArrayView2, Zip};

use super::activation::{sigmoid, tanh};
use crate::{Error, Result};

/// Borrowed weights of one layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerWeights<'a> {
    pub wx: ArrayView2<'a, f64>,
    pub wh: ArrayView2<'a, f64>,
    pub b: ArrayView2<'a, f64>,
}

impl LayerWeights<'_> {
    pub fn units(&self) -> usize {
        self.wh.ncols()
    }

    fn check(&self, x: &ArrayView2<f64>, h: &ArrayView2<f64>) -> Result<()> {
        let u = self.units();
        if self.wx.nrows() != 4 * u || self.wh.nrows() != 4 * u || self.b.dim() != (1, 4 * u) {
            return Err(Error::shape("lstm layer weights", 4 * u, self.wx.nrows()));
        }
        if x.ncols() != self.wx.ncols() {
            return Err(Error::shape("lstm input", self.wx.ncols(), x.ncols()));
        }
        if h.ncols() != u || h.nrows() != x.nrows() {
            return Err(Error::shape("lstm state", u, h.ncols()));
        }
        Ok(())
    }
}

/// Hidden and cell state, one row per sequence in the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Array2<f64>,
    pub c: Array2<f64>,
}

impl LstmState {
    pub fn zeros(batch: usize, units: usize) -> Self {
        LstmState {
            h: Array2::zeros((batch, units)),
            c: Array2::zeros((batch, units)),
        }
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GateCache {
    pub input: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub i: Array2<f64>,
    pub f: Array2<f64>,
    pub o: Array2<f64>,
    pub g: Array2<f64>,
    pub tanh_c: Array2<f64>,
}

pub fn cell_forward(
    x: ArrayView2<f64>,
    prev: &LstmState,
    w: LayerWeights<'_>,
) -> Result<(LstmState, GateCache)> {
    w.check(&x, &prev.h.view())?;
    let u = w.units();
    let z = x.dot(&w.wx.t()) + prev.h.dot(&w.wh.t()) + w.b;
    let i = z.slice(s![.., 0..u]).mapv(sigmoid);
    let f = z.slice(s![.., u..2 * u]).mapv(sigmoid);
    let o = z.slice(s![.., 2 * u..3 * u]).mapv(sigmoid);
    let g = z.slice(s![.., 3 * u..4 * u]).mapv(tanh);
    let c = &f * &prev.c + &i * &g;
    let tanh_c = c.mapv(tanh);
    let h = &o * &tanh_c;
    let cache = GateCache {
        input: x.to_owned(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        i,
        f,
        o,
        g,
        tanh_c,
    };
    Ok((LstmState { h, c }, cache))
}

/// Gradients of one step.
pub struct StepGrads {
    /// Gradient w.r.t. the stacked pre-activations `[B × 4U]`.
    pub dz: Array2<f64>,
    pub dh_prev: Array2<f64>,
    pub dc_prev: Array2<f64>,
}

/// Backward through one step given the gradient flowing into `h_t` and
/// `c_t`.
pub fn cell_backward(
    cache: &GateCache,
    w: LayerWeights<'_>,
    dh: &Array2<f64>,
    dc_next: &Array2<f64>,
) -> StepGrads {
    let u = w.units();
    let batch = dh.nrows();
    let mut dz = Array2::zeros((batch, 4 * u));
    let mut dc_prev = Array2::zeros((batch, u));
    Zip::indexed(dh)
        .and(dc_next)
        .for_each(|(r, k), &dh, &dcn| {
            let (i, f, o, g) = (
                cache.i[[r, k]],
                cache.f[[r, k]],
                cache.o[[r, k]],
                cache.g[[r, k]],
            );
            let tc = cache.tanh_c[[r, k]];
            let dc = dcn + dh * o * (1.0 - tc * tc);
            dz[[r, k]] = dc * g * i * (1.0 - i);
            dz[[r, u + k]] = dc * cache.c_prev[[r, k]] * f * (1.0 - f);
            dz[[r, 2 * u + k]] = dh * tc * o * (1.0 - o);
            dz[[r, 3 * u + k]] = dc * i * (1.0 - g * g);
            dc_prev[[r, k]] = dc * f;
        });
    let dh_prev = dz.dot(&w.wh);
    StepGrads { dz, dh_prev, dc_prev }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn zero_weights(input: usize, units: usize) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        (
            Array2::zeros((4 * units, input)),
            Array2::zeros((4 * units, units)),
            Array2::zeros((1, 4 * units)),
        )
    }

    #[test]
    fn zero_weights_from_zero_state() {
        let (wx, wh, b) = zero_weights(3, 4);
        let w = LayerWeights {
            wx: wx.view(),
            wh: wh.view(),
            b: b.view(),
        };
        let x = Array2::from_elem((2, 3), 0.7);
        let (s, cache) = cell_forward(x.view(), &LstmState::zeros(2, 4), w).unwrap();
        assert!(cache.i.iter().chain(&cache.f).chain(&cache.o).all(|v| *v == 0.5));
        assert!(cache.g.iter().all(|v| *v == 0.0));
        assert!(s.c.iter().chain(s.h.iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn zero_weights_halve_the_cell() {
        let (wx, wh, b) = zero_weights(2, 3);
        let w = LayerWeights {
            wx: wx.view(),
            wh: wh.view(),
            b: b.view(),
        };
        let prev = LstmState {
            h: Array2::zeros((1, 3)),
            c: Array2::ones((1, 3)),
        };
        let (s, _) = cell_forward(Array2::zeros((1, 2)).view(), &prev, w).unwrap();
        assert!(s.c.iter().all(|v| *v == 0.5));
        assert!(s.h.iter().all(|v| (*v - 0.5 * 0.5f64.tanh()).abs() < 1e-15));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let (wx, wh, b) = zero_weights(2, 3);
        let w = LayerWeights {
            wx: wx.view(),
            wh: wh.view(),
            b: b.view(),
        };
        assert!(cell_forward(Array2::zeros((1, 5)).view(), &LstmState::zeros(1, 3), w).is_err());
    }
}
