//! Layer primitives shared by the fusion network and the small test networks.
//!
//! Feature maps are stored height × width × channels, row-major. Convolution
//! kernels are `[3][3][C_in][C_out]`; dense weights are `[out][in]`.

use crate::dataset::CommandVector;

use super::lif::{lif_backward, lif_step_into, LifParams, SpikeFn};
use super::ModelError;

/// 3×3 cross-correlation, stride 1, zero padding 1 (output size equals input size).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv3x3 {
    pub h: usize,
    pub w: usize,
    pub cin: usize,
    pub cout: usize,
}

impl Conv3x3 {
    pub fn in_len(&self) -> usize {
        self.h * self.w * self.cin
    }

    pub fn out_len(&self) -> usize {
        self.h * self.w * self.cout
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [3, 3, self.cin, self.cout]
    }

    pub fn fan_in(&self) -> usize {
        9 * self.cin
    }

    fn check(&self, x: &[f64], weight: &[f64], bias: &[f64]) -> Result<(), ModelError> {
        ModelError::expect_len("conv input", self.in_len(), x.len())?;
        ModelError::expect_len("conv kernel", 9 * self.cin * self.cout, weight.len())?;
        ModelError::expect_len("conv bias", self.cout, bias.len())
    }

    /// Output neighbours of input pixel `(iy, ix)`: `(ky, kx, oy, ox)`.
    fn taps(&self, iy: usize, ix: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        (0..3).flat_map(move |ky| {
            (0..3).filter_map(move |kx| {
                let oy = (iy + 1).checked_sub(ky)?;
                let ox = (ix + 1).checked_sub(kx)?;
                (oy < self.h && ox < self.w).then_some((ky, kx, oy, ox))
            })
        })
    }

    /// Writes the pre-activation current into `out`. Zero inputs are skipped, so
    /// the cost scales with input activity.
    pub fn forward(
        &self,
        x: &[f64],
        weight: &[f64],
        bias: &[f64],
        out: &mut [f64],
    ) -> Result<(), ModelError> {
        self.check(x, weight, bias)?;
        ModelError::expect_len("conv output", self.out_len(), out.len())?;
        let (cin, cout) = (self.cin, self.cout);
        for row in out.chunks_exact_mut(cout) {
            row.copy_from_slice(bias);
        }
        for iy in 0..self.h {
            for ix in 0..self.w {
                let xrow = &x[(iy * self.w + ix) * cin..][..cin];
                if xrow.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (ky, kx, oy, ox) in self.taps(iy, ix) {
                    let orow = &mut out[(oy * self.w + ox) * cout..][..cout];
                    for (ci, &v) in xrow.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let wrow = &weight[((ky * 3 + kx) * cin + ci) * cout..][..cout];
                        for (o, &wv) in orow.iter_mut().zip(wrow) {
                            *o += v * wv;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Accumulates kernel and bias gradients; writes the input gradient to `dx`
    /// when requested (`dx` is overwritten).
    pub fn backward(
        &self,
        x: &[f64],
        weight: &[f64],
        dout: &[f64],
        dweight: &mut [f64],
        dbias: &mut [f64],
        dx: Option<&mut [f64]>,
    ) {
        let (cin, cout) = (self.cin, self.cout);
        for drow in dout.chunks_exact(cout) {
            for (b, &d) in dbias.iter_mut().zip(drow) {
                *b += d;
            }
        }
        // Kernel gradient: scatter over non-zero inputs.
        for iy in 0..self.h {
            for ix in 0..self.w {
                let xrow = &x[(iy * self.w + ix) * cin..][..cin];
                if xrow.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (ky, kx, oy, ox) in self.taps(iy, ix) {
                    let drow = &dout[(oy * self.w + ox) * cout..][..cout];
                    for (ci, &v) in xrow.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let gw = &mut dweight[((ky * 3 + kx) * cin + ci) * cout..][..cout];
                        for (g, &d) in gw.iter_mut().zip(drow) {
                            *g += v * d;
                        }
                    }
                }
            }
        }
        let Some(dx) = dx else { return };
        dx.iter_mut().for_each(|v| *v = 0.0);
        // Input gradient: scatter each non-zero output gradient through a
        // channel-transposed kernel so the inner loop runs over C_in.
        let mut wt = vec![0.0; weight.len()];
        for k in 0..9 {
            for ci in 0..cin {
                for co in 0..cout {
                    wt[(k * cout + co) * cin + ci] = weight[(k * cin + ci) * cout + co];
                }
            }
        }
        for oy in 0..self.h {
            for ox in 0..self.w {
                let drow = &dout[(oy * self.w + ox) * cout..][..cout];
                for (co, &d) in drow.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for ky in 0..3 {
                        let Some(iy) = (oy + ky).checked_sub(1).filter(|&v| v < self.h) else {
                            continue;
                        };
                        for kx in 0..3 {
                            let Some(ix) = (ox + kx).checked_sub(1).filter(|&v| v < self.w) else {
                                continue;
                            };
                            let wrow = &wt[((ky * 3 + kx) * cout + co) * cin..][..cin];
                            let xrow = &mut dx[(iy * self.w + ix) * cin..][..cin];
                            for (g, &wv) in xrow.iter_mut().zip(wrow) {
                                *g += d * wv;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Number of real (non-padding) connections leaving input pixel `(iy, ix)` per
    /// input channel.
    pub fn fan_out_at(&self, iy: usize, ix: usize) -> usize {
        self.taps(iy, ix).count() * self.cout
    }

    /// Total real connections, i.e. multiply-accumulates per dense evaluation.
    pub fn connections(&self) -> usize {
        let mut n = 0;
        for iy in 0..self.h {
            for ix in 0..self.w {
                n += self.fan_out_at(iy, ix);
            }
        }
        n * self.cin
    }
}

/// Non-overlapping 2×2 max pooling; a trailing odd row or column is dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaxPool2 {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl MaxPool2 {
    pub fn out_h(&self) -> usize {
        self.h / 2
    }

    pub fn out_w(&self) -> usize {
        self.w / 2
    }

    pub fn in_len(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn out_len(&self) -> usize {
        self.out_h() * self.out_w() * self.c
    }

    /// Writes block maxima to `out` and, for each output, the input index that
    /// won (first in row-major block order on ties).
    pub fn forward(&self, x: &[f64], out: &mut [f64], argmax: &mut [u32]) -> Result<(), ModelError> {
        if self.h < 2 || self.w < 2 {
            return Err(ModelError::InvalidParams(format!(
                "max pool needs at least 2×2 input, got {}×{}",
                self.h, self.w
            )));
        }
        ModelError::expect_len("pool input", self.in_len(), x.len())?;
        ModelError::expect_len("pool output", self.out_len(), out.len())?;
        let (ow, c) = (self.out_w(), self.c);
        for py in 0..self.out_h() {
            for px in 0..ow {
                for ch in 0..c {
                    let mut best_i = ((2 * py) * self.w + 2 * px) * c + ch;
                    let mut best = x[best_i];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let i = ((2 * py + dy) * self.w + 2 * px + dx) * c + ch;
                        if x[i] > best {
                            best = x[i];
                            best_i = i;
                        }
                    }
                    let o = (py * ow + px) * c + ch;
                    out[o] = best;
                    argmax[o] = best_i as u32;
                }
            }
        }
        Ok(())
    }

    /// Routes each output gradient to its winning input; `dx` is overwritten.
    pub fn backward(&self, dout: &[f64], argmax: &[u32], dx: &mut [f64]) {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for (&d, &i) in dout.iter().zip(argmax) {
            dx[i as usize] += d;
        }
    }
}

/// Fully connected layer, `J = W·x + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dense {
    pub nin: usize,
    pub nout: usize,
}

impl Dense {
    pub fn weight_shape(&self) -> [usize; 2] {
        [self.nout, self.nin]
    }

    pub fn forward(
        &self,
        x: &[f64],
        weight: &[f64],
        bias: &[f64],
        out: &mut [f64],
    ) -> Result<(), ModelError> {
        ModelError::expect_len("dense input", self.nin, x.len())?;
        ModelError::expect_len("dense weight", self.nin * self.nout, weight.len())?;
        ModelError::expect_len("dense bias", self.nout, bias.len())?;
        ModelError::expect_len("dense output", self.nout, out.len())?;
        let nz: Vec<usize> = (0..self.nin).filter(|&i| x[i] != 0.0).collect();
        for (o, (dst, &b)) in out.iter_mut().zip(bias).enumerate() {
            let wrow = &weight[o * self.nin..][..self.nin];
            *dst = b + nz.iter().map(|&i| wrow[i] * x[i]).sum::<f64>();
        }
        Ok(())
    }

    /// Accumulates weight/bias gradients; overwrites `dx` when given.
    pub fn backward(
        &self,
        x: &[f64],
        weight: &[f64],
        dout: &[f64],
        dweight: &mut [f64],
        dbias: &mut [f64],
        dx: Option<&mut [f64]>,
    ) {
        let nz: Vec<usize> = (0..self.nin).filter(|&i| x[i] != 0.0).collect();
        for (o, &d) in dout.iter().enumerate() {
            dbias[o] += d;
            if d == 0.0 {
                continue;
            }
            let grow = &mut dweight[o * self.nin..][..self.nin];
            for &i in &nz {
                grow[i] += d * x[i];
            }
        }
        if let Some(dx) = dx {
            dx.iter_mut().for_each(|v| *v = 0.0);
            for (o, &d) in dout.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let wrow = &weight[o * self.nin..][..self.nin];
                for (g, &wv) in dx.iter_mut().zip(wrow) {
                    *g += d * wv;
                }
            }
        }
    }
}

/// Per-neuron nonlinearity following a weighted layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Lif { params: LifParams, spike_fn: SpikeFn },
    Relu,
    Tanh,
}

impl Activation {
    pub fn is_spiking(&self) -> bool {
        matches!(self, Self::Lif { .. })
    }

    /// One timestep. `state` is only touched by LIF; `pre` receives the pre-reset
    /// potential (LIF) or the input current (stateless activations).
    pub fn step(&self, state: &mut [f64], j: &[f64], out: &mut [f64], pre: Option<&mut [f64]>) {
        match self {
            Self::Lif { params, spike_fn } => lif_step_into(state, params, *spike_fn, j, out, pre),
            Self::Relu => {
                for (o, &v) in out.iter_mut().zip(j) {
                    *o = v.max(0.0);
                }
                if let Some(p) = pre {
                    p.copy_from_slice(j);
                }
            }
            Self::Tanh => {
                for (o, &v) in out.iter_mut().zip(j) {
                    *o = v.tanh();
                }
                if let Some(p) = pre {
                    p.copy_from_slice(j);
                }
            }
        }
    }

    /// Gradient with respect to the input current over a whole sequence.
    pub fn backward(
        &self,
        pre: &[Vec<f64>],
        out: &[Vec<f64>],
        d_out: &[Vec<f64>],
        d_in: &mut [Vec<f64>],
    ) {
        match self {
            Self::Lif { params, .. } => lif_backward(params, pre, d_out, d_in),
            Self::Relu => {
                for ((p, dy), dj) in pre.iter().zip(d_out).zip(d_in.iter_mut()) {
                    for ((&v, &g), d) in p.iter().zip(dy).zip(dj.iter_mut()) {
                        *d = if v > 0.0 { g } else { 0.0 };
                    }
                }
            }
            Self::Tanh => {
                for ((y, dy), dj) in out.iter().zip(d_out).zip(d_in.iter_mut()) {
                    for ((&v, &g), d) in y.iter().zip(dy).zip(dj.iter_mut()) {
                        *d = g * (1.0 - v * v);
                    }
                }
            }
        }
    }
}

/// Maps an output spike pair from {0,1} to motor directions in {−1,1}.
pub fn remap_output(s: [f64; 2]) -> Result<CommandVector, ModelError> {
    let dir = |v: f64| -> Result<i64, ModelError> {
        if v == 0.0 || v == 1.0 {
            Ok(2 * v as i64 - 1)
        } else {
            Err(ModelError::InvalidParams(format!("output {v} is not a spike")))
        }
    };
    Ok(CommandVector::new(dir(s[0])?, dir(s[1])?).expect("remapped values are ±1"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel() {
        let conv = Conv3x3 { h: 4, w: 5, cin: 1, cout: 1 };
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        let x: Vec<f64> = (0..20).map(|i| (i % 3) as f64).collect();
        let mut out = vec![0.0; 20];
        conv.forward(&x, &k, &[0.0], &mut out).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn zero_input_gives_bias() {
        let conv = Conv3x3 { h: 3, w: 3, cin: 2, cout: 3 };
        let k = vec![0.7; 9 * 6];
        let mut out = vec![0.0; 27];
        conv.forward(&[0.0; 18], &k, &[1.0, -2.0, 0.5], &mut out).unwrap();
        for row in out.chunks(3) {
            assert_eq!(row, &[1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn ones_kernel_counts_neighbours() {
        let conv = Conv3x3 { h: 3, w: 3, cin: 1, cout: 1 };
        let mut out = vec![0.0; 9];
        conv.forward(&[1.0; 9], &[1.0; 9], &[0.0], &mut out).unwrap();
        assert_eq!(out, vec![4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
        assert_eq!(conv.connections(), 49);
    }

    #[test]
    fn conv_shape_errors() {
        let conv = Conv3x3 { h: 3, w: 3, cin: 1, cout: 2 };
        let mut out = vec![0.0; 18];
        assert!(conv.forward(&[0.0; 8], &[0.0; 18], &[0.0; 2], &mut out).is_err());
        assert!(conv.forward(&[0.0; 9], &[0.0; 9], &[0.0; 2], &mut out).is_err());
    }

    #[test]
    fn pool_semantics() {
        let pool = MaxPool2 { h: 5, w: 5, c: 1 };
        let mut x = vec![0.0; 25];
        x[6] = 1.0; // (1,1) → block (0,0)
        x[24] = 1.0; // (4,4) is in the dropped row/col
        let mut out = vec![0.0; 4];
        let mut arg = vec![0; 4];
        pool.forward(&x, &mut out, &mut arg).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(arg[0], 6);
        assert_eq!(arg[1], 2);
        let pool = MaxPool2 { h: 59, w: 59, c: 1 };
        assert_eq!((pool.out_h(), pool.out_w()), (29, 29));
        assert!(MaxPool2 { h: 1, w: 4, c: 1 }.forward(&[0.0; 4], &mut [], &mut []).is_err());
    }

    #[test]
    fn dense_cases() {
        let d = Dense { nin: 2, nout: 2 };
        let mut out = vec![0.0; 2];
        d.forward(&[1.0, 1.0], &[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0], &mut out).unwrap();
        assert_eq!(out, vec![3.0, 7.0]);
        d.forward(&[0.0, 0.0], &[1.0, 2.0, 3.0, 4.0], &[0.5, -1.0], &mut out).unwrap();
        assert_eq!(out, vec![0.5, -1.0]);
        d.forward(&[0.25, -3.0], &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], &mut out).unwrap();
        assert_eq!(out, vec![0.25, -3.0]);
        assert!(d.forward(&[1.0], &[0.0; 4], &[0.0; 2], &mut out).is_err());
    }

    #[test]
    fn remap() {
        assert_eq!(remap_output([0.0, 0.0]).unwrap(), CommandVector::REVERSE);
        assert_eq!(remap_output([1.0, 1.0]).unwrap(), CommandVector::FORWARD);
        assert_eq!(remap_output([1.0, 0.0]).unwrap(), CommandVector::new(1, -1).unwrap());
        assert!(remap_output([0.5, 0.0]).is_err());
    }

    // Central-difference checks of the linear layers' backward passes against
    // the loss L = Σ c_i · out_i with fixed random c.
    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn conv_backward_matches_finite_differences() {
        let conv = Conv3x3 { h: 4, w: 3, cin: 2, cout: 3 };
        let mut s = 7;
        let x: Vec<f64> = (0..conv.in_len()).map(|i| if i % 3 == 0 { 0.0 } else { lcg(&mut s) }).collect();
        let w: Vec<f64> = (0..54).map(|_| lcg(&mut s)).collect();
        let b: Vec<f64> = (0..3).map(|_| lcg(&mut s)).collect();
        let c: Vec<f64> = (0..conv.out_len()).map(|_| lcg(&mut s)).collect();
        let loss = |x: &[f64], w: &[f64]| {
            let mut out = vec![0.0; conv.out_len()];
            conv.forward(x, w, &b, &mut out).unwrap();
            out.iter().zip(&c).map(|(o, c)| o * c).sum::<f64>()
        };
        let (mut dw, mut db, mut dx) = (vec![0.0; 54], vec![0.0; 3], vec![0.0; conv.in_len()]);
        conv.backward(&x, &w, &c, &mut dw, &mut db, Some(&mut dx));
        let h = 1e-6;
        for i in 0..w.len() {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[i] += h;
            wm[i] -= h;
            let fd = (loss(&x, &wp) - loss(&x, &wm)) / (2.0 * h);
            assert!((fd - dw[i]).abs() < 1e-8, "w[{i}] {fd} vs {}", dw[i]);
        }
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (loss(&xp, &w) - loss(&xm, &w)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-8, "x[{i}]");
        }
        for (co, g) in db.iter().enumerate() {
            let expect: f64 = c.iter().skip(co).step_by(3).sum();
            assert!((g - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_backward_matches_finite_differences() {
        let d = Dense { nin: 4, nout: 3 };
        let mut s = 3;
        let x = vec![0.5, 0.0, -1.0, 2.0];
        let w: Vec<f64> = (0..12).map(|_| lcg(&mut s)).collect();
        let c: Vec<f64> = (0..3).map(|_| lcg(&mut s)).collect();
        let loss = |x: &[f64], w: &[f64]| {
            let mut out = vec![0.0; 3];
            d.forward(x, w, &[0.0; 3], &mut out).unwrap();
            out.iter().zip(&c).map(|(o, c)| o * c).sum::<f64>()
        };
        let (mut dw, mut db, mut dx) = (vec![0.0; 12], vec![0.0; 3], vec![0.0; 4]);
        d.backward(&x, &w, &c, &mut dw, &mut db, Some(&mut dx));
        let h = 1e-6;
        for i in 0..12 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[i] += h;
            wm[i] -= h;
            assert!(((loss(&x, &wp) - loss(&x, &wm)) / (2.0 * h) - dw[i]).abs() < 1e-8);
        }
        for i in 0..4 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            assert!(((loss(&xp, &w) - loss(&xm, &w)) / (2.0 * h) - dx[i]).abs() < 1e-8);
        }
        assert_eq!(db, c);
    }
}
