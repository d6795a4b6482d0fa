use std::ops::Range;

use crate::error::{dim_err, Result};
use crate::float::Float;
use crate::graph::{BackwardCtx, Function, Graph, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvGeometry {
    pub fn same3x3() -> Self {
        Self {
            kernel: 3,
            stride: 1,
            padding: 1,
        }
    }

    pub fn pointwise() -> Self {
        Self {
            kernel: 1,
            stride: 1,
            padding: 0,
        }
    }

    pub fn output_size(&self, input: usize) -> Option<usize> {
        let padded = input + 2 * self.padding;
        if self.stride == 0 || padded < self.kernel {
            return None;
        }
        Some((padded - self.kernel) / self.stride + 1)
    }

    fn is_identity_layout(&self) -> bool {
        self.kernel == 1 && self.stride == 1 && self.padding == 0
    }
}

/// Unfold output rows `rows` of one `[C,H,W]` sample into a
/// `[C*k*k, rows.len()*Wo]` column matrix (zero padding).
fn im2col<T: Float>(
    x: &[T],
    (c, h, w): (usize, usize, usize),
    geo: ConvGeometry,
    wo: usize,
    rows: Range<usize>,
    cols: &mut [T],
) {
    let k = geo.kernel;
    let pad = geo.padding as isize;
    let s = geo.stride;
    let tile = rows.len() * wo;
    for ci in 0..c {
        let xc = &x[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let dst = &mut cols[row * tile..(row + 1) * tile];
                let off = kj as isize - pad;
                // valid ox for stride 1: ix = ox + off in [0, w)
                let lo = (-off).clamp(0, wo as isize) as usize;
                let hi = (w as isize - off).clamp(0, wo as isize) as usize;
                for (r, oy) in rows.clone().enumerate() {
                    let iy = (oy * s) as isize + ki as isize - pad;
                    let drow = &mut dst[r * wo..(r + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        drow.fill(T::zero());
                        continue;
                    }
                    let src = &xc[iy as usize * w..(iy as usize + 1) * w];
                    if s == 1 {
                        drow[..lo].fill(T::zero());
                        if hi > lo {
                            let a = (lo as isize + off) as usize;
                            drow[lo..hi].copy_from_slice(&src[a..a + (hi - lo)]);
                        }
                        drow[hi.max(lo)..].fill(T::zero());
                    } else {
                        for (ox, d) in drow.iter_mut().enumerate() {
                            let ix = (ox * s) as isize + off;
                            *d = if ix < 0 || ix >= w as isize {
                                T::zero()
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into a `[C,H,W]` buffer.
fn col2im<T: Float>(
    cols: &[T],
    (c, h, w): (usize, usize, usize),
    geo: ConvGeometry,
    wo: usize,
    rows: Range<usize>,
    dx: &mut [T],
) {
    let k = geo.kernel;
    let pad = geo.padding as isize;
    let s = geo.stride;
    let tile = rows.len() * wo;
    for ci in 0..c {
        let dxc = &mut dx[ci * h * w..(ci + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let row = (ci * k + ki) * k + kj;
                let src = &cols[row * tile..(row + 1) * tile];
                let off = kj as isize - pad;
                let lo = (-off).clamp(0, wo as isize) as usize;
                let hi = (w as isize - off).clamp(0, wo as isize) as usize;
                for (r, oy) in rows.clone().enumerate() {
                    let iy = (oy * s) as isize + ki as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let drow = &mut dxc[iy as usize * w..(iy as usize + 1) * w];
                    let srow = &src[r * wo..(r + 1) * wo];
                    if s == 1 {
                        if hi > lo {
                            let a = (lo as isize + off) as usize;
                            for (d, &v) in drow[a..a + (hi - lo)].iter_mut().zip(&srow[lo..hi]) {
                                *d += v;
                            }
                        }
                        continue;
                    }
                    for (ox, &v) in srow.iter().enumerate() {
                        let ix = (ox * s) as isize + off;
                        if ix >= 0 && ix < w as isize {
                            drow[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

/// Output rows per im2col tile, sized so one tile stays cache resident.
fn tile_rows(kk: usize, ho: usize, wo: usize) -> usize {
    const TILE_ELEMS: usize = 1 << 18;
    (TILE_ELEMS / (kk * wo).max(1)).clamp(1, ho.max(1))
}

fn row_tiles(ho: usize, step: usize) -> impl Iterator<Item = Range<usize>> {
    (0..ho).step_by(step).map(move |r| r..(r + step).min(ho))
}

struct ConvShapes {
    n: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    ho: usize,
    wo: usize,
}

fn conv_shapes<T: Float>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    geo: ConvGeometry,
) -> Result<ConvShapes> {
    let (n, cin, h, w) = x.dims4()?;
    let ws = weight.shape();
    if ws.len() != 4 || ws[1] != cin || ws[2] != geo.kernel || ws[3] != geo.kernel {
        return Err(dim_err(
            "conv2d",
            format!(
                "input {:?} incompatible with weight {:?} (kernel {})",
                x.shape(),
                ws,
                geo.kernel
            ),
        ));
    }
    if let Some(b) = bias {
        if b.shape() != [ws[0]] {
            return Err(dim_err(
                "conv2d",
                format!("bias {:?} does not match {} output channels", b.shape(), ws[0]),
            ));
        }
    }
    let (Some(ho), Some(wo)) = (geo.output_size(h), geo.output_size(w)) else {
        return Err(dim_err(
            "conv2d",
            format!("input {:?} too small for {geo:?}", x.shape()),
        ));
    };
    Ok(ConvShapes {
        n,
        cin,
        h,
        w,
        cout: ws[0],
        ho,
        wo,
    })
}

/// Forward 2-D convolution, zero padding, `x: [N,Cin,H,W]`, `weight: [Cout,Cin,k,k]`.
pub fn conv2d_forward<T: Float>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    geo: ConvGeometry,
) -> Result<Tensor<T>> {
    let s = conv_shapes(x, weight, bias, geo)?;
    let kk = s.cin * geo.kernel * geo.kernel;
    let plane = s.ho * s.wo;
    let in_sz = s.cin * s.h * s.w;
    let out_sz = s.cout * plane;
    let mut out = Tensor::zeros(&[s.n, s.cout, s.ho, s.wo]);
    let beta = if bias.is_some() { T::one() } else { T::zero() };
    let step = tile_rows(kk, s.ho, s.wo);
    let mut cols = Vec::new();
    for b in 0..s.n {
        let xb = &x.data()[b * in_sz..(b + 1) * in_sz];
        let ob = &mut out.data_mut()[b * out_sz..(b + 1) * out_sz];
        if let Some(bias) = bias {
            for (co, row) in ob.chunks_mut(plane).enumerate() {
                row.fill(bias.data()[co]);
            }
        }
        if geo.is_identity_layout() {
            // out[P, cout] = x^T[P, cin] * W^T[cin, cout], written channel-major
            T::gemm(
                plane,
                kk,
                s.cout,
                T::one(),
                xb,
                1,
                plane as isize,
                weight.data(),
                1,
                kk as isize,
                beta,
                ob,
                1,
                plane as isize,
            );
            continue;
        }
        for rows in row_tiles(s.ho, step) {
            let tile = rows.len() * s.wo;
            cols.resize(kk * tile, T::zero());
            im2col(xb, (s.cin, s.h, s.w), geo, s.wo, rows.clone(), &mut cols);
            T::gemm(
                tile,
                kk,
                s.cout,
                T::one(),
                &cols,
                1,
                tile as isize,
                weight.data(),
                1,
                kk as isize,
                beta,
                &mut ob[rows.start * s.wo..],
                1,
                plane as isize,
            );
        }
    }
    Ok(out)
}

struct Conv2dFn {
    geo: ConvGeometry,
    has_bias: bool,
}

impl<T: Float> Function<T> for Conv2dFn {
    fn name(&self) -> &'static str {
        "conv2d"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let x = ctx.inputs[0];
        let weight = ctx.inputs[1];
        let geo = self.geo;
        let s = conv_shapes(x, weight, None, geo)?;
        let kk = s.cin * geo.kernel * geo.kernel;
        let plane = s.ho * s.wo;
        let in_sz = s.cin * s.h * s.w;
        let out_sz = s.cout * plane;
        let dy = ctx.grad.data();

        let need_x = ctx.needs_grad[0];
        let need_w = ctx.needs_grad[1];
        let need_b = self.has_bias && ctx.needs_grad[2];

        let mut dx = need_x.then(|| Tensor::zeros(x.shape()));
        let mut dw = need_w.then(|| Tensor::zeros(weight.shape()));
        let mut db = need_b.then(|| Tensor::zeros(&[s.cout]));
        let identity = geo.is_identity_layout();
        let step = if identity { s.ho.max(1) } else { tile_rows(kk, s.ho, s.wo) };
        let mut cols = Vec::new();
        let mut dcols = Vec::new();

        for b in 0..s.n {
            let dyb = &dy[b * out_sz..(b + 1) * out_sz];
            let xb = &x.data()[b * in_sz..(b + 1) * in_sz];
            if let Some(db) = db.as_mut() {
                for (co, row) in dyb.chunks(plane).enumerate() {
                    db.data_mut()[co] += row.iter().copied().sum::<T>();
                }
            }
            for rows in row_tiles(s.ho, step) {
                let tile = rows.len() * s.wo;
                let p0 = rows.start * s.wo;
                let dy_t = &dyb[p0..];
                if let Some(dw) = dw.as_mut() {
                    let colref: &[T] = if identity {
                        xb
                    } else {
                        cols.resize(kk * tile, T::zero());
                        im2col(xb, (s.cin, s.h, s.w), geo, s.wo, rows.clone(), &mut cols);
                        &cols
                    };
                    let cs = if identity { plane } else { tile };
                    // dW[cout, kk] += dY[cout, tile] * cols^T[tile, kk]
                    T::gemm(
                        s.cout,
                        tile,
                        kk,
                        T::one(),
                        dy_t,
                        plane as isize,
                        1,
                        colref,
                        1,
                        cs as isize,
                        T::one(),
                        dw.data_mut(),
                        kk as isize,
                        1,
                    );
                }
                if let Some(dx) = dx.as_mut() {
                    let dxb = &mut dx.data_mut()[b * in_sz..(b + 1) * in_sz];
                    if identity {
                        // dX[cin, P] = W^T[cin, cout] * dY[cout, P]
                        T::gemm(
                            kk,
                            s.cout,
                            plane,
                            T::one(),
                            weight.data(),
                            1,
                            kk as isize,
                            dyb,
                            plane as isize,
                            1,
                            T::zero(),
                            dxb,
                            plane as isize,
                            1,
                        );
                    } else {
                        dcols.resize(kk * tile, T::zero());
                        T::gemm(
                            kk,
                            s.cout,
                            tile,
                            T::one(),
                            weight.data(),
                            1,
                            kk as isize,
                            dy_t,
                            plane as isize,
                            1,
                            T::zero(),
                            &mut dcols,
                            tile as isize,
                            1,
                        );
                        col2im(&dcols, (s.cin, s.h, s.w), geo, s.wo, rows.clone(), dxb);
                    }
                }
            }
        }
        let mut grads = vec![dx, dw];
        if self.has_bias {
            grads.push(db);
        }
        Ok(grads)
    }
}

/// Transposed convolution with kernel 2 and stride 2 (exact 2x upsampling,
/// no kernel overlap). `weight: [Cin, Cout, 2, 2]`.
pub fn conv_transpose2d_k2s2_forward<T: Float>(
    x: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    let (n, cin, h, w) = x.dims4()?;
    if n == 0 || cin == 0 || h == 0 || w == 0 {
        return Err(dim_err(
            "conv_transpose2d",
            format!("non-positive input dims {:?}", x.shape()),
        ));
    }
    let ws = weight.shape();
    if ws.len() != 4 || ws[0] != cin || ws[2] != 2 || ws[3] != 2 {
        return Err(dim_err(
            "conv_transpose2d",
            format!("input {:?} incompatible with weight {:?}", x.shape(), ws),
        ));
    }
    let cout = ws[1];
    if let Some(b) = bias {
        if b.shape() != [cout] {
            return Err(dim_err(
                "conv_transpose2d",
                format!("bias {:?} does not match {cout} output channels", b.shape()),
            ));
        }
    }
    let r = cout * 4;
    let plane = h * w;
    let mut tmp = vec![T::zero(); r * plane];
    let mut out = Tensor::zeros(&[n, cout, 2 * h, 2 * w]);
    let in_sz = cin * plane;
    let out_sz = cout * 4 * plane;
    for b in 0..n {
        let xb = &x.data()[b * in_sz..(b + 1) * in_sz];
        // tmp[r, P] = W^T[r, cin] * X[cin, P]
        T::gemm(
            r,
            cin,
            plane,
            T::one(),
            weight.data(),
            1,
            r as isize,
            xb,
            plane as isize,
            1,
            T::zero(),
            &mut tmp,
            plane as isize,
            1,
        );
        let ob = &mut out.data_mut()[b * out_sz..(b + 1) * out_sz];
        for co in 0..cout {
            let bv = bias.map_or(T::zero(), |bb| bb.data()[co]);
            let oc = &mut ob[co * 4 * plane..(co + 1) * 4 * plane];
            for a in 0..2 {
                for bb in 0..2 {
                    let src = &tmp[(co * 4 + a * 2 + bb) * plane..(co * 4 + a * 2 + bb + 1) * plane];
                    for i in 0..h {
                        let orow = &mut oc[(2 * i + a) * 2 * w..(2 * i + a + 1) * 2 * w];
                        for j in 0..w {
                            orow[2 * j + bb] = src[i * w + j] + bv;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

struct ConvT2Fn {
    has_bias: bool,
}

impl<T: Float> Function<T> for ConvT2Fn {
    fn name(&self) -> &'static str {
        "conv_transpose2d_k2s2"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let x = ctx.inputs[0];
        let weight = ctx.inputs[1];
        let (n, cin, h, w) = x.dims4()?;
        let cout = weight.shape()[1];
        let r = cout * 4;
        let plane = h * w;
        let in_sz = cin * plane;
        let out_sz = r * plane;
        let dy = ctx.grad.data();
        let need_x = ctx.needs_grad[0];
        let need_w = ctx.needs_grad[1];
        let need_b = self.has_bias && ctx.needs_grad[2];
        let mut dx = need_x.then(|| Tensor::zeros(x.shape()));
        let mut dw = need_w.then(|| Tensor::zeros(weight.shape()));
        let mut db = need_b.then(|| Tensor::zeros(&[cout]));
        let mut gathered = vec![T::zero(); r * plane];
        for b in 0..n {
            let dyb = &dy[b * out_sz..(b + 1) * out_sz];
            for co in 0..cout {
                let dc = &dyb[co * 4 * plane..(co + 1) * 4 * plane];
                for a in 0..2 {
                    for bb in 0..2 {
                        let dst = &mut gathered
                            [(co * 4 + a * 2 + bb) * plane..(co * 4 + a * 2 + bb + 1) * plane];
                        for i in 0..h {
                            let drow = &dc[(2 * i + a) * 2 * w..(2 * i + a + 1) * 2 * w];
                            for j in 0..w {
                                dst[i * w + j] = drow[2 * j + bb];
                            }
                        }
                    }
                }
                if let Some(db) = db.as_mut() {
                    db.data_mut()[co] += dc.iter().copied().sum::<T>();
                }
            }
            let xb = &x.data()[b * in_sz..(b + 1) * in_sz];
            if let Some(dw) = dw.as_mut() {
                // dW[cin, r] += X[cin, P] * G^T[P, r]
                T::gemm(
                    cin,
                    plane,
                    r,
                    T::one(),
                    xb,
                    plane as isize,
                    1,
                    &gathered,
                    1,
                    plane as isize,
                    T::one(),
                    dw.data_mut(),
                    r as isize,
                    1,
                );
            }
            if let Some(dx) = dx.as_mut() {
                // dX[cin, P] = W[cin, r] * G[r, P]
                T::gemm(
                    cin,
                    r,
                    plane,
                    T::one(),
                    weight.data(),
                    r as isize,
                    1,
                    &gathered,
                    plane as isize,
                    1,
                    T::zero(),
                    &mut dx.data_mut()[b * in_sz..(b + 1) * in_sz],
                    plane as isize,
                    1,
                );
            }
        }
        let mut grads = vec![dx, dw];
        if self.has_bias {
            grads.push(db);
        }
        Ok(grads)
    }
}

impl<T: Float> Graph<T> {
    pub fn conv2d(&mut self, x: Var, weight: Var, bias: Option<Var>, geo: ConvGeometry) -> Result<Var> {
        let out = conv2d_forward(
            self.value(x),
            self.value(weight),
            bias.map(|b| self.value(b)),
            geo,
        )?;
        let mut inputs = vec![x, weight];
        inputs.extend(bias);
        Ok(self.apply(
            &inputs,
            out,
            Box::new(Conv2dFn {
                geo,
                has_bias: bias.is_some(),
            }),
        ))
    }

    pub fn conv_transpose2d_k2s2(&mut self, x: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let out = conv_transpose2d_k2s2_forward(
            self.value(x),
            self.value(weight),
            bias.map(|b| self.value(b)),
        )?;
        let mut inputs = vec![x, weight];
        inputs.extend(bias);
        Ok(self.apply(
            &inputs,
            out,
            Box::new(ConvT2Fn {
                has_bias: bias.is_some(),
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: Option<&Tensor<f64>>, geo: ConvGeometry) -> Tensor<f64> {
        let (n, cin, h, wd) = x.dims4().unwrap();
        let cout = w.shape()[0];
        let k = geo.kernel;
        let ho = geo.output_size(h).unwrap();
        let wo = geo.output_size(wd).unwrap();
        let mut out = Tensor::zeros(&[n, cout, ho, wo]);
        for bi in 0..n {
            for co in 0..cout {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = b.map_or(0.0, |b| b.data()[co]);
                        for ci in 0..cin {
                            for ki in 0..k {
                                for kj in 0..k {
                                    let iy = (oy * geo.stride + ki) as isize - geo.padding as isize;
                                    let ix = (ox * geo.stride + kj) as isize - geo.padding as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                        continue;
                                    }
                                    acc += x.data()[((bi * cin + ci) * h + iy as usize) * wd + ix as usize]
                                        * w.data()[((co * cin + ci) * k + ki) * k + kj];
                                }
                            }
                        }
                        out.data_mut()[((bi * cout + co) * ho + oy) * wo + ox] = acc;
                    }
                }
            }
        }
        out
    }

    fn ramp(shape: &[usize], scale: f64) -> Tensor<f64> {
        Tensor::from_fn(shape, |i| ((i * 7919 % 23) as f64 - 11.0) * scale)
    }

    #[test]
    fn identity_kernel_is_identity() {
        let x = Tensor::<f64>::from_fn(&[1, 1, 3, 3], |i| i as f64 * 0.37 - 1.0);
        let w = Tensor::full(&[1, 1, 1, 1], 1.0);
        let b = Tensor::zeros(&[1]);
        let y = conv2d_forward(&x, &w, Some(&b), ConvGeometry::pointwise()).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn all_ones_window_sums() {
        let x = Tensor::<f64>::full(&[1, 1, 4, 4], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3], 1.0);
        let y = conv2d_forward(&x, &w, None, ConvGeometry::same3x3()).unwrap();
        let d = y.data();
        assert_eq!(d[0], 4.0);
        assert_eq!(d[3], 4.0);
        assert_eq!(d[1], 6.0);
        assert_eq!(d[5], 9.0);
        assert_eq!(d[10], 9.0);
    }

    #[test]
    fn matches_naive_for_strides_and_paddings() {
        for &(k, s, p) in &[(3, 1, 1), (3, 2, 1), (1, 1, 0), (3, 1, 0), (2, 2, 0), (3, 2, 2)] {
            let geo = ConvGeometry {
                kernel: k,
                stride: s,
                padding: p,
            };
            let x = ramp(&[2, 3, 7, 6], 0.1);
            let w = ramp(&[4, 3, k, k], 0.05);
            let b = ramp(&[4], 0.3);
            let fast = conv2d_forward(&x, &w, Some(&b), geo).unwrap();
            let slow = naive_conv(&x, &w, Some(&b), geo);
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12, "{geo:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn shape_mismatch_reports_both_shapes() {
        let x = Tensor::<f32>::zeros(&[1, 2, 4, 4]);
        let w = Tensor::zeros(&[3, 5, 3, 3]);
        let err = conv2d_forward(&x, &w, None, ConvGeometry::same3x3()).unwrap_err().to_string();
        assert!(err.contains("[1, 2, 4, 4]") && err.contains("[3, 5, 3, 3]"), "{err}");
    }

    #[test]
    fn transposed_single_pixel_block() {
        let (v, a, b, c, d) = (2.0, 1.0, -3.0, 0.5, 4.0);
        let x = Tensor::<f64>::full(&[1, 1, 1, 1], v);
        let w = Tensor::from_vec(&[1, 1, 2, 2], vec![a, b, c, d]).unwrap();
        let y = conv_transpose2d_k2s2_forward(&x, &w, None).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[v * a, v * b, v * c, v * d]);
    }

    #[test]
    fn transposed_constant_input_is_checkerboard() {
        let x = Tensor::<f64>::full(&[1, 1, 4, 4], 1.0);
        let w = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = conv_transpose2d_k2s2_forward(&x, &w, None).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = w.data()[(i % 2) * 2 + j % 2];
                assert_eq!(y.data()[i * 8 + j], want);
            }
        }
    }

    #[test]
    fn transposed_subsample_recovers_input() {
        let x = ramp(&[1, 1, 3, 5], 0.2);
        let w = ramp(&[1, 2, 2, 2], 0.7);
        let bias = Tensor::from_vec(&[2], vec![0.25, 0.25]).unwrap();
        let y = conv_transpose2d_k2s2_forward(&x, &w, Some(&bias)).unwrap();
        for co in 0..2 {
            for i in 0..3 {
                for j in 0..5 {
                    let want = x.data()[i * 5 + j] * w.data()[co * 4] + 0.25;
                    assert_eq!(y.data()[(co * 6 + 2 * i) * 10 + 2 * j], want);
                }
            }
        }
    }

    #[test]
    fn transposed_rejects_empty_input() {
        let x = Tensor::<f32>::zeros(&[1, 1, 0, 3]);
        let w = Tensor::zeros(&[1, 1, 2, 2]);
        assert!(conv_transpose2d_k2s2_forward(&x, &w, None).is_err());
    }
}
