//! Row-major dense kernels shared by the layers, plus the im2col/col2im
//! lowering used by convolution. Plain loops, ordered so the innermost
//! access is contiguous.

/// `c += a * b` with `a` m-by-k, `b` k-by-n, `c` m-by-n.
pub fn matmul_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for r in 0..m {
        let a_row = &a[r * k..(r + 1) * k];
        let c_row = &mut c[r * n..(r + 1) * n];
        for (kk, &a_rk) in a_row.iter().enumerate() {
            if a_rk == 0.0 {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            for (cv, bv) in c_row.iter_mut().zip(b_row) {
                *cv += a_rk * bv;
            }
        }
    }
}

/// `c += a^T * b` with `a` m-by-k, `b` m-by-n, `c` k-by-n.
pub fn matmul_at_b_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    for r in 0..m {
        let a_row = &a[r * k..(r + 1) * k];
        let b_row = &b[r * n..(r + 1) * n];
        for (kk, &a_rk) in a_row.iter().enumerate() {
            if a_rk == 0.0 {
                continue;
            }
            let c_row = &mut c[kk * n..(kk + 1) * n];
            for (cv, bv) in c_row.iter_mut().zip(b_row) {
                *cv += a_rk * bv;
            }
        }
    }
}

/// `c += a * b^T` with `a` m-by-n, `b` k-by-n, `c` m-by-k.
pub fn matmul_a_bt_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, n: usize, k: usize) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * k);
    for r in 0..m {
        let a_row = &a[r * n..(r + 1) * n];
        let c_row = &mut c[r * k..(r + 1) * k];
        for (kk, cv) in c_row.iter_mut().enumerate() {
            let b_row = &b[kk * n..(kk + 1) * n];
            let mut acc = 0.0;
            for (av, bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            *cv += acc;
        }
    }
}

/// Unpacks one sample's `channels`-by-`h`-by-`w` image into patch columns:
/// `cols` is `channels*k*k` rows by `out_h*out_w` columns, where column `p`
/// holds the receptive field of output position `p`. Out-of-image positions
/// (from padding) contribute zeros.
#[allow(clippy::too_many_arguments)]
pub fn im2col(
    input: &[f64],
    channels: usize,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
    cols: &mut [f64],
) {
    let patch = out_h * out_w;
    debug_assert_eq!(input.len(), channels * h * w);
    debug_assert_eq!(cols.len(), channels * kernel * kernel * patch);
    for c in 0..channels {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for ky in 0..kernel {
            for kx in 0..kernel {
                let row = ((c * kernel + ky) * kernel + kx) * patch;
                for oy in 0..out_h {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    let dst = &mut cols[row + oy * out_w..row + (oy + 1) * out_w];
                    if iy < 0 || iy >= h as isize {
                        dst.fill(0.0);
                        continue;
                    }
                    let src_row = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        *d = if ix < 0 || ix >= w as isize {
                            0.0
                        } else {
                            src_row[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Scatter-adds patch-column gradients back onto the input image: the exact
/// adjoint of [`im2col`].
#[allow(clippy::too_many_arguments)]
pub fn col2im_acc(
    cols: &[f64],
    channels: usize,
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
    input_grad: &mut [f64],
) {
    let patch = out_h * out_w;
    debug_assert_eq!(input_grad.len(), channels * h * w);
    debug_assert_eq!(cols.len(), channels * kernel * kernel * patch);
    for c in 0..channels {
        let plane = &mut input_grad[c * h * w..(c + 1) * h * w];
        for ky in 0..kernel {
            for kx in 0..kernel {
                let row = ((c * kernel + ky) * kernel + kx) * patch;
                for oy in 0..out_h {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &cols[row + oy * out_w..row + (oy + 1) * out_w];
                    for (ox, s) in src.iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            plane[iy as usize * w + ix as usize] += s;
                        }
                    }
                }
            }
        }
    }
}
