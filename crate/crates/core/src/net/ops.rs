//! Dense kernels over row-major `f64` slices.

/// `c = op(a) * op(b) + beta * c` where `op(a)` is m x k and `op(b)` is k x n.
/// A transposed operand is stored in its untransposed shape (k x m or n x k).
#[allow(clippy::too_many_arguments)]
pub fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, c: &mut [f64], beta: f64) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for v in c[..m * n].iter_mut() {
            *v *= beta;
        }
        return;
    }
    // shapes where the packed kernel wastes most of its time packing
    if !tb && k <= 16 && n >= 256 {
        return gemm_short_inner(m, k, n, a, ta, b, c, beta);
    }
    if !ta && tb && m * n <= 2048 && k >= 4096 {
        return gemm_long_inner(m, k, n, a, b, c, beta);
    }
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the strides describe in-bounds views of `a`, `b` and `c` for the
    // given m, k, n, which the debug assertion above checks.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

const BLOCK: usize = 1024;

fn scale(c: &mut [f64], beta: f64) {
    if beta == 0.0 {
        c.fill(0.0);
    } else if beta != 1.0 {
        c.iter_mut().for_each(|v| *v *= beta);
    }
}

/// Rows of `c` accumulated as `k` scaled rows of `b`, in column blocks.
#[allow(clippy::too_many_arguments)]
fn gemm_short_inner(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], c: &mut [f64], beta: f64) {
    for j0 in (0..n).step_by(BLOCK) {
        let j1 = (j0 + BLOCK).min(n);
        for i in 0..m {
            let row = &mut c[i * n + j0..i * n + j1];
            scale(row, beta);
            for p in 0..k {
                let w = if ta { a[p * m + i] } else { a[i * k + p] };
                for (cv, bv) in row.iter_mut().zip(&b[p * n + j0..p * n + j1]) {
                    *cv += w * bv;
                }
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (xs, ys) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += xs[l] * ys[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Small output, long contraction: blocked dot products of stored rows.
fn gemm_long_inner(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64], beta: f64) {
    let mut acc = vec![0.0; m * n];
    for p0 in (0..k).step_by(BLOCK) {
        let p1 = (p0 + BLOCK).min(k);
        for i in 0..m {
            let ar = &a[i * k + p0..i * k + p1];
            for j in 0..n {
                acc[i * n + j] += dot(ar, &b[j * k + p0..j * k + p1]);
            }
        }
    }
    let c = &mut c[..m * n];
    scale(c, beta);
    for (cv, v) in c.iter_mut().zip(acc) {
        *cv += v;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Geometry of one convolution over a batch in `[channels, frames, h, w]` layout.
#[derive(Clone, Copy, Debug)]
pub struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    pub size_in: usize,
    pub size_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub frames: usize,
}

impl ConvShape {
    pub fn rows(&self) -> usize {
        self.c_in * self.kernel * self.kernel
    }

    pub fn cols(&self) -> usize {
        self.frames * self.size_out * self.size_out
    }

    /// Output positions `[lo, hi)` whose tap `k` lands inside the input.
    fn valid(&self, k: usize) -> (usize, usize) {
        let lo = self.pad.saturating_sub(k).div_ceil(self.stride);
        let hi = if self.size_in + self.pad > k {
            ((self.size_in + self.pad - k - 1) / self.stride + 1).min(self.size_out)
        } else {
            0
        };
        (lo.min(hi), hi)
    }
}

/// Unfolds `[c_in, frames, size_in, size_in]` into `[c_in * k * k, frames * size_out^2]`.
/// `cols` is resized as needed; every entry is overwritten.
pub fn im2col(s: &ConvShape, input: &[f64], cols: &mut Vec<f64>) {
    let (k, si, so, nf, st) = (s.kernel, s.size_in, s.size_out, s.frames, s.stride);
    let m = s.cols();
    cols.resize(s.rows() * m, 0.0);
    for ci in 0..s.c_in {
        for ky in 0..k {
            let (ylo, yhi) = s.valid(ky);
            for kx in 0..k {
                let (xlo, xhi) = s.valid(kx);
                let row = &mut cols[((ci * k + ky) * k + kx) * m..][..m];
                for f in 0..nf {
                    let plane = &input[(ci * nf + f) * si * si..][..si * si];
                    for oy in 0..so {
                        let dst = &mut row[(f * so + oy) * so..][..so];
                        if oy < ylo || oy >= yhi {
                            dst.fill(0.0);
                            continue;
                        }
                        let src = &plane[(oy * st + ky - s.pad) * si..][..si];
                        dst[..xlo].fill(0.0);
                        dst[xhi..].fill(0.0);
                        for ox in xlo..xhi {
                            dst[ox] = src[ox * st + kx - s.pad];
                        }
                    }
                }
            }
        }
    }
}

/// Scatters column gradients back onto the input gradient (accumulating).
pub fn col2im(s: &ConvShape, dcols: &[f64], dinput: &mut [f64]) {
    let (k, si, so, nf, st) = (s.kernel, s.size_in, s.size_out, s.frames, s.stride);
    let m = s.cols();
    for ci in 0..s.c_in {
        for ky in 0..k {
            let (ylo, yhi) = s.valid(ky);
            for kx in 0..k {
                let (xlo, xhi) = s.valid(kx);
                let row = &dcols[((ci * k + ky) * k + kx) * m..][..m];
                for f in 0..nf {
                    let plane = &mut dinput[(ci * nf + f) * si * si..][..si * si];
                    for oy in ylo..yhi {
                        let src = &row[(f * so + oy) * so..][..so];
                        let dst = &mut plane[(oy * st + ky - s.pad) * si..][..si];
                        for ox in xlo..xhi {
                            dst[ox * st + kx - s.pad] += src[ox];
                        }
                    }
                }
            }
        }
    }
}
