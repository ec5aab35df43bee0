//! Strided matrix views and the scalar trait the model is generic over.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

/// Floating-point element type of model tensors (`f32` for training,
/// `f64` for gradient verification).
pub trait Scalar: Float + Default + Debug + Send + Sync + Sum + 'static {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    /// `c = alpha * a * b + beta * c` on strided views.
    ///
    /// # Safety
    /// Every index reachable through the given shapes and strides must be in
    /// bounds of the corresponding buffer; `c` must not alias `a` or `b`.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Read-only strided matrix.
#[derive(Clone, Copy)]
pub struct MatRef<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a, T: Scalar> MatRef<'a, T> {
    /// Row-major `rows x cols` view of the whole slice.
    pub fn new(data: &'a [T], rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer size");
        MatRef { data, rows, cols, rs: cols, cs: 1 }
    }

    /// Columns `start..start + width` of a row-major matrix with `stride` columns.
    pub fn cols_of(data: &'a [T], rows: usize, stride: usize, start: usize, width: usize) -> Self {
        assert!(start + width <= stride);
        let v = MatRef { data: &data[start..], rows, cols: width, rs: stride, cs: 1 };
        v.check();
        v
    }

    pub fn t(self) -> Self {
        MatRef { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            assert!((self.rows - 1) * self.rs + (self.cols - 1) * self.cs < self.data.len());
        }
    }
}

/// Mutable strided matrix.
pub struct MatMut<'a, T> {
    data: &'a mut [T],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a, T: Scalar> MatMut<'a, T> {
    pub fn new(data: &'a mut [T], rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer size");
        MatMut { data, rows, cols, rs: cols, cs: 1 }
    }

    pub fn cols_of(data: &'a mut [T], rows: usize, stride: usize, start: usize, width: usize) -> Self {
        assert!(start + width <= stride);
        let v = MatMut { data: &mut data[start..], rows, cols: width, rs: stride, cs: 1 };
        if rows > 0 && width > 0 {
            assert!((rows - 1) * stride + width - 1 < v.data.len());
        }
        v
    }

    #[cfg(test)]
    pub fn t(self) -> Self {
        MatMut { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }
}

/// `c = alpha * a * b + beta * c`.
pub fn gemm<T: Scalar>(alpha: T, a: MatRef<'_, T>, b: MatRef<'_, T>, beta: T, c: MatMut<'_, T>) {
    assert_eq!(a.cols, b.rows, "inner dimensions");
    assert_eq!((a.rows, b.cols), (c.rows, c.cols), "output shape");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: all three views were bounds-checked on construction, and `c`
    // is an exclusive borrow so it cannot alias the shared inputs.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.data.as_mut_ptr(),
            c.rs as isize,
            c.cs as isize,
        )
    }
}
