//! Frontal-slice views of a coefficient tensor.
//!
//! `A = Σ_i Ã_i`, where the padded slice `Ã_i` keeps frontal slice `i` of
//! `A` and is zero elsewhere. The views here store only a reference to the
//! parent and apply `Ã_i * X` and `Ã_iᵀ * R` as circulant shifts of plain
//! matrix products, so the padded zeros are never formed.
//!
//! Public indices are 1-based; slice positions returned by
//! [`SliceOperator::slice_range`] are 0-based offsets into the parent.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::tensor::kernels::{gemm_nn, gemm_tn};
use crate::tensor::{op_norm, Tensor3};

/// A sum of consecutive padded frontal slices of a parent tensor.
pub trait SliceOperator {
    fn parent(&self) -> &Tensor3;

    /// 0-based frontal slices covered by the operator.
    fn slice_range(&self) -> Range<usize>;

    fn parent_dims(&self) -> (usize, usize, usize) {
        self.parent().dims()
    }
}

/// Padded frontal slice `Ã_i`.
#[derive(Clone, Copy, Debug)]
pub struct PaddedFrontalSlice<'a> {
    parent: &'a Tensor3,
    index: usize,
}

impl<'a> PaddedFrontalSlice<'a> {
    /// 1-based slice index.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn payload(&self) -> &'a [f64] {
        self.parent.slice(self.index - 1)
    }
}

impl SliceOperator for PaddedFrontalSlice<'_> {
    fn parent(&self) -> &Tensor3 {
        self.parent
    }

    fn slice_range(&self) -> Range<usize> {
        self.index - 1..self.index
    }
}

/// Frontal block `Ã_i^s`, the sum of padded slices `(i−1)s+1 ..= is`.
#[derive(Clone, Copy, Debug)]
pub struct FrontalBlock<'a> {
    parent: &'a Tensor3,
    index: usize,
    size: usize,
}

impl<'a> FrontalBlock<'a> {
    /// The block covering every slice of `a`.
    pub fn full(a: &'a Tensor3) -> Self {
        FrontalBlock { parent: a, index: 1, size: a.n() }
    }

    /// 1-based block index.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn payload(&self, p: usize) -> &'a [f64] {
        assert!(p < self.size, "payload index {p} outside block of size {}", self.size);
        self.parent.slice((self.index - 1) * self.size + p)
    }
}

impl SliceOperator for FrontalBlock<'_> {
    fn parent(&self) -> &Tensor3 {
        self.parent
    }

    fn slice_range(&self) -> Range<usize> {
        (self.index - 1) * self.size..self.index * self.size
    }
}

/// Row slice `A_{i::}` copied out as a `1 × n2 × n` tensor.
#[derive(Clone, Debug)]
pub struct RowSlice {
    parent_dims: (usize, usize, usize),
    index: usize,
    payload: Tensor3,
}

impl RowSlice {
    pub fn parent_dims(&self) -> (usize, usize, usize) {
        self.parent_dims
    }

    /// 1-based row index.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn payload(&self) -> &Tensor3 {
        &self.payload
    }
}

/// `Ã_i` for a 1-based `i`.
pub fn padded_slice(a: &Tensor3, i: usize) -> Result<PaddedFrontalSlice<'_>> {
    if i == 0 || i > a.n() {
        return Err(Error::IndexOutOfRange { index: i, len: a.n() });
    }
    Ok(PaddedFrontalSlice { parent: a, index: i })
}

/// Checks that `s` is a valid block size for a third mode of length `n`.
pub fn check_block_size(n: usize, s: usize) -> Result<()> {
    if s == 0 || !n.is_multiple_of(s) {
        return Err(Error::config(format!("block size {s} does not divide n = {n}")));
    }
    Ok(())
}

/// `Ã_i^s` for a 1-based block index `i`.
pub fn frontal_block(a: &Tensor3, i: usize, s: usize) -> Result<FrontalBlock<'_>> {
    check_block_size(a.n(), s)?;
    let blocks = a.n() / s;
    if i == 0 || i > blocks {
        return Err(Error::IndexOutOfRange { index: i, len: blocks });
    }
    Ok(FrontalBlock { parent: a, index: i, size: s })
}

/// Row slice `A_{i::}` for a 1-based `i`.
pub fn row_slice(a: &Tensor3, i: usize) -> Result<RowSlice> {
    if i == 0 || i > a.n1() {
        return Err(Error::IndexOutOfRange { index: i, len: a.n1() });
    }
    Ok(RowSlice { parent_dims: a.dims(), index: i, payload: a.row_slice(i - 1) })
}

/// The dense tensor the operator stands for.
pub fn materialize<S: SliceOperator + ?Sized>(s: &S) -> Tensor3 {
    let a = s.parent();
    let (n1, n2, n) = a.dims();
    let mut out = Tensor3::zeros(n1, n2, n);
    for p in s.slice_range() {
        out.slice_mut(p).copy_from_slice(a.slice(p));
    }
    out
}

/// `out += scale · (Σ_{p∈slices} Ã_p) * x`.
pub(crate) fn shifted_apply_into(
    a: &Tensor3,
    slices: impl IntoIterator<Item = usize>,
    scale: f64,
    x: &Tensor3,
    out: &mut Tensor3,
) {
    let (n1, n2, n) = a.dims();
    let n3 = x.n2();
    for p in slices {
        let ap = a.slice(p);
        for k in 0..n {
            let src = (k + n - p) % n;
            gemm_nn(n1, n2, n3, scale, ap, x.slice(src), out.slice_mut(k));
        }
    }
}

/// `out += scale · (Σ_{p∈slices} Ã_p)ᵀ * r`.
pub(crate) fn shifted_apply_transpose_into(
    a: &Tensor3,
    slices: impl IntoIterator<Item = usize>,
    scale: f64,
    r: &Tensor3,
    out: &mut Tensor3,
) {
    let (n1, n2, n) = a.dims();
    let n3 = r.n2();
    for p in slices {
        let ap = a.slice(p);
        for k in 0..n {
            let src = (k + p) % n;
            gemm_tn(n2, n1, n3, scale, ap, r.slice(src), out.slice_mut(k));
        }
    }
}

fn check_apply(dims: (usize, usize, usize), x: &Tensor3, inner: usize, what: &str) -> Result<()> {
    let (_, _, n) = dims;
    if x.n1() != inner || x.n() != n {
        return Err(Error::dims(format!(
            "{what}: operand is {}x{}x{}, expected {inner}x·x{n}",
            x.n1(),
            x.n2(),
            x.n()
        )));
    }
    Ok(())
}

/// `S * X` without materializing `S`.
pub fn slice_apply<S: SliceOperator + ?Sized>(s: &S, x: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n) = s.parent_dims();
    check_apply((n1, n2, n), x, n2, "slice_apply")?;
    let mut out = Tensor3::zeros(n1, x.n2(), n);
    shifted_apply_into(s.parent(), s.slice_range(), 1.0, x, &mut out);
    Ok(out)
}

/// `Sᵀ * R` without materializing `S`.
pub fn slice_apply_transpose<S: SliceOperator + ?Sized>(s: &S, r: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n) = s.parent_dims();
    check_apply((n1, n2, n), r, n1, "slice_apply_transpose")?;
    let mut out = Tensor3::zeros(n2, r.n2(), n);
    shifted_apply_transpose_into(s.parent(), s.slice_range(), 1.0, r, &mut out);
    Ok(out)
}

/// `Siᵀ * Sj` as an `n2 × n2 × n` tensor: the product of padded slices `p`
/// and `q` lands on slice `(q − p) mod n` with payload `A_pᵀ A_q`.
pub fn gram_tensor<S: SliceOperator + ?Sized, T: SliceOperator + ?Sized>(si: &S, sj: &T) -> Result<Tensor3> {
    if si.parent_dims() != sj.parent_dims() {
        return Err(Error::dims("gram_tensor operands have different parents"));
    }
    let (_, n2, n) = si.parent_dims();
    let mut out = Tensor3::zeros(n2, n2, n);
    add_gram(si.parent(), si.slice_range(), sj.parent(), sj.slice_range(), &mut out);
    Ok(out)
}

pub(crate) fn add_gram(a: &Tensor3, ps: Range<usize>, b: &Tensor3, qs: Range<usize>, out: &mut Tensor3) {
    let (n1, n2, n) = a.dims();
    for p in ps {
        for q in qs.clone() {
            let k = (q + n - p) % n;
            gemm_tn(n2, n1, n2, 1.0, a.slice(p), b.slice(q), out.slice_mut(k));
        }
    }
}

/// `‖Siᵀ * Sj‖_op`.
pub fn mutual_gram_norm<S: SliceOperator + ?Sized, T: SliceOperator + ?Sized>(si: &S, sj: &T) -> Result<f64> {
    op_norm(&gram_tensor(si, sj)?)
}
