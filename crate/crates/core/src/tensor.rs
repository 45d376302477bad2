//! Dense complex linear algebra over ordered multi-register Hilbert spaces.
//!
//! Amplitudes are indexed big-endian in register declaration order: the
//! first register is the most significant digit of the flat index. All
//! values are immutable after construction and safe to share across threads.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Global numerical tolerance for equality, unitarity and normalization.
pub const EPS: f64 = 1e-9;

/// Refuse to allocate state vectors beyond this many amplitudes.
pub const MAX_AMPLITUDES: usize = 1 << 20;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Ordered list of named registers with their local dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterLayout {
    regs: Vec<(String, usize)>,
    strides: Vec<usize>,
    total: usize,
}

impl RegisterLayout {
    pub fn new(regs: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (label, dim) in &regs {
            if !seen.insert(label.clone()) {
                return Err(Error::ValidationFailed(format!(
                    "duplicate register label '{label}'"
                )));
            }
            if *dim == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "register '{label}' has dimension 0"
                )));
            }
        }
        let mut total: usize = 1;
        for (label, dim) in &regs {
            total = total.checked_mul(*dim).ok_or_else(|| {
                Error::DimensionMismatch(format!(
                    "total dimension overflows at register '{label}'"
                ))
            })?;
            if total > MAX_AMPLITUDES {
                return Err(Error::DimensionMismatch(format!(
                    "total dimension {total} exceeds the amplitude budget {MAX_AMPLITUDES}"
                )));
            }
        }
        // Big-endian: first register owns the most significant digit.
        let mut strides = vec![1usize; regs.len()];
        for i in (0..regs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * regs[i + 1].1;
        }
        Ok(Self { regs, strides, total })
    }

    pub fn register_count(&self) -> usize {
        self.regs.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.regs.iter().map(|(l, _)| l.as_str())
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.regs[idx].0
    }

    pub fn dim(&self, idx: usize) -> usize {
        self.regs[idx].1
    }

    pub fn stride(&self, idx: usize) -> usize {
        self.strides[idx]
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(format!("register '{label}'")))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dim(self.index_of(label)?))
    }

    /// Flat index of a full digit assignment (one digit per register).
    pub fn flat(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.regs.len());
        digits
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| d * s)
            .sum()
    }

    /// Digit of register `idx` inside flat index `flat`.
    pub fn digit(&self, flat: usize, idx: usize) -> usize {
        (flat / self.strides[idx]) % self.regs[idx].1
    }

    /// Joint dimension of a label subset.
    pub fn subset_dim(&self, labels: &[String]) -> Result<usize> {
        let mut d = 1usize;
        for l in labels {
            d *= self.dim_of(l)?;
        }
        Ok(d)
    }
}

/// Pure state over a layout; `normalized` is a recorded fact, not a promise.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub layout: RegisterLayout,
    pub amps: Vec<C64>,
    pub normalized: bool,
}

impl StateVector {
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} amplitudes, layout needs {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let normalized = (n - 1.0).abs() <= EPS;
        Ok(Self { layout, amps, normalized })
    }

    /// Computational basis state |digits⟩.
    pub fn basis(layout: RegisterLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.register_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} digits for {} registers",
                digits.len(),
                layout.register_count()
            )));
        }
        for (i, d) in digits.iter().enumerate() {
            if *d >= layout.dim(i) {
                return Err(Error::DimensionMismatch(format!(
                    "digit {d} out of range for register '{}'",
                    layout.label(i)
                )));
            }
        }
        let mut amps = vec![c(0.0, 0.0); layout.total_dim()];
        amps[layout.flat(digits)] = c(1.0, 0.0);
        Ok(Self { layout, amps, normalized: true })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalize(&self) -> Result<StateVector> {
        let n = self.norm_sqr();
        if n <= EPS {
            return Err(Error::NumericalIntegrity(
                "cannot normalize a state of vanishing norm".into(),
            ));
        }
        let s = 1.0 / n.sqrt();
        let amps = self.amps.iter().map(|a| a * s).collect();
        Ok(StateVector { layout: self.layout.clone(), amps, normalized: true })
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    /// Tensor this state with |0…0⟩ on extra registers appended to the layout.
    pub fn extend_with_zero_registers(&self, extra: &[(String, usize)]) -> Result<StateVector> {
        let mut regs = self.layout.registers().to_vec();
        regs.extend_from_slice(extra);
        let layout = RegisterLayout::new(regs)?;
        let block: usize = extra.iter().map(|(_, d)| d).product();
        let mut amps = vec![c(0.0, 0.0); layout.total_dim()];
        for (i, a) in self.amps.iter().enumerate() {
            amps[i * block] = *a; // appended registers sit in the low digits
        }
        Ok(StateVector { layout, amps, normalized: self.normalized })
    }
}

/// Mixed state as a dense row-major matrix.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub layout: RegisterLayout,
    pub mat: Vec<C64>,
    pub normalized: bool,
}

impl DensityOperator {
    pub fn from_pure(psi: &StateVector) -> Self {
        let d = psi.layout.total_dim();
        let mut mat = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            if psi.amps[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..d {
                mat[i * d + j] = psi.amps[i] * psi.amps[j].conj();
            }
        }
        DensityOperator { layout: psi.layout.clone(), mat, normalized: psi.normalized }
    }

    /// Validates Hermiticity, positivity (within tolerance) and records
    /// whether the trace is 1.
    pub fn from_matrix(layout: RegisterLayout, mat: Vec<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if mat.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "density matrix has {} entries, layout needs {}",
                mat.len(),
                d * d
            )));
        }
        for i in 0..d {
            for j in 0..d {
                let diff = mat[i * d + j] - mat[j * d + i].conj();
                if diff.norm() > 1e2 * EPS {
                    return Err(Error::NumericalIntegrity(format!(
                        "density matrix not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        if !psd_within(&mat, d, 1e2 * EPS) {
            return Err(Error::NumericalIntegrity(
                "density matrix has an eigenvalue below -tolerance".into(),
            ));
        }
        let tr: C64 = (0..d).map(|i| mat[i * d + i]).sum();
        let normalized = (tr.re - 1.0).abs() <= EPS && tr.im.abs() <= EPS;
        Ok(Self { layout, mat, normalized })
    }

    pub fn trace(&self) -> C64 {
        let d = self.layout.total_dim();
        (0..d).map(|i| self.mat[i * d + i]).sum()
    }

    /// Reduced state on `keep` registers, preserving their original layout
    /// order regardless of the order given here.
    pub fn partial_trace(&self, keep: &[String]) -> Result<DensityOperator> {
        let mut keep_idx: Vec<usize> = Vec::with_capacity(keep.len());
        for l in keep {
            keep_idx.push(self.layout.index_of(l)?);
        }
        keep_idx.sort_unstable();
        keep_idx.dedup();
        let drop_idx: Vec<usize> = (0..self.layout.register_count())
            .filter(|i| !keep_idx.contains(i))
            .collect();

        let kept_regs: Vec<(String, usize)> = keep_idx
            .iter()
            .map(|&i| self.layout.registers()[i].clone())
            .collect();
        let out_layout = RegisterLayout::new(kept_regs)?;
        let dk = out_layout.total_dim();
        let mut out = vec![c(0.0, 0.0); dk * dk];

        let keep_strides: Vec<usize> = keep_idx.iter().map(|&i| self.layout.stride(i)).collect();
        let keep_dims: Vec<usize> = keep_idx.iter().map(|&i| self.layout.dim(i)).collect();
        let drop_strides: Vec<usize> = drop_idx.iter().map(|&i| self.layout.stride(i)).collect();
        let drop_dims: Vec<usize> = drop_idx.iter().map(|&i| self.layout.dim(i)).collect();

        let keep_offsets = enumerate_offsets(&keep_dims, &keep_strides);
        let drop_offsets = enumerate_offsets(&drop_dims, &drop_strides);

        let d = self.layout.total_dim();
        for (ki, &offi) in keep_offsets.iter().enumerate() {
            for (kj, &offj) in keep_offsets.iter().enumerate() {
                let mut acc = c(0.0, 0.0);
                for &e in &drop_offsets {
                    acc += self.mat[(offi + e) * d + (offj + e)];
                }
                out[ki * dk + kj] = acc;
            }
        }
        Ok(DensityOperator { layout: out_layout, mat: out, normalized: self.normalized })
    }
}

/// Positive semidefiniteness via Cholesky of `m + tol·I`; failure to factor
/// means an eigenvalue sits below `-tol`.
fn psd_within(m: &[C64], d: usize, tol: f64) -> bool {
    let mut a: Vec<C64> = m.to_vec();
    for i in 0..d {
        a[i * d + i] += c(tol, 0.0);
    }
    for k in 0..d {
        let mut diag = a[k * d + k].re;
        for j in 0..k {
            diag -= a[k * d + j].norm_sqr();
        }
        if diag < -tol {
            return false;
        }
        let diag = diag.max(0.0).sqrt();
        a[k * d + k] = c(diag, 0.0);
        for i in (k + 1)..d {
            let mut v = a[i * d + k];
            for j in 0..k {
                v -= a[i * d + j] * a[k * d + j].conj();
            }
            a[i * d + k] = if diag > tol { v / diag } else { c(0.0, 0.0) };
        }
    }
    true
}

/// All flat offsets reachable by the given digit dims/strides, enumerated
/// big-endian (first digit most significant).
fn enumerate_offsets(dims: &[usize], strides: &[usize]) -> Vec<usize> {
    let count: usize = dims.iter().product();
    let mut out = Vec::with_capacity(count.max(1));
    let mut digits = vec![0usize; dims.len()];
    loop {
        out.push(digits.iter().zip(strides).map(|(d, s)| d * s).sum());
        let mut pos = dims.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Operator over a subset of registers; identity on the complement.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    support: Vec<(String, usize)>,
    mat: Vec<C64>,
    dim: usize,
    projector: bool,
    unitary: bool,
}

impl LinearOperator {
    /// Operator over `support` labels (in the given order), dims resolved
    /// from `layout`. `mat` is row-major over the joint support space.
    pub fn new(layout: &RegisterLayout, support: &[String], mat: Vec<C64>) -> Result<Self> {
        let mut sup = Vec::with_capacity(support.len());
        let mut seen = std::collections::BTreeSet::new();
        for l in support {
            let idx = layout.index_of(l)?;
            if !seen.insert(l.clone()) {
                return Err(Error::ValidationFailed(format!(
                    "operator support repeats register '{l}'"
                )));
            }
            sup.push((l.clone(), layout.dim(idx)));
        }
        Self::from_parts(sup, mat)
    }

    /// Layout-free construction from explicit (label, dim) pairs.
    pub fn from_parts(support: Vec<(String, usize)>, mat: Vec<C64>) -> Result<Self> {
        let dim: usize = support.iter().map(|(_, d)| d).product();
        if mat.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "operator matrix has {} entries, support dimension {} needs {}",
                mat.len(),
                dim,
                dim * dim
            )));
        }
        Ok(Self { support, mat, dim, projector: false, unitary: false })
    }

    /// Scalar identity (empty support): applying it is a no-op.
    pub fn identity() -> Self {
        Self {
            support: Vec::new(),
            mat: vec![c(1.0, 0.0)],
            dim: 1,
            projector: true,
            unitary: true,
        }
    }

    pub fn support_labels(&self) -> Vec<String> {
        self.support.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn support(&self) -> &[(String, usize)] {
        &self.support
    }

    pub fn matrix(&self) -> &[C64] {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_projector_flagged(&self) -> bool {
        self.projector
    }

    pub fn is_unitary_flagged(&self) -> bool {
        self.unitary
    }

    /// Verify P ≈ P² ≈ P† and set the projector flag.
    pub fn into_projector(mut self) -> Result<Self> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let herm = self.mat[i * d + j] - self.mat[j * d + i].conj();
                if herm.norm() > EPS {
                    return Err(Error::NotAProjector(format!(
                        "not Hermitian at ({i},{j})"
                    )));
                }
                let mut sq = c(0.0, 0.0);
                for k in 0..d {
                    sq += self.mat[i * d + k] * self.mat[k * d + j];
                }
                if (sq - self.mat[i * d + j]).norm() > 1e2 * EPS {
                    return Err(Error::NotAProjector(format!(
                        "not idempotent at ({i},{j})"
                    )));
                }
            }
        }
        self.projector = true;
        Ok(self)
    }

    /// Verify U†U ≈ 1 and set the unitary flag.
    pub fn into_unitary(mut self) -> Result<Self> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let mut acc = c(0.0, 0.0);
                for k in 0..d {
                    acc += self.mat[k * d + i].conj() * self.mat[k * d + j];
                }
                let expect = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                if (acc - expect).norm() > 1e2 * EPS {
                    return Err(Error::NotUnitary(format!(
                        "U†U deviates from identity at ({i},{j})"
                    )));
                }
            }
        }
        self.unitary = true;
        Ok(self)
    }

    pub fn dagger(&self) -> LinearOperator {
        let d = self.dim;
        let mut mat = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                mat[i * d + j] = self.mat[j * d + i].conj();
            }
        }
        LinearOperator {
            support: self.support.clone(),
            mat,
            dim: d,
            projector: self.projector,
            unitary: self.unitary,
        }
    }

    /// Matrix product `self · other` for operators on identical supports.
    pub fn compose(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if self.support != other.support {
            return Err(Error::DimensionMismatch(
                "compose requires identical supports".into(),
            ));
        }
        let d = self.dim;
        let mut mat = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.mat[i * d + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    mat[i * d + j] += a * other.mat[k * d + j];
                }
            }
        }
        Ok(LinearOperator { support: self.support.clone(), mat, dim: d, projector: false, unitary: false })
    }

    fn global_offsets(&self, layout: &RegisterLayout) -> Result<(Vec<usize>, Vec<usize>)> {
        // Offsets of every support-local index in the global space, plus the
        // base offsets of the complement ("rest") space.
        let mut sup_strides = Vec::with_capacity(self.support.len());
        let mut sup_dims = Vec::with_capacity(self.support.len());
        let mut sup_positions = Vec::with_capacity(self.support.len());
        for (l, d) in &self.support {
            let idx = layout.index_of(l)?;
            if layout.dim(idx) != *d {
                return Err(Error::DimensionMismatch(format!(
                    "operator expects dim {d} on '{l}', layout has {}",
                    layout.dim(idx)
                )));
            }
            sup_strides.push(layout.stride(idx));
            sup_dims.push(*d);
            sup_positions.push(idx);
        }
        let rest: Vec<usize> = (0..layout.register_count())
            .filter(|i| !sup_positions.contains(i))
            .collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&i| layout.dim(i)).collect();
        let rest_strides: Vec<usize> = rest.iter().map(|&i| layout.stride(i)).collect();
        Ok((
            enumerate_offsets(&sup_dims, &sup_strides),
            enumerate_offsets(&rest_dims, &rest_strides),
        ))
    }

    /// Apply to a state vector: gather each support-local block, multiply by
    /// the matrix, scatter back. O(total · support_dim).
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if self.support.is_empty() {
            return Ok(psi.clone());
        }
        let (sup_off, rest_off) = self.global_offsets(&psi.layout)?;
        let s = self.dim;
        let mut out = vec![c(0.0, 0.0); psi.amps.len()];
        let mut local = vec![c(0.0, 0.0); s];
        for &base in &rest_off {
            for (k, &off) in sup_off.iter().enumerate() {
                local[k] = psi.amps[base + off];
            }
            for i in 0..s {
                let mut acc = c(0.0, 0.0);
                let row = &self.mat[i * s..(i + 1) * s];
                for (k, lk) in local.iter().enumerate() {
                    if lk.norm_sqr() != 0.0 {
                        acc += row[k] * lk;
                    }
                }
                out[base + sup_off[i]] = acc;
            }
        }
        Ok(StateVector { layout: psi.layout.clone(), amps: out, normalized: false })
    }

    /// Apply as `A ρ A†`.
    pub fn apply_to_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if self.support.is_empty() {
            return Ok(rho.clone());
        }
        let (sup_off, rest_off) = self.global_offsets(&rho.layout)?;
        let s = self.dim;
        let d = rho.layout.total_dim();
        // Left multiply: transform each column's support blocks by M.
        let mut mid = vec![c(0.0, 0.0); d * d];
        let mut local = vec![c(0.0, 0.0); s];
        for col in 0..d {
            for &base in &rest_off {
                for (k, &off) in sup_off.iter().enumerate() {
                    local[k] = rho.mat[(base + off) * d + col];
                }
                for i in 0..s {
                    let mut acc = c(0.0, 0.0);
                    let row = &self.mat[i * s..(i + 1) * s];
                    for (k, lk) in local.iter().enumerate() {
                        acc += row[k] * lk;
                    }
                    mid[(base + sup_off[i]) * d + col] = acc;
                }
            }
        }
        // Right multiply by A†: transform each row's support blocks by conj(M).
        let mut out = vec![c(0.0, 0.0); d * d];
        for row_g in 0..d {
            for &base in &rest_off {
                for (k, &off) in sup_off.iter().enumerate() {
                    local[k] = mid[row_g * d + (base + off)];
                }
                for j in 0..s {
                    let mut acc = c(0.0, 0.0);
                    let mrow = &self.mat[j * s..(j + 1) * s];
                    for (k, lk) in local.iter().enumerate() {
                        acc += mrow[k].conj() * lk;
                    }
                    out[row_g * d + (base + sup_off[j])] = acc;
                }
            }
        }
        Ok(DensityOperator { layout: rho.layout.clone(), mat: out, normalized: false })
    }
}

/// Full-space matrix form of `op` under `layout`: acts as `op` on its
/// support, identity elsewhere, register order respected. Only available
/// while the full matrix stays inside the amplitude budget.
pub fn embed(op: &LinearOperator, layout: &RegisterLayout) -> Result<LinearOperator> {
    let d = layout.total_dim();
    if d * d > MAX_AMPLITUDES {
        return Err(Error::DimensionMismatch(format!(
            "embedded matrix would need {} entries, budget is {MAX_AMPLITUDES}",
            d * d
        )));
    }
    let (sup_off, rest_off) = op.global_offsets(layout)?;
    let s = op.dim;
    let mut mat = vec![c(0.0, 0.0); d * d];
    for &base in &rest_off {
        for i in 0..s {
            for j in 0..s {
                mat[(base + sup_off[i]) * d + (base + sup_off[j])] = op.mat[i * s + j];
            }
        }
    }
    let all: Vec<(String, usize)> = layout.registers().to_vec();
    let mut out = LinearOperator::from_parts(all, mat)?;
    out.projector = op.projector;
    out.unitary = op.unitary;
    Ok(out)
}

/// Born probability ⟨ψ|Π|ψ⟩, clamped into [0,1] within tolerance.
pub fn born_probability(psi: &StateVector, projector: &LinearOperator) -> Result<f64> {
    if !projector.projector {
        return Err(Error::NotAProjector(
            "born_probability requires a projector-flagged operator".into(),
        ));
    }
    let proj = projector.apply(psi)?;
    clamp_probability(psi.inner(&proj).re, EPS)
}

/// Born probability tr[Πρ], clamped into [0,1] within tolerance.
pub fn born_probability_density(rho: &DensityOperator, projector: &LinearOperator) -> Result<f64> {
    if !projector.projector {
        return Err(Error::NotAProjector(
            "born_probability requires a projector-flagged operator".into(),
        ));
    }
    let projected = projector.apply_to_density(rho)?;
    clamp_probability(projected.trace().re, EPS)
}

/// Σ_K K ρ K† over a Kraus list.
pub fn apply_channel(kraus: &[LinearOperator], rho: &DensityOperator) -> Result<DensityOperator> {
    let mut acc: Option<DensityOperator> = None;
    for k in kraus {
        let term = k.apply_to_density(rho)?;
        acc = Some(match acc {
            None => term,
            Some(mut a) => {
                for (x, y) in a.mat.iter_mut().zip(&term.mat) {
                    *x += y;
                }
                a
            }
        });
    }
    acc.ok_or_else(|| Error::KrausIncomplete("empty Kraus list".into()))
}

/// Check Σ K†K = 1 within tolerance.
pub fn kraus_complete(kraus: &[LinearOperator]) -> Result<()> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::KrausIncomplete("empty Kraus list".into()))?;
    let d = first.dim;
    let mut acc = vec![c(0.0, 0.0); d * d];
    for k in kraus {
        if k.support != first.support {
            return Err(Error::DimensionMismatch(
                "Kraus operators must share one support".into(),
            ));
        }
        for i in 0..d {
            for j in 0..d {
                let mut v = c(0.0, 0.0);
                for m in 0..d {
                    v += k.mat[m * d + i].conj() * k.mat[m * d + j];
                }
                acc[i * d + j] += v;
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
            if (acc[i * d + j] - expect).norm() > 1e3 * EPS {
                return Err(Error::KrausIncomplete(format!(
                    "Σ K†K deviates from identity at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Copy unitary in an arbitrary orthonormal basis over the control
/// registers: |v_a⟩|m⟩ ↦ |v_a⟩|m + a mod d⟩. On memory |0⟩ this writes the
/// outcome index exactly; other memory states follow modular addition.
pub fn controlled_copy_unitary(
    layout: &RegisterLayout,
    basis: &[Vec<C64>],
    controls: &[String],
    target: &str,
) -> Result<LinearOperator> {
    let s = layout.subset_dim(controls)?;
    let d = layout.dim_of(target)?;
    if basis.len() != s {
        return Err(Error::BasisNotOrthonormal(format!(
            "basis has {} vectors, control space has dimension {s}",
            basis.len()
        )));
    }
    if d != s {
        return Err(Error::DimensionMismatch(format!(
            "target '{target}' has dim {d}, outcome count is {s}"
        )));
    }
    for v in basis {
        if v.len() != s {
            return Err(Error::BasisNotOrthonormal(format!(
                "basis vector length {} does not match control dimension {s}",
                v.len()
            )));
        }
    }
    for a in 0..s {
        for b in a..s {
            let ip: C64 = basis[a].iter().zip(&basis[b]).map(|(x, y)| x.conj() * y).sum();
            let expect = if a == b { c(1.0, 0.0) } else { c(0.0, 0.0) };
            if (ip - expect).norm() > 1e2 * EPS {
                return Err(Error::BasisNotOrthonormal(format!(
                    "⟨v_{a}|v_{b}⟩ = {ip}"
                )));
            }
        }
    }
    // U[(j, m'), (k, m)] = Σ_a v_a[j] conj(v_a[k]) δ_{m' = m+a mod d}
    let full = s * d;
    let mut mat = vec![c(0.0, 0.0); full * full];
    for a in 0..s {
        for j in 0..s {
            let vj = basis[a][j];
            if vj.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..s {
                let coef = vj * basis[a][k].conj();
                if coef.norm_sqr() == 0.0 {
                    continue;
                }
                for m in 0..d {
                    let mp = (m + a) % d;
                    mat[(j * d + mp) * full + (k * d + m)] += coef;
                }
            }
        }
    }
    let mut support: Vec<String> = controls.to_vec();
    support.push(target.to_string());
    LinearOperator::new(layout, &support, mat)?.into_unitary()
}

/// Rank-1 projector |v⟩⟨v| over the given support labels.
pub fn rank1_projector(
    layout: &RegisterLayout,
    support: &[String],
    v: &[C64],
) -> Result<LinearOperator> {
    let s = layout.subset_dim(support)?;
    if v.len() != s {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} does not match support dimension {s}",
            v.len()
        )));
    }
    let mut mat = vec![c(0.0, 0.0); s * s];
    for i in 0..s {
        for j in 0..s {
            mat[i * s + j] = v[i] * v[j].conj();
        }
    }
    LinearOperator::new(layout, support, mat)?.into_projector()
}

/// Clamp values within tolerance of [0,1] onto the interval; anything
/// further out is a numerical-integrity failure.
pub fn clamp_probability(p: f64, tol: f64) -> Result<f64> {
    if p < -tol || p > 1.0 + tol {
        return Err(Error::NumericalIntegrity(format!(
            "probability {p} outside [-tol, 1+tol]"
        )));
    }
    // + 0.0 turns a surviving -0.0 into +0.0 so reports never print "-0".
    Ok(p.clamp(0.0, 1.0) + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubits(labels: &[&str]) -> RegisterLayout {
        RegisterLayout::new(labels.iter().map(|l| (l.to_string(), 2)).collect()).unwrap()
    }

    fn comp_basis(d: usize) -> Vec<Vec<C64>> {
        (0..d)
            .map(|a| (0..d).map(|i| c(if i == a { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect()
    }

    #[test]
    fn layout_is_big_endian_in_declaration_order() {
        let l = RegisterLayout::new(vec![("A".into(), 2), ("B".into(), 3)]).unwrap();
        assert_eq!(l.total_dim(), 6);
        assert_eq!(l.flat(&[1, 2]), 5);
        assert_eq!(l.digit(5, 0), 1);
        assert_eq!(l.digit(5, 1), 2);
    }

    #[test]
    fn layout_rejects_duplicates_and_oversize() {
        assert!(RegisterLayout::new(vec![("A".into(), 2), ("A".into(), 2)]).is_err());
        let big = vec![("R".into(), MAX_AMPLITUDES + 1)];
        assert!(RegisterLayout::new(big).is_err());
    }

    #[test]
    fn embed_identity_is_identity() {
        let l = qubits(&["S", "M"]);
        let id = LinearOperator::new(&l, &["S".into()], vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let full = embed(&id, &l).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((full.matrix()[i * 4 + j] - c(expect, 0.0)).norm() < EPS);
            }
        }
    }

    #[test]
    fn embed_projector_on_first_qubit() {
        let l = qubits(&["A", "B"]);
        let p0 = rank1_projector(&l, &["A".into()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let full = embed(&p0, &l).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| full.matrix()[i * 4 + i].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn apply_x_on_second_qubit_flips_low_bit() {
        let l = qubits(&["A", "B"]);
        let x = LinearOperator::new(
            &l,
            &["B".into()],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let psi = StateVector::basis(l.clone(), &[0, 0]).unwrap();
        let out = x.apply(&psi).unwrap();
        assert!((out.amps[l.flat(&[0, 1])] - c(1.0, 0.0)).norm() < EPS);
    }

    #[test]
    fn born_probability_matches_eigenstate_and_mixture() {
        let l = qubits(&["Q"]);
        let p0 = rank1_projector(&l, &["Q".into()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let zero = StateVector::basis(l.clone(), &[0]).unwrap();
        assert!((born_probability(&zero, &p0).unwrap() - 1.0).abs() < EPS);

        let mixed = DensityOperator::from_matrix(
            l.clone(),
            vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        )
        .unwrap();
        assert!((born_probability_density(&mixed, &p0).unwrap() - 0.5).abs() < EPS);
    }

    #[test]
    fn born_rejects_unflagged_operators() {
        let l = qubits(&["Q"]);
        let not_proj = LinearOperator::new(
            &l,
            &["Q".into()],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let zero = StateVector::basis(l, &[0]).unwrap();
        assert!(matches!(
            born_probability(&zero, &not_proj),
            Err(Error::NotAProjector(_))
        ));
    }

    #[test]
    fn projection_leaves_unnormalized_branch() {
        let l = qubits(&["Q"]);
        let plus = StateVector::from_amplitudes(
            l.clone(),
            vec![c(std::f64::consts::FRAC_1_SQRT_2, 0.0), c(std::f64::consts::FRAC_1_SQRT_2, 0.0)],
        )
        .unwrap();
        let p0 = rank1_projector(&l, &["Q".into()], &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let out = p0.apply(&plus).unwrap();
        assert!((out.norm_sqr() - 0.5).abs() < EPS);
        assert!(!out.normalized);
    }

    #[test]
    fn copy_unitary_is_cnot_in_computational_basis() {
        let l = qubits(&["S", "M"]);
        let u = controlled_copy_unitary(&l, &comp_basis(2), &["S".into()], "M").unwrap();
        let expect = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((u.matrix()[i * 4 + j] - c(expect[i][j], 0.0)).norm() < EPS);
            }
        }
    }

    #[test]
    fn copy_unitary_entangles_superposition_with_blank_memory() {
        let l = qubits(&["S", "M"]);
        let alpha = c(0.6, 0.0);
        let beta = c(0.0, 0.8);
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[l.flat(&[0, 0])] = alpha;
        amps[l.flat(&[1, 0])] = beta;
        let psi = StateVector::from_amplitudes(l.clone(), amps).unwrap();
        let u = controlled_copy_unitary(&l, &comp_basis(2), &["S".into()], "M").unwrap();
        let out = u.apply(&psi).unwrap();
        assert!((out.amps[l.flat(&[0, 0])] - alpha).norm() < EPS);
        assert!((out.amps[l.flat(&[1, 1])] - beta).norm() < EPS);
        assert!(out.amps[l.flat(&[1, 0])].norm() < EPS);
    }

    #[test]
    fn copy_unitary_adds_modularly_on_nonzero_memory() {
        let l = RegisterLayout::new(vec![("S".into(), 3), ("M".into(), 3)]).unwrap();
        let u = controlled_copy_unitary(&l, &comp_basis(3), &["S".into()], "M").unwrap();
        let psi = StateVector::basis(l.clone(), &[2, 1]).unwrap();
        let out = u.apply(&psi).unwrap();
        // outcome 2 on memory 1: 1 + 2 = 0 mod 3
        assert!((out.amps[l.flat(&[2, 0])] - c(1.0, 0.0)).norm() < EPS);
    }

    #[test]
    fn identity_channel_preserves_density() {
        let l = qubits(&["Q"]);
        let psi = StateVector::from_amplitudes(
            l.clone(),
            vec![c(0.6, 0.0), c(0.8, 0.0)],
        )
        .unwrap();
        let rho = psi.to_density();
        let id = LinearOperator::new(
            &l,
            &["Q".into()],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let out = apply_channel(&[id], &rho).unwrap();
        for (a, b) in out.mat.iter().zip(&rho.mat) {
            assert!((a - b).norm() < EPS);
        }
        assert!((out.trace().re - 1.0).abs() < EPS);
    }

    #[test]
    fn kraus_completeness_detects_deficit() {
        let l = qubits(&["Q"]);
        let half = LinearOperator::new(
            &l,
            &["Q".into()],
            vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        )
        .unwrap();
        assert!(matches!(kraus_complete(&[half]), Err(Error::KrausIncomplete(_))));
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let l = qubits(&["S", "M"]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[l.flat(&[0, 0])] = c(s, 0.0);
        amps[l.flat(&[1, 1])] = c(s, 0.0);
        let bell = StateVector::from_amplitudes(l, amps).unwrap();
        let reduced = bell.to_density().partial_trace(&["S".into()]).unwrap();
        assert!((reduced.mat[0].re - 0.5).abs() < EPS);
        assert!((reduced.mat[3].re - 0.5).abs() < EPS);
        assert!(reduced.mat[1].norm() < EPS);
    }

    #[test]
    fn partial_trace_keeping_everything_is_identity() {
        let l = qubits(&["A", "B"]);
        let psi = StateVector::basis(l.clone(), &[1, 0]).unwrap();
        let rho = psi.to_density();
        let out = rho.partial_trace(&["A".into(), "B".into()]).unwrap();
        for (a, b) in out.mat.iter().zip(&rho.mat) {
            assert!((a - b).norm() < EPS);
        }
    }

    #[test]
    fn partial_trace_weights_follow_amplitudes() {
        let l = qubits(&["S", "M"]);
        let alpha = c(0.6, 0.0);
        let beta = c(0.8, 0.0);
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[l.flat(&[0, 0])] = alpha;
        amps[l.flat(&[1, 1])] = beta;
        let psi = StateVector::from_amplitudes(l, amps).unwrap();
        let reduced = psi.to_density().partial_trace(&["S".into()]).unwrap();
        assert!((reduced.mat[0].re - 0.36).abs() < EPS);
        assert!((reduced.mat[3].re - 0.64).abs() < EPS);
    }

    #[test]
    fn partial_trace_preserves_original_register_order() {
        let l = RegisterLayout::new(vec![("A".into(), 2), ("B".into(), 3), ("C".into(), 2)]).unwrap();
        let psi = StateVector::basis(l, &[1, 2, 0]).unwrap();
        // Ask for (C, A); the reduced layout must still come out as (A, C).
        let reduced = psi.to_density().partial_trace(&["C".into(), "A".into()]).unwrap();
        let labels: Vec<&str> = reduced.layout.labels().collect();
        assert_eq!(labels, vec!["A", "C"]);
        let idx = reduced.layout.flat(&[1, 0]);
        assert!((reduced.mat[idx * 4 + idx].re - 1.0).abs() < EPS);
    }

    #[test]
    fn clamping_is_tolerant_but_bounded() {
        assert_eq!(clamp_probability(-0.5e-9, EPS).unwrap(), 0.0);
        assert_eq!(clamp_probability(1.0 + 0.5e-9, EPS).unwrap(), 1.0);
        assert!(clamp_probability(-1e-6, EPS).is_err());
        assert!(clamp_probability(1.0 + 1e-6, EPS).is_err());
    }

    #[test]
    fn embed_respects_product_structure() {
        // embed(A)·embed(B) = embed(A·B) on a shared support.
        let l = qubits(&["A", "B"]);
        let x = LinearOperator::new(
            &l,
            &["A".into()],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let z = LinearOperator::new(
            &l,
            &["A".into()],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        )
        .unwrap();
        let lhs = embed(&x, &l).unwrap().compose(&embed(&z, &l).unwrap()).unwrap();
        let rhs = embed(&x.compose(&z).unwrap(), &l).unwrap();
        for (a, b) in lhs.matrix().iter().zip(rhs.matrix()) {
            assert!((a - b).norm() < EPS);
        }
    }

    #[test]
    fn density_constructor_rejects_non_hermitian() {
        let l = qubits(&["Q"]);
        let bad = vec![c(0.5, 0.0), c(0.3, 0.0), c(0.1, 0.0), c(0.5, 0.0)];
        assert!(DensityOperator::from_matrix(l, bad).is_err());
    }

    #[test]
    fn density_constructor_rejects_negative_eigenvalues() {
        let l = qubits(&["Q"]);
        let bad = vec![c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)];
        assert!(matches!(
            DensityOperator::from_matrix(l, bad),
            Err(Error::NumericalIntegrity(_))
        ));
    }
}
