//! Field containers: complex scalars on `S^3` and tangent 1-forms stored as
//! three scalar components along the orthonormal left-invariant frame.

use std::sync::Arc;

use num_complex::Complex64 as C;

use super::basis::Basis;
use crate::error::{Error, Result};
use crate::VOL_S3;

/// A band-limited complex scalar field. Holds both collocation samples and
/// harmonic coefficients, kept consistent: `values = inverse(coeffs)`.
#[derive(Clone)]
pub struct ScalarField {
    basis: Arc<Basis>,
    coeffs: Vec<C>,
    values: Vec<C>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ScalarField(K={}, |f|={:.3e})",
            self.basis.band_limit(),
            self.l2_norm_sq().sqrt()
        )
    }
}

impl ScalarField {
    pub fn zero(basis: Arc<Basis>) -> Self {
        let coeffs = vec![C::default(); basis.n_coeffs()];
        let values = vec![C::default(); basis.n_grid()];
        Self {
            basis,
            coeffs,
            values,
        }
    }

    pub fn constant(basis: Arc<Basis>, value: C) -> Self {
        let mut coeffs = vec![C::default(); basis.n_coeffs()];
        coeffs[0] = value * VOL_S3.sqrt();
        let values = vec![value; basis.n_grid()];
        Self {
            basis,
            coeffs,
            values,
        }
    }

    pub fn from_coeffs(basis: Arc<Basis>, coeffs: Vec<C>) -> Self {
        assert_eq!(coeffs.len(), basis.n_coeffs());
        let values = basis.inverse(&coeffs);
        Self {
            basis,
            coeffs,
            values,
        }
    }

    /// Projects arbitrary grid samples onto the retained band; the stored
    /// samples are re-synthesised from the projected coefficients.
    pub fn from_grid(basis: Arc<Basis>, values: Vec<C>) -> Self {
        assert_eq!(values.len(), basis.n_grid());
        let coeffs = basis.forward(&values);
        let values = basis.inverse(&coeffs);
        Self {
            basis,
            coeffs,
            values,
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    pub fn same_basis(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || self.basis.spec == other.basis.spec
    }

    pub fn check_same_basis(&self, other: &ScalarField) -> Result<()> {
        if self.same_basis(other) {
            Ok(())
        } else {
            Err(Error::Config(
                "fields discretised on different bases".into(),
            ))
        }
    }

    pub fn integral(&self) -> C {
        self.coeffs[0] * VOL_S3.sqrt()
    }

    pub fn mean(&self) -> C {
        self.coeffs[0] / VOL_S3.sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        // conjugation of grid samples stays band-limited
        let values = self.values.iter().map(|v| v.conj()).collect();
        Self::from_grid(self.basis.clone(), values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(C::new(1.0, 0.0), other, C::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(C::new(1.0, 0.0), other, C::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        let values = self.values.iter().map(|v| v * s).collect();
        Self {
            basis: self.basis.clone(),
            coeffs,
            values,
        }
    }

    pub fn lin_comb(&self, a: C, other: &Self, b: C) -> Self {
        debug_assert!(self.same_basis(other));
        let coeffs = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self {
            basis: self.basis.clone(),
            coeffs,
            values,
        }
    }

    /// Galerkin (projected) pointwise product.
    pub fn mul_projected(&self, other: &Self) -> Self {
        debug_assert!(self.same_basis(other));
        let prod: Vec<C> = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .collect();
        Self::from_grid(self.basis.clone(), prod)
    }

    /// Subtract the mean so the result integrates to zero.
    pub fn mean_subtracted(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = C::default();
        Self::from_coeffs(self.basis.clone(), coeffs)
    }

    /// Max imaginary part over the grid; diagnostic for nominally real fields.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// A tangent 1-form `A = sum_i a_i sigma^i` in the dual of the orthonormal
/// left-invariant frame; `|A|^2 = sum_i a_i^2` pointwise.
#[derive(Clone)]
pub struct TangentOneForm {
    pub comp: [ScalarField; 3],
}

impl std::fmt::Debug for TangentOneForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TangentOneForm(|A|^2={:.3e})", self.l2_norm_sq())
    }
}

impl TangentOneForm {
    pub fn zero(basis: Arc<Basis>) -> Self {
        Self {
            comp: [
                ScalarField::zero(basis.clone()),
                ScalarField::zero(basis.clone()),
                ScalarField::zero(basis),
            ],
        }
    }

    pub fn from_components(comp: [ScalarField; 3]) -> Self {
        Self { comp }
    }

    /// The left-invariant coframe element `sigma^i` (frame components are
    /// the standard unit vector), scaled by `amplitude`.
    pub fn sigma(basis: Arc<Basis>, i: usize, amplitude: f64) -> Self {
        let mut comp = [
            ScalarField::zero(basis.clone()),
            ScalarField::zero(basis.clone()),
            ScalarField::zero(basis.clone()),
        ];
        comp[i] = ScalarField::constant(basis, C::new(amplitude, 0.0));
        Self { comp }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.comp[0].basis()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            comp: [
                self.comp[0].add(&other.comp[0]),
                self.comp[1].add(&other.comp[1]),
                self.comp[2].add(&other.comp[2]),
            ],
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            comp: [
                self.comp[0].sub(&other.comp[0]),
                self.comp[1].sub(&other.comp[1]),
                self.comp[2].sub(&other.comp[2]),
            ],
        }
    }

    pub fn scale(&self, s: C) -> Self {
        Self {
            comp: [
                self.comp[0].scale(s),
                self.comp[1].scale(s),
                self.comp[2].scale(s),
            ],
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.comp.iter().map(|c| c.l2_norm_sq()).sum()
    }

    /// Pointwise squared frame norm on the grid.
    pub fn norm_sq_grid(&self) -> Vec<f64> {
        let n = self.comp[0].values().len();
        let mut out = vec![0.0; n];
        for c in &self.comp {
            for (o, v) in out.iter_mut().zip(c.values().iter()) {
                *o += v.norm_sqr();
            }
        }
        out
    }

    /// Pointwise pairing `sum_i a_i b_i` (no conjugation) on the grid.
    pub fn dot_grid(&self, other: &Self) -> Vec<C> {
        let n = self.comp[0].values().len();
        let mut out = vec![C::default(); n];
        for (a, b) in self.comp.iter().zip(other.comp.iter()) {
            for ((o, x), y) in out.iter_mut().zip(a.values().iter()).zip(b.values().iter()) {
                *o += x * y;
            }
        }
        out
    }

    pub fn max_imag(&self) -> f64 {
        self.comp.iter().map(|c| c.max_imag()).fold(0.0, f64::max)
    }
}
