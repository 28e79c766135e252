//! Collocation grid, quadrature and spectral transforms on `S^3 = SU(2)`.
//!
//! Scalar fields are expanded in the orthonormalised matrix-element basis
//! `e^j_{mm'} = sqrt((2j+1)/Vol) D^j_{mm'}(alpha, beta, gamma)` with
//! `D^j_{mm'} = exp(-i m alpha) d^j_{mm'}(beta) exp(-i m' gamma)` and
//! `2j = 0..=K`. A field of harmonic degree `k` on the round sphere is the
//! block `2j = k`, with scalar Laplacian eigenvalue `-k(k+2)`.
//!
//! The grid is uniform in `alpha` over `[0, 2pi)`, uniform in `gamma` over
//! `[0, 4pi)` and Gauss-Legendre in `cos beta`. Default sizes integrate
//! products of four band-limited fields exactly, so pointwise products
//! followed by analysis are true Galerkin projections.

use std::sync::Arc;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::wigner;
use crate::error::{Error, Result};
use crate::par;
use crate::VOL_S3;

/// Handedness of the Hodge star; flips the sign of `curl`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Standard,
    Reversed,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Standard => 1.0,
            Orientation::Reversed => -1.0,
        }
    }
}

/// User-facing description of the discretisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Retain scalar harmonics of degree `k <= band_limit`.
    pub band_limit: usize,
    /// Collocation sizes `(n_alpha, n_beta, n_gamma)`.
    pub grid_shape: [usize; 3],
    pub orientation: Orientation,
    /// Structure-constant scale of the orthonormal left-invariant frame,
    /// `[X_i, X_j] = c_f eps_{ijk} X_k`. Orthonormality on the unit round
    /// sphere fixes `c_f = 2`.
    pub frame_normalization: f64,
}

impl BasisSpec {
    /// Default grid for a given band limit: exact quadrature for quartic
    /// products of retained harmonics.
    pub fn with_band_limit(k: usize) -> Self {
        Self {
            band_limit: k,
            grid_shape: [2 * k + 1, k + 1, 4 * k + 2],
            orientation: Orientation::Standard,
            frame_normalization: 2.0,
        }
    }
}

/// Frame axis label for the left-invariant frame `{X_1, X_2, X_3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    pub fn from_index(i: usize) -> Result<Axis> {
        match i {
            1 => Ok(Axis::X1),
            2 => Ok(Axis::X2),
            3 => Ok(Axis::X3),
            _ => Err(Error::Domain(format!("frame axis must be 1..=3, got {i}"))),
        }
    }
}

struct Block {
    twoj: usize,
    offset: usize,
    /// Ladder coefficients indexed by the column (right index).
    cp: Vec<f64>,
    cm: Vec<f64>,
}

/// Precomputed grid, quadrature and transform tables. Shared behind an `Arc`
/// by every field; all operations are pure.
pub struct Basis {
    pub spec: BasisSpec,
    blocks: Vec<Block>,
    n_coeffs: usize,
    /// Gauss-Legendre weights on the cos-beta nodes.
    beta_weights: Vec<f64>,
    beta_angles: Vec<f64>,
    /// d^j tables on the beta nodes: dtab[twoj][(a*(twoj+1)+b)*n_beta + q].
    dtab: Vec<Vec<f64>>,
    /// Forward/backward azimuthal phase tables.
    ef_alpha: Vec<C>,
    eb_alpha: Vec<C>,
    ef_gamma: Vec<C>,
    eb_gamma: Vec<C>,
    /// Quadrature weight of each grid point.
    quad_w: Vec<f64>,
    /// Divergence-free projector; calibrated at construction.
    pub(crate) projector: Option<super::project::DivFreeProjector>,
}

impl std::fmt::Debug for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Basis")
            .field("spec", &self.spec)
            .field("n_coeffs", &self.n_coeffs)
            .finish()
    }
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            if n == 1 {
                p1 = x;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Result<Arc<Basis>> {
        let k = spec.band_limit;
        if k == 0 {
            return Err(Error::Config("band limit must be >= 1".into()));
        }
        if (spec.frame_normalization - 2.0).abs() > 1e-12 {
            return Err(Error::Config(
                "orthonormal left-invariant frame on the unit sphere requires c_f = 2".into(),
            ));
        }
        let [na, nb, ng] = spec.grid_shape;
        // Minimum sizes for exact pairwise products; defaults exceed them.
        if na < k + 1 || nb < (k + 1).div_ceil(2) || ng < 2 * k + 1 || ng % 2 != 0 {
            return Err(Error::Config(format!(
                "grid shape {:?} too small for band limit {k} (need n_alpha > K, 2 n_beta - 1 >= K, n_gamma even > 2K)",
                spec.grid_shape
            )));
        }

        let mut blocks = Vec::with_capacity(k + 1);
        let mut offset = 0;
        for twoj in 0..=k {
            let (cp, cm) = wigner::ladder_coeffs(twoj);
            blocks.push(Block {
                twoj,
                offset,
                cp,
                cm,
            });
            offset += (twoj + 1) * (twoj + 1);
        }
        let n_coeffs = offset;

        let (beta_nodes, beta_weights) = gauss_legendre(nb);
        let beta_angles: Vec<f64> = beta_nodes.iter().map(|x| x.acos()).collect();
        let dtab: Vec<Vec<f64>> = (0..=k)
            .map(|twoj| {
                let n = twoj + 1;
                let mut tab = vec![0.0; n * n * nb];
                for (q, &beta) in beta_angles.iter().enumerate() {
                    let d = wigner::d_matrix(twoj, beta);
                    for a in 0..n {
                        for b in 0..n {
                            tab[(a * n + b) * nb + q] = d[a * n + b];
                        }
                    }
                }
                tab
            })
            .collect();

        let nm = 2 * k + 1;
        let mut ef_alpha = vec![C::default(); nm * na];
        let mut eb_alpha = vec![C::default(); nm * na];
        let w_alpha = 2.0 * std::f64::consts::PI / na as f64;
        for m_idx in 0..nm {
            let twom = m_idx as f64 - k as f64;
            for p in 0..na {
                let phase = twom * std::f64::consts::PI * p as f64 / na as f64;
                ef_alpha[m_idx * na + p] = C::from_polar(w_alpha, phase);
                eb_alpha[m_idx * na + p] = C::from_polar(1.0, -phase);
            }
        }
        let mut ef_gamma = vec![C::default(); nm * ng];
        let mut eb_gamma = vec![C::default(); nm * ng];
        let w_gamma = 4.0 * std::f64::consts::PI / ng as f64;
        for n_idx in 0..nm {
            let twon = n_idx as f64 - k as f64;
            for r in 0..ng {
                let phase = twon * 2.0 * std::f64::consts::PI * r as f64 / ng as f64;
                ef_gamma[n_idx * ng + r] = C::from_polar(w_gamma, phase);
                eb_gamma[n_idx * ng + r] = C::from_polar(1.0, -phase);
            }
        }

        let mut quad_w = vec![0.0; na * nb * ng];
        for p in 0..na {
            for (q, &wq) in beta_weights.iter().enumerate() {
                for r in 0..ng {
                    quad_w[(p * nb + q) * ng + r] = w_alpha * w_gamma * wq / 8.0;
                }
            }
        }

        let mut basis = Basis {
            spec,
            blocks,
            n_coeffs,
            beta_weights,
            beta_angles,
            dtab,
            ef_alpha,
            eb_alpha,
            ef_gamma,
            eb_gamma,
            quad_w,
            projector: None,
        };
        let projector = super::project::DivFreeProjector::calibrate(&basis)?;
        basis.projector = Some(projector);
        Ok(Arc::new(basis))
    }

    pub fn band_limit(&self) -> usize {
        self.spec.band_limit
    }

    pub fn n_coeffs(&self) -> usize {
        self.n_coeffs
    }

    pub fn n_grid(&self) -> usize {
        self.quad_w.len()
    }

    pub fn grid_shape(&self) -> [usize; 3] {
        self.spec.grid_shape
    }

    /// Calibrated resolvent pair `(c0, s0)` of the divergence-free projector.
    pub fn projector_constants(&self) -> (f64, f64) {
        let p = self
            .projector
            .as_ref()
            .expect("projector calibrated at construction");
        (p.c0, p.s0)
    }

    fn norm_j(&self, twoj: usize) -> f64 {
        ((twoj as f64 + 1.0) / VOL_S3).sqrt()
    }

    pub(crate) fn blocks_iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.blocks.iter().map(|b| (b.twoj, b.offset))
    }

    pub fn block_offset(&self, twoj: usize) -> usize {
        self.blocks[twoj].offset
    }

    /// Scalar Laplacian eigenvalue `-k(k+2)` of a degree-k block.
    pub fn laplacian_eigenvalue(&self, twoj: usize) -> f64 {
        -((twoj * (twoj + 2)) as f64)
    }

    // ------------------------------------------------------------------
    // transforms
    // ------------------------------------------------------------------

    /// Analysis: grid samples -> orthonormal-basis coefficients (projection
    /// onto the retained band).
    pub fn forward(&self, values: &[C]) -> Vec<C> {
        let [na, nb, ng] = self.spec.grid_shape;
        assert_eq!(values.len(), na * nb * ng);
        let k = self.spec.band_limit;
        let nm = 2 * k + 1;
        let plane = nb * ng;

        // F1[m_idx, q, r] = sum_p v[p,q,r] exp(+i m alpha_p) w_alpha
        let mut f1 = vec![C::default(); nm * plane];
        par::for_each_chunk_mut(&mut f1, plane, |m_idx, out| {
            for p in 0..na {
                let e = self.ef_alpha[m_idx * na + p];
                let src = &values[p * plane..(p + 1) * plane];
                for (o, v) in out.iter_mut().zip(src.iter()) {
                    *o += e * v;
                }
            }
        });

        // F2[m_idx, q, n_idx] = sum_r F1[m_idx, q, r] exp(+i n gamma_r) w_gamma;
        // only parity-matched (m, n) pairs occur in the retained blocks
        let mut f2 = vec![C::default(); nm * nb * nm];
        par::for_each_chunk_mut(&mut f2, nb * nm, |m_idx, out| {
            for q in 0..nb {
                let row = &f1[(m_idx * nb + q) * ng..(m_idx * nb + q + 1) * ng];
                for n_idx in (m_idx % 2..nm).step_by(2) {
                    let eg = &self.ef_gamma[n_idx * ng..(n_idx + 1) * ng];
                    let mut acc = C::default();
                    for (v, e) in row.iter().zip(eg.iter()) {
                        acc += v * e;
                    }
                    out[q * nm + n_idx] = acc;
                }
            }
        });

        // beta contraction against the d tables
        let mut coeffs = vec![C::default(); self.n_coeffs];
        for block in &self.blocks {
            let twoj = block.twoj;
            let n = twoj + 1;
            let scale = self.norm_j(twoj) * 0.125;
            let tab = &self.dtab[twoj];
            for a in 0..n {
                let m_idx = k + twoj - 2 * a;
                for b in 0..n {
                    let n_idx = k + twoj - 2 * b;
                    let drow = &tab[(a * n + b) * nb..(a * n + b + 1) * nb];
                    let mut acc = C::default();
                    for q in 0..nb {
                        acc += f2[(m_idx * nb + q) * nm + n_idx] * (self.beta_weights[q] * drow[q]);
                    }
                    coeffs[block.offset + a * n + b] = acc * scale;
                }
            }
        }
        coeffs
    }

    /// Synthesis: coefficients -> grid samples.
    pub fn inverse(&self, coeffs: &[C]) -> Vec<C> {
        let [na, nb, ng] = self.spec.grid_shape;
        assert_eq!(coeffs.len(), self.n_coeffs);
        let k = self.spec.band_limit;
        let nm = 2 * k + 1;

        let mut h = vec![C::default(); nm * nb * nm];
        for block in &self.blocks {
            let twoj = block.twoj;
            let n = twoj + 1;
            let scale = self.norm_j(twoj);
            let tab = &self.dtab[twoj];
            for a in 0..n {
                let m_idx = k + twoj - 2 * a;
                for b in 0..n {
                    let n_idx = k + twoj - 2 * b;
                    let c = coeffs[block.offset + a * n + b] * scale;
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    let drow = &tab[(a * n + b) * nb..(a * n + b + 1) * nb];
                    for q in 0..nb {
                        h[(m_idx * nb + q) * nm + n_idx] += c * drow[q];
                    }
                }
            }
        }

        // G[m_idx, q, r] = sum_n H[m_idx, q, n] exp(-i n gamma_r)
        let mut g = vec![C::default(); nm * nb * ng];
        par::for_each_chunk_mut(&mut g, nb * ng, |m_idx, out| {
            for q in 0..nb {
                let hrow = &h[(m_idx * nb + q) * nm..(m_idx * nb + q + 1) * nm];
                let dst = &mut out[q * ng..(q + 1) * ng];
                for (n_idx, hv) in hrow.iter().enumerate() {
                    if hv.norm_sqr() == 0.0 {
                        continue;
                    }
                    let eg = &self.eb_gamma[n_idx * ng..(n_idx + 1) * ng];
                    for (d, e) in dst.iter_mut().zip(eg.iter()) {
                        *d += hv * e;
                    }
                }
            }
        });

        let plane = nb * ng;
        let mut values = vec![C::default(); na * plane];
        par::for_each_chunk_mut(&mut values, plane, |p, out| {
            for m_idx in 0..nm {
                let e = self.eb_alpha[m_idx * na + p];
                let src = &g[m_idx * plane..(m_idx + 1) * plane];
                for (o, v) in out.iter_mut().zip(src.iter()) {
                    *o += e * v;
                }
            }
        });
        values
    }

    // ------------------------------------------------------------------
    // quadrature and pointwise data
    // ------------------------------------------------------------------

    /// Quadrature of grid samples over the sphere.
    pub fn integrate_grid(&self, values: &[C]) -> C {
        let n = values.len();
        let block = 1024.max(n / 64);
        par::map_fold_blocks(
            n.div_ceil(block),
            |i| {
                let lo = i * block;
                let hi = ((i + 1) * block).min(n);
                let mut acc = C::default();
                for idx in lo..hi {
                    acc += values[idx] * self.quad_w[idx];
                }
                acc
            },
            C::default(),
            |a, b| a + b,
        )
    }

    /// Euler angles of the grid point `(p, q, r)`.
    pub fn grid_euler(&self, p: usize, q: usize, r: usize) -> (f64, f64, f64) {
        let [na, _, ng] = self.spec.grid_shape;
        (
            2.0 * std::f64::consts::PI * p as f64 / na as f64,
            self.beta_angles[q],
            4.0 * std::f64::consts::PI * r as f64 / ng as f64,
        )
    }

    /// Apply `f(flat_index, alpha, beta, gamma)` over the grid in layout order.
    pub fn for_each_grid_point(&self, mut f: impl FnMut(usize, f64, f64, f64)) {
        let [na, nb, ng] = self.spec.grid_shape;
        let mut idx = 0;
        for p in 0..na {
            let alpha = 2.0 * std::f64::consts::PI * p as f64 / na as f64;
            for q in 0..nb {
                let beta = self.beta_angles[q];
                for r in 0..ng {
                    let gamma = 4.0 * std::f64::consts::PI * r as f64 / ng as f64;
                    f(idx, alpha, beta, gamma);
                    idx += 1;
                }
            }
        }
    }

    /// Hyperspherical polar angle `zeta` at every grid point
    /// (`cos zeta = cos(beta/2) cos((alpha+gamma)/2)`).
    pub fn grid_zeta(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_grid()];
        self.for_each_grid_point(|idx, alpha, beta, gamma| {
            let w = (beta / 2.0).cos() * ((alpha + gamma) / 2.0).cos();
            out[idx] = w.clamp(-1.0, 1.0).acos();
        });
        out
    }

    /// Orthonormal basis functions evaluated at one point; `field value =
    /// coeffs . point_values` (no conjugation).
    pub fn basis_values_at(&self, alpha: f64, beta: f64, gamma: f64) -> Vec<C> {
        let mut vals = vec![C::default(); self.n_coeffs];
        for block in &self.blocks {
            let twoj = block.twoj;
            let n = twoj + 1;
            let d = wigner::d_matrix(twoj, beta);
            let scale = self.norm_j(twoj);
            for a in 0..n {
                let twom = twoj as f64 - 2.0 * a as f64;
                let ea = C::from_polar(1.0, -twom / 2.0 * alpha);
                for b in 0..n {
                    let twon = twoj as f64 - 2.0 * b as f64;
                    let eg = C::from_polar(1.0, -twon / 2.0 * gamma);
                    vals[block.offset + a * n + b] = ea * eg * (scale * d[a * n + b]);
                }
            }
        }
        vals
    }

    /// Evaluate a coefficient vector at one precomputed point.
    pub fn eval_with(&self, coeffs: &[C], point_vals: &[C]) -> C {
        coeffs
            .iter()
            .zip(point_vals.iter())
            .map(|(c, v)| c * v)
            .sum()
    }

    pub fn eval_at_euler(&self, coeffs: &[C], alpha: f64, beta: f64, gamma: f64) -> C {
        let vals = self.basis_values_at(alpha, beta, gamma);
        self.eval_with(coeffs, &vals)
    }

    // ------------------------------------------------------------------
    // frame derivatives
    // ------------------------------------------------------------------

    /// Frame derivative along `X_i` acting on coefficients.
    pub fn frame_derivative_coeffs(&self, coeffs: &[C], axis: Axis) -> Vec<C> {
        let mut out = vec![C::default(); self.n_coeffs];
        self.frame_derivative_into(coeffs, axis, &mut out);
        out
    }

    pub fn frame_derivative_into(&self, coeffs: &[C], axis: Axis, out: &mut [C]) {
        let i = C::new(0.0, 1.0);
        for block in &self.blocks {
            let n = block.twoj + 1;
            let off = block.offset;
            for a in 0..n {
                let row = &coeffs[off + a * n..off + (a + 1) * n];
                let orow = &mut out[off + a * n..off + (a + 1) * n];
                match axis {
                    Axis::X1 => {
                        for b in 0..n {
                            let mut acc = C::default();
                            if b >= 1 {
                                acc += row[b - 1] * block.cp[b];
                            }
                            if b + 1 < n {
                                acc += row[b + 1] * block.cm[b];
                            }
                            orow[b] = -i * acc;
                        }
                    }
                    Axis::X2 => {
                        for b in 0..n {
                            let mut acc = C::default();
                            if b >= 1 {
                                acc += row[b - 1] * block.cp[b];
                            }
                            if b + 1 < n {
                                acc -= row[b + 1] * block.cm[b];
                            }
                            orow[b] = acc;
                        }
                    }
                    Axis::X3 => {
                        for b in 0..n {
                            let twom = block.twoj as f64 - 2.0 * b as f64;
                            orow[b] = row[b] * C::new(0.0, -twom);
                        }
                    }
                }
            }
        }
    }

    /// Scalar Laplacian on coefficients (negative spectrum).
    pub fn laplacian_coeffs(&self, coeffs: &[C]) -> Vec<C> {
        let mut out = coeffs.to_vec();
        for block in &self.blocks {
            let lam = self.laplacian_eigenvalue(block.twoj);
            let n = block.twoj + 1;
            for v in &mut out[block.offset..block.offset + n * n] {
                *v *= lam;
            }
        }
        out
    }
}

/// Euler angles `(alpha in [0,2pi), beta in [0,pi], gamma in [0,4pi))` of a
/// unit quaternion `(w, x, y, z)`.
pub fn euler_from_quaternion(w: f64, x: f64, y: f64, z: f64) -> (f64, f64, f64) {
    let cb2 = w.hypot(z);
    let sb2 = x.hypot(y);
    let beta = 2.0 * sb2.atan2(cb2);
    let half_sum = if cb2 > 1e-300 { z.atan2(w) } else { 0.0 };
    let half_diff = if sb2 > 1e-300 { (-x).atan2(y) } else { 0.0 };
    let mut alpha = half_sum + half_diff;
    let mut gamma = half_sum - half_diff;
    // keep (alpha + 2pi, gamma - 2pi) pairings so the group element is fixed
    if alpha < 0.0 {
        alpha += 2.0 * std::f64::consts::PI;
        gamma -= 2.0 * std::f64::consts::PI;
    }
    while gamma < 0.0 {
        gamma += 4.0 * std::f64::consts::PI;
    }
    while gamma >= 4.0 * std::f64::consts::PI {
        gamma -= 4.0 * std::f64::consts::PI;
    }
    (alpha, beta, gamma)
}

/// Unit quaternion of hyperspherical coordinates
/// `(zeta, theta, phi)`: `w = cos zeta`, `(x,y,z) = sin zeta n(theta, phi)`
/// with `n = (sin theta cos phi, sin theta sin phi, cos theta)`.
pub fn quaternion_from_hyperspherical(zeta: f64, theta: f64, phi: f64) -> [f64; 4] {
    let sz = zeta.sin();
    [
        zeta.cos(),
        sz * theta.sin() * phi.cos(),
        sz * theta.sin() * phi.sin(),
        sz * theta.cos(),
    ]
}

pub fn euler_from_hyperspherical(zeta: f64, theta: f64, phi: f64) -> (f64, f64, f64) {
    let [w, x, y, z] = quaternion_from_hyperspherical(zeta, theta, phi);
    euler_from_quaternion(w, x, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s3::field::ScalarField;

    fn test_basis(k: usize) -> Arc<Basis> {
        Basis::new(BasisSpec::with_band_limit(k)).unwrap()
    }

    #[test]
    fn transform_round_trip_is_identity() {
        let basis = test_basis(5);
        let mut seed = 42u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let coeffs: Vec<C> = (0..basis.n_coeffs())
            .map(|_| C::new(next(), next()))
            .collect();
        let values = basis.inverse(&coeffs);
        let back = basis.forward(&values);
        let err: f64 = coeffs
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm < 1e-12, "round trip error {err:e}");
    }

    #[test]
    fn basis_gram_is_identity() {
        let basis = test_basis(4);
        let n = basis.n_coeffs();
        for i in (0..n).step_by(7) {
            let mut c = vec![C::default(); n];
            c[i] = C::new(1.0, 0.0);
            let vals = basis.inverse(&c);
            let g = basis.forward(&vals);
            for (l, gv) in g.iter().enumerate() {
                let want = if l == i { 1.0 } else { 0.0 };
                assert!(
                    (gv - C::new(want, 0.0)).norm() < 1e-12,
                    "gram({i},{l}) = {gv}"
                );
            }
        }
    }

    #[test]
    fn quadrature_exact_on_pair_products() {
        // <e_i, e_l> computed on the grid equals delta_il; spot-check pairs
        let basis = test_basis(4);
        let n = basis.n_coeffs();
        let pick = [0usize, 1, 3, 8, 15, 24, 33, n - 1];
        let fields: Vec<Vec<C>> = pick
            .iter()
            .map(|&i| {
                let mut c = vec![C::default(); n];
                c[i] = C::new(1.0, 0.0);
                basis.inverse(&c)
            })
            .collect();
        for (ii, vi) in pick.iter().zip(fields.iter()) {
            for (ll, vl) in pick.iter().zip(fields.iter()) {
                let prod: Vec<C> = vi
                    .iter()
                    .zip(vl.iter())
                    .map(|(a, b)| a.conj() * b)
                    .collect();
                let got = basis.integrate_grid(&prod);
                let want = if ii == ll { 1.0 } else { 0.0 };
                assert!((got - C::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn volume_and_cos_zeta_norms() {
        let basis = test_basis(4);
        let one = vec![C::new(1.0, 0.0); basis.n_grid()];
        let vol = basis.integrate_grid(&one);
        assert!((vol.re - VOL_S3).abs() < 1e-12);
        assert!(vol.im.abs() < 1e-14);

        let zeta = basis.grid_zeta();
        let cz: Vec<C> = zeta.iter().map(|&z| C::new(z.cos(), 0.0)).collect();
        let f = ScalarField::from_grid(basis.clone(), cz);
        // degree-1 field, so the band-limited projection is exact
        let norm2 = f.l2_norm_sq();
        assert!((norm2 - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn frame_fields_satisfy_su2_bracket() {
        let basis = test_basis(4);
        let mut seed = 7u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let c: Vec<C> = (0..basis.n_coeffs())
            .map(|_| C::new(next(), next()))
            .collect();
        let x1 = basis.frame_derivative_coeffs(&c, Axis::X1);
        let x2 = basis.frame_derivative_coeffs(&c, Axis::X2);
        let x12 = basis.frame_derivative_coeffs(&x2, Axis::X1);
        let x21 = basis.frame_derivative_coeffs(&x1, Axis::X2);
        let x3 = basis.frame_derivative_coeffs(&c, Axis::X3);
        for i in 0..c.len() {
            let bracket = x12[i] - x21[i];
            assert!(
                (bracket - 2.0 * x3[i]).norm() < 1e-10,
                "bracket mismatch at {i}"
            );
        }
    }

    #[test]
    fn casimir_equals_scalar_laplacian() {
        let basis = test_basis(5);
        let mut seed = 11u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let c: Vec<C> = (0..basis.n_coeffs())
            .map(|_| C::new(next(), next()))
            .collect();
        let mut casimir = vec![C::default(); c.len()];
        for axis in Axis::ALL {
            let d = basis.frame_derivative_coeffs(&c, axis);
            let dd = basis.frame_derivative_coeffs(&d, axis);
            for (acc, v) in casimir.iter_mut().zip(dd.iter()) {
                *acc += v;
            }
        }
        let lap = basis.laplacian_coeffs(&c);
        for i in 0..c.len() {
            assert!((casimir[i] - lap[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn euler_quaternion_round_trip() {
        let basis = test_basis(3);
        basis.for_each_grid_point(|_, alpha, beta, gamma| {
            let (cb2, sb2) = ((beta / 2.0).cos(), (beta / 2.0).sin());
            let w = cb2 * ((alpha + gamma) / 2.0).cos();
            let z = cb2 * ((alpha + gamma) / 2.0).sin();
            let y = sb2 * ((alpha - gamma) / 2.0).cos();
            let x = -sb2 * ((alpha - gamma) / 2.0).sin();
            let (a2, b2, g2) = euler_from_quaternion(w, x, y, z);
            // compare as group elements through a basis function value
            let vals1 = basis.basis_values_at(alpha, beta, gamma);
            let vals2 = basis.basis_values_at(a2, b2, g2);
            for (v1, v2) in vals1.iter().zip(vals2.iter()) {
                assert!((v1 - v2).norm() < 1e-10);
            }
        });
    }

    #[test]
    fn pointwise_eval_matches_synthesis() {
        let basis = test_basis(3);
        let mut seed = 5u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let c: Vec<C> = (0..basis.n_coeffs())
            .map(|_| C::new(next(), next()))
            .collect();
        let values = basis.inverse(&c);
        let [_, nb, ng] = basis.grid_shape();
        for &(p, q, r) in &[(0usize, 0usize, 0usize), (2, 1, 5), (4, nb - 1, ng - 1)] {
            let (alpha, beta, gamma) = basis.grid_euler(p, q, r);
            let direct = basis.eval_at_euler(&c, alpha, beta, gamma);
            let grid = values[(p * nb + q) * ng + r];
            assert!((direct - grid).norm() < 1e-11);
        }
    }
}
