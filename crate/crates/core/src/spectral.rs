//! Fourier calculus on the periodic box.
//!
//! Coefficients are normalised so that `f(x) = Σ_k c_k e^{i k·x}`; the zero
//! coefficient is the spatial mean and `inverse(forward(f)) == f` up to
//! round-off. First derivatives drop the Nyquist frequency so that real fields
//! stay real; the Laplacian symbol keeps the full `|k|²`.
//!
//! On the torus the Stokes eigenfunctions are divergence-free Fourier modes,
//! so the Stokes operator is `-Δ` restricted to solenoidal, mean-free fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, TensorField, VectorField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Normalised Fourier coefficients of a real field, same flat layout as the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `L²` norm through Parseval, `|Ω|^{1/2} (Σ |c_k|²)^{1/2}`.
    pub fn norm_l2(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(Complex64::norm_sqr).sum::<f64>()).sqrt()
    }
}

/// Precomputed FFT plans and wavenumber tables for one grid.
///
/// Read-only after construction and shareable across threads.
#[derive(Clone)]
pub struct SpectralWorkspace {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    derivative_wavenumbers: Vec<f64>,
    keep_1d: Vec<bool>,
    ksq: Vec<f64>,
    derivative_ksq: Vec<f64>,
    dealias_mask: Vec<bool>,
}

impl fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralWorkspace")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SpectralWorkspace {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);

        let scale = 2.0 * PI / grid.length_per_axis();
        let freq = |i: usize| -> i64 {
            if i <= n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let wavenumbers: Vec<f64> = (0..n).map(|i| freq(i) as f64 * scale).collect();
        let derivative_wavenumbers: Vec<f64> = (0..n)
            .map(|i| if i == n / 2 { 0.0 } else { wavenumbers[i] })
            .collect();
        // two-thirds rule: keep |index| <= n/3
        let keep_1d: Vec<bool> = (0..n)
            .map(|i| 3 * freq(i).unsigned_abs() as usize <= n)
            .collect();

        let len = grid.len();
        let mut ksq = vec![0.0; len];
        let mut derivative_ksq = vec![0.0; len];
        let mut dealias_mask = vec![true; len];
        for m in 0..len {
            for axis in 0..grid.dim() {
                let idx = grid.axis_index(m, axis);
                ksq[m] += wavenumbers[idx].powi(2);
                derivative_ksq[m] += derivative_wavenumbers[idx].powi(2);
                dealias_mask[m] &= keep_1d[idx];
            }
        }

        Self {
            grid,
            forward,
            backward,
            wavenumbers,
            derivative_wavenumbers,
            keep_1d,
            ksq,
            derivative_ksq,
            dealias_mask,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Smallest nonzero eigenvalue of `-Δ`, `(2π/L)²`.
    pub fn first_eigenvalue(&self) -> f64 {
        (2.0 * PI / self.grid.length_per_axis()).powi(2)
    }

    /// Full `|k|²` of flat mode `m` (Laplacian symbol, Nyquist included).
    pub fn ksq(&self, m: usize) -> f64 {
        self.ksq[m]
    }

    pub fn ksq_table(&self) -> &[f64] {
        &self.ksq
    }

    /// Derivative wavenumber of flat mode `m` along `axis` (Nyquist mapped to 0).
    pub fn derivative_wavenumber(&self, m: usize, axis: usize) -> f64 {
        self.derivative_wavenumbers[self.grid.axis_index(m, axis)]
    }

    /// Angular wavenumber for 1D index `i`, signed, Nyquist positive.
    pub fn wavenumber_1d(&self, i: usize) -> f64 {
        self.wavenumbers[i]
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias_mask
    }

    pub fn keeps_1d(&self, i: usize) -> bool {
        self.keep_1d[i]
    }

    fn check_grid(&self, g: &GridSpec) {
        assert_eq!(*g, self.grid, "field grid does not match the workspace");
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n_per_axis();
        let dim = self.grid.dim();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // contiguous last axis: one batched call
        plan.process_with_scratch(buf, &mut scratch);
        let mut tmp = Vec::new();
        for axis in 0..dim - 1 {
            let stride = self.grid.stride(axis);
            let block = n * stride;
            tmp.resize(block, Complex64::new(0.0, 0.0));
            for chunk in buf.chunks_exact_mut(block) {
                // chunk is n rows (along axis) × stride columns; transpose
                for r in 0..n {
                    for c in 0..stride {
                        tmp[c * n + r] = chunk[r * stride + c];
                    }
                }
                plan.process_with_scratch(&mut tmp, &mut scratch);
                for r in 0..n {
                    for c in 0..stride {
                        chunk[r * stride + c] = tmp[c * n + r];
                    }
                }
            }
        }
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        self.check_grid(f.grid());
        let mut coeffs: Vec<Complex64> =
            f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut coeffs, &self.forward);
        let inv_len = 1.0 / self.grid.len() as f64;
        for c in &mut coeffs {
            *c *= inv_len;
        }
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// Back to grid values, keeping the real part.
    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        self.check_grid(s.grid());
        let mut buf = s.coeffs.clone();
        self.transform(&mut buf, &self.backward);
        ScalarField::from_vec_unchecked(self.grid, buf.into_iter().map(|c| c.re).collect())
    }

    /// Multiplies every mode by `symbol(m)`.
    pub fn apply_symbol(&self, f: &ScalarField, symbol: impl Fn(usize) -> f64) -> ScalarField {
        let mut s = self.forward(f);
        for (m, c) in s.coeffs.iter_mut().enumerate() {
            *c *= symbol(m);
        }
        self.inverse(&s)
    }

    fn derivative_spectrum(&self, s: &Spectrum, axis: usize) -> Spectrum {
        let mut out = s.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            *c *= I * self.derivative_wavenumber(m, axis);
        }
        out
    }

    /// `∂f/∂x_axis`.
    pub fn derivative(&self, f: &ScalarField, axis: usize) -> ScalarField {
        let s = self.forward(f);
        self.inverse(&self.derivative_spectrum(&s, axis))
    }

    pub fn grad(&self, f: &ScalarField) -> VectorField {
        let s = self.forward(f);
        VectorField::from_components_unchecked(
            (0..self.grid.dim())
                .map(|axis| self.inverse(&self.derivative_spectrum(&s, axis)))
                .collect(),
        )
    }

    fn divergence_spectrum(&self, v: &VectorField) -> Spectrum {
        let mut acc = Spectrum::zeros(self.grid);
        for (axis, comp) in v.components().iter().enumerate() {
            let s = self.forward(comp);
            for (m, (a, c)) in acc.coeffs.iter_mut().zip(&s.coeffs).enumerate() {
                *a += I * self.derivative_wavenumber(m, axis) * c;
            }
        }
        acc
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        self.check_grid(v.grid());
        self.inverse(&self.divergence_spectrum(v))
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_symbol(f, |m| -self.ksq[m])
    }

    /// Velocity gradient `G_ij = ∂_i v_j`.
    pub fn velocity_gradient(&self, v: &VectorField) -> TensorField {
        let d = self.grid.dim();
        let spectra: Vec<Spectrum> = v.components().iter().map(|c| self.forward(c)).collect();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for s in &spectra {
                entries.push(self.inverse(&self.derivative_spectrum(s, i)));
            }
        }
        TensorField::from_entries(d, entries)
    }

    /// Symmetric gradient `D_ij = ½(∂_i v_j + ∂_j v_i)`.
    pub fn sym_grad(&self, v: &VectorField) -> TensorField {
        let g = self.velocity_gradient(v);
        let d = self.grid.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                entries.push((g.get(i, j) + g.get(j, i)).map(|x| 0.5 * x));
            }
        }
        TensorField::from_entries(d, entries)
    }

    /// Row-wise divergence `(div T)_j = Σ_i ∂_i T_ij`.
    pub fn tensor_divergence(&self, t: &TensorField) -> VectorField {
        let d = self.grid.dim();
        let comps = (0..d)
            .map(|j| {
                let mut acc = Spectrum::zeros(self.grid);
                for i in 0..d {
                    let s = self.forward(t.get(i, j));
                    for (m, (a, c)) in acc.coeffs.iter_mut().zip(&s.coeffs).enumerate() {
                        *a += I * self.derivative_wavenumber(m, i) * c;
                    }
                }
                self.inverse(&acc)
            })
            .collect();
        VectorField::from_components_unchecked(comps)
    }

    fn leray_spectra(&self, spectra: &mut [Spectrum]) {
        let d = self.grid.dim();
        let mut k = [0.0; 3];
        for m in 1..self.grid.len() {
            let k2 = self.derivative_ksq[m];
            if k2 == 0.0 {
                continue;
            }
            for (axis, ka) in k.iter_mut().enumerate().take(d) {
                *ka = self.derivative_wavenumber(m, axis);
            }
            let mut kdot = Complex64::new(0.0, 0.0);
            for axis in 0..d {
                kdot += k[axis] * spectra[axis].coeffs[m];
            }
            let scale = kdot / k2;
            for axis in 0..d {
                spectra[axis].coeffs[m] -= k[axis] * scale;
            }
        }
    }

    /// Orthogonal projection onto divergence-free fields; the mean passes through.
    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        self.check_grid(v.grid());
        let mut spectra: Vec<Spectrum> = v.components().iter().map(|c| self.forward(c)).collect();
        self.leray_spectra(&mut spectra);
        VectorField::from_components_unchecked(spectra.iter().map(|s| self.inverse(s)).collect())
    }

    /// Leray projection that also removes the mean: projection onto the span
    /// of Stokes eigenfunctions with positive eigenvalue.
    pub fn solenoidal_mean_free(&self, v: &VectorField) -> VectorField {
        let mut spectra: Vec<Spectrum> = v.components().iter().map(|c| self.forward(c)).collect();
        self.leray_spectra(&mut spectra);
        for s in &mut spectra {
            s.coeffs[0] = Complex64::new(0.0, 0.0);
        }
        VectorField::from_components_unchecked(spectra.iter().map(|s| self.inverse(s)).collect())
    }

    fn check_stokes_domain(&self, v: &VectorField) -> Result<()> {
        let norm = v.norm_l2();
        let div = self.divergence(v).norm_l2();
        if div > 1e-10 * norm {
            return Err(Error::NotDivergenceFree {
                relative: if norm > 0.0 { div / norm } else { f64::INFINITY },
            });
        }
        for mean in v.means() {
            if mean.abs() > 1e-12 {
                return Err(Error::NonzeroMean { mean });
            }
        }
        Ok(())
    }

    fn check_mean_free(&self, f: &ScalarField) -> Result<()> {
        let mean = f.mean();
        if mean.abs() > 1e-12 * f.rms() {
            return Err(Error::NonzeroMean { mean });
        }
        Ok(())
    }

    fn inverse_laplacian_spectrum(&self, s: &mut Spectrum) {
        s.coeffs[0] = Complex64::new(0.0, 0.0);
        for (m, c) in s.coeffs.iter_mut().enumerate().skip(1) {
            *c /= self.ksq[m];
        }
    }

    /// `A⁻¹ v`: the solenoidal, mean-free `w` with `P(-Δw) = v`.
    pub fn inv_stokes(&self, v: &VectorField) -> Result<VectorField> {
        self.check_stokes_domain(v)?;
        let mut spectra: Vec<Spectrum> = v.components().iter().map(|c| self.forward(c)).collect();
        self.leray_spectra(&mut spectra);
        for s in &mut spectra {
            self.inverse_laplacian_spectrum(s);
        }
        Ok(VectorField::from_components_unchecked(
            spectra.iter().map(|s| self.inverse(s)).collect(),
        ))
    }

    /// Mean-free solution `w` of `-Δw = f` for mean-free `f`.
    pub fn inv_neumann_laplace(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_mean_free(f)?;
        Ok(self.inv_laplacian_mean_free(f))
    }

    /// `(-Δ)⁻¹` on the mean-free part of `f`, without the domain check.
    pub(crate) fn inv_laplacian_mean_free(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        self.inverse_laplacian_spectrum(&mut s);
        self.inverse(&s)
    }

    fn gradient_norm_of_spectrum(&self, s: &Spectrum) -> f64 {
        s.coeffs
            .iter()
            .zip(&self.derivative_ksq)
            .map(|(c, k2)| k2 * c.norm_sqr())
            .sum::<f64>()
    }

    /// `‖v‖♯ = ‖∇A⁻¹v‖`.
    pub fn dual_norm_sharp(&self, v: &VectorField) -> Result<f64> {
        let w = self.inv_stokes(v)?;
        let total: f64 = w
            .components()
            .iter()
            .map(|c| self.gradient_norm_of_spectrum(&self.forward(c)))
            .sum();
        Ok((self.grid.volume() * total).sqrt())
    }

    /// `‖f‖∗ = ‖∇(-Δ)⁻¹f‖` for mean-free scalars.
    pub fn dual_norm_star(&self, f: &ScalarField) -> Result<f64> {
        let w = self.inv_neumann_laplace(f)?;
        let total = self.gradient_norm_of_spectrum(&self.forward(&w));
        Ok((self.grid.volume() * total).sqrt())
    }

    pub(crate) fn dealias_spectrum(&self, s: &mut Spectrum) {
        for (c, &keep) in s.coeffs.iter_mut().zip(&self.dealias_mask) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Two-thirds truncation: zeroes modes with any `|index| > n/3`.
    pub fn dealias(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        self.inverse(&s)
    }

    pub fn dealias_vector(&self, v: &VectorField) -> VectorField {
        v.map_components(|c| self.dealias(c))
    }

    /// Dealiased pointwise product.
    pub fn product(&self, a: &ScalarField, b: &ScalarField) -> ScalarField {
        self.dealias(&a.mul_pointwise(b))
    }

    /// `(a·∇) b`, each component dealiased.
    pub fn advect(&self, a: &VectorField, b: &VectorField) -> VectorField {
        let g = self.velocity_gradient(b);
        let d = self.grid.dim();
        let comps = (0..d)
            .map(|j| {
                let mut acc = ScalarField::zeros(self.grid);
                for i in 0..d {
                    acc = &acc + &a.component(i).mul_pointwise(g.get(i, j));
                }
                self.dealias(&acc)
            })
            .collect();
        VectorField::from_components_unchecked(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(n: usize) -> SpectralWorkspace {
        SpectralWorkspace::new(GridSpec::square(n).unwrap())
    }

    fn close(a: &ScalarField, b: &ScalarField, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn grad_of_constant_vanishes() {
        let w = ws(16);
        let g = w.grad(&ScalarField::constant(*w.grid(), 3.0));
        assert!(g.components().iter().all(|c| c.max_abs() < 1e-14));
    }

    #[test]
    fn grad_of_cosines() {
        let w = ws(32);
        let grid = *w.grid();
        let g = w.grad(&ScalarField::from_fn(grid, |x| x[0].cos()));
        assert!(close(g.component(0), &ScalarField::from_fn(grid, |x| -x[0].sin()), 1e-13));
        assert!(g.component(1).max_abs() < 1e-13);

        let g = w.grad(&ScalarField::from_fn(grid, |x| x[0].sin() + x[1].sin()));
        assert!(close(g.component(0), &ScalarField::from_fn(grid, |x| x[0].cos()), 1e-13));
        assert!(close(g.component(1), &ScalarField::from_fn(grid, |x| x[1].cos()), 1e-13));
    }

    #[test]
    fn divergence_and_laplacian_examples() {
        let w = ws(32);
        let grid = *w.grid();
        let v = VectorField::new(vec![
            ScalarField::from_fn(grid, |x| x[1].sin()),
            ScalarField::zeros(grid),
        ])
        .unwrap();
        assert!(w.divergence(&v).max_abs() < 1e-13);

        let lap = w.laplacian(&ScalarField::from_fn(grid, |x| (2.0 * x[0]).cos()));
        assert!(close(&lap, &ScalarField::from_fn(grid, |x| -4.0 * (2.0 * x[0]).cos()), 1e-12));

        let cosx = ScalarField::from_fn(grid, |x| x[0].cos());
        let dg = w.divergence(&w.grad(&cosx));
        assert!(close(&dg, &(-&cosx), 1e-13));
    }

    #[test]
    fn sym_grad_of_shear() {
        let w = ws(32);
        let grid = *w.grid();
        let zero = w.sym_grad(&VectorField::zeros(grid));
        assert_eq!(zero.norm_sq(), 0.0);

        let v = VectorField::new(vec![
            ScalarField::from_fn(grid, |x| x[1].sin()),
            ScalarField::zeros(grid),
        ])
        .unwrap();
        let d = w.sym_grad(&v);
        let half_cos = ScalarField::from_fn(grid, |x| 0.5 * x[1].cos());
        assert!(close(d.get(0, 1), &half_cos, 1e-13));
        assert!(close(d.get(1, 0), &half_cos, 1e-13));
        assert!(d.get(0, 0).max_abs() < 1e-13 && d.get(1, 1).max_abs() < 1e-13);
        assert!(d.asymmetry() < 1e-15);
    }

    #[test]
    fn leray_examples() {
        let w = ws(32);
        let grid = *w.grid();
        let f = ScalarField::from_fn(grid, |x| (x[0] + 2.0 * x[1]).sin() + x[1].cos());
        let p = w.leray_project(&w.grad(&f));
        assert!(p.norm_l2() < 1e-12);

        let shear = VectorField::new(vec![
            ScalarField::zeros(grid),
            ScalarField::from_fn(grid, |x| x[0].sin()),
        ])
        .unwrap();
        let p = w.leray_project(&shear);
        assert!((&p - &shear).norm_l2() < 1e-13);

        let longitudinal = VectorField::new(vec![
            ScalarField::from_fn(grid, |x| x[0].sin()),
            ScalarField::zeros(grid),
        ])
        .unwrap();
        assert!(w.leray_project(&longitudinal).norm_l2() < 1e-13);
    }

    #[test]
    fn inv_stokes_examples() {
        let w = ws(32);
        let grid = *w.grid();
        let make = |kx: f64| {
            VectorField::new(vec![
                ScalarField::zeros(grid),
                ScalarField::from_fn(grid, move |x| (kx * x[0]).cos()),
            ])
            .unwrap()
        };
        let v1 = make(1.0);
        assert!((&w.inv_stokes(&v1).unwrap() - &v1).norm_l2() < 1e-13);
        let v2 = make(2.0);
        assert!((&w.inv_stokes(&v2).unwrap() - &v2.scaled(0.25)).norm_l2() < 1e-13);
        assert_eq!(
            w.inv_stokes(&VectorField::zeros(grid)).unwrap(),
            VectorField::zeros(grid)
        );
    }

    #[test]
    fn inv_stokes_rejects_bad_input() {
        let w = ws(16);
        let grid = *w.grid();
        let compressive = VectorField::new(vec![
            ScalarField::from_fn(grid, |x| x[0].sin()),
            ScalarField::zeros(grid),
        ])
        .unwrap();
        assert!(matches!(
            w.inv_stokes(&compressive),
            Err(Error::NotDivergenceFree { .. })
        ));
        let drifting = VectorField::new(vec![
            ScalarField::constant(grid, 0.5),
            ScalarField::zeros(grid),
        ])
        .unwrap();
        assert!(matches!(w.inv_stokes(&drifting), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn inv_neumann_laplace_examples() {
        let w = ws(32);
        let grid = *w.grid();
        let f = ScalarField::from_fn(grid, |x| (2.0 * x[0]).cos());
        let expect = ScalarField::from_fn(grid, |x| (2.0 * x[0]).cos() / 4.0);
        assert!(close(&w.inv_neumann_laplace(&f).unwrap(), &expect, 1e-14));

        let zero = ScalarField::zeros(grid);
        assert_eq!(w.inv_neumann_laplace(&zero).unwrap(), zero);

        let f = ScalarField::from_fn(grid, |x| x[0].cos() + (2.0 * x[1]).cos());
        let expect = ScalarField::from_fn(grid, |x| x[0].cos() + (2.0 * x[1]).cos() / 4.0);
        assert!(close(&w.inv_neumann_laplace(&f).unwrap(), &expect, 1e-14));

        let offset = ScalarField::from_fn(grid, |x| 1.0 + x[0].cos());
        assert!(matches!(
            w.inv_neumann_laplace(&offset),
            Err(Error::NonzeroMean { .. })
        ));
    }

    #[test]
    fn dual_norm_examples() {
        let w = ws(32);
        let grid = *w.grid();
        let cosx = ScalarField::from_fn(grid, |x| x[0].cos());
        // ∫ sin² x over [0,2π]² = 2π², so ‖∇A⁻¹ cos x‖ = π√2
        let expected = 4.442_882_938_158_366;
        assert!((w.dual_norm_star(&cosx).unwrap() - expected).abs() < 1e-12);
        let scaled = &cosx * 2.5;
        assert!((w.dual_norm_star(&scaled).unwrap() - 2.5 * expected).abs() < 1e-11);
        assert_eq!(w.dual_norm_sharp(&VectorField::zeros(grid)).unwrap(), 0.0);
    }

    #[test]
    fn dealias_examples() {
        let w = ws(64);
        let grid = *w.grid();
        let cosx = ScalarField::from_fn(grid, |x| x[0].cos());
        assert!(close(&w.dealias(&cosx), &cosx, 1e-14));
        let high = ScalarField::from_fn(grid, |x| (31.0 * x[0]).cos());
        assert!(w.dealias(&high).max_abs() < 1e-13);
        let f = ScalarField::from_fn(grid, |x| 0.3 + (31.0 * x[0]).cos() * x[1].sin());
        let gap = (w.dealias(&f).mean() - f.mean()).abs();
        assert!(gap < 1e-13, "{gap:e}");
    }

    #[test]
    fn three_dimensional_transform_roundtrip() {
        let w = SpectralWorkspace::new(GridSpec::cube(8).unwrap());
        let grid = *w.grid();
        let f = ScalarField::from_fn(grid, |x| (x[0] + 2.0 * x[1]).sin() * x[2].cos() + 0.2);
        let back = w.inverse(&w.forward(&f));
        assert!(close(&back, &f, 1e-14));
        let dz = w.derivative(&f, 2);
        let expect = ScalarField::from_fn(grid, |x| -(x[0] + 2.0 * x[1]).sin() * x[2].sin());
        assert!(close(&dz, &expect, 1e-13));
    }

    #[test]
    fn first_eigenvalue_scales_with_length() {
        let w = SpectralWorkspace::new(GridSpec::new(2, 16, PI).unwrap());
        assert!((w.first_eigenvalue() - 4.0).abs() < 1e-14);
        assert!(w.dealias_mask()[0]);
    }
}
