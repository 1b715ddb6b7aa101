//! Real polynomials in one variable and their complex roots.
//!
//! Coefficients are stored in ascending powers internally; the public
//! helpers that take slices follow the descending convention used by the
//! stability reports and Routh tables.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest degree handed to the eigenvalue solver.
pub const MAX_ROOT_DEGREE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    /// `coeffs[i]` multiplies `x^i`.
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = c;
        Self { coeffs }.trimmed()
    }

    pub fn from_ascending(coeffs: Vec<f64>) -> Self {
        Self { coeffs }.trimmed()
    }

    pub fn from_descending(coeffs: &[f64]) -> Self {
        Self::from_ascending(coeffs.iter().rev().copied().collect())
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
        self
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn ascending(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn descending(&self) -> Vec<f64> {
        self.coeffs.iter().rev().copied().collect()
    }

    pub fn coeff(&self, power: usize) -> f64 {
        self.coeffs.get(power).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Poly::from_ascending(coeffs)
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::from_ascending(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_ascending(out)
    }

    pub fn derivative(&self) -> Poly {
        Poly::from_ascending(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Backward-error style residual: |p(z)| / Σ|cᵢ||z|ⁱ.
    pub fn relative_residual(&self, z: Complex64) -> f64 {
        let r = z.norm();
        let scale: f64 = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.eval_complex(z).norm() / scale
    }

    /// All complex roots, with multiplicity.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        roots_ascending(&self.coeffs)
    }
}

/// Roots of a polynomial given in descending powers.
pub fn roots_descending(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    Poly::from_descending(coeffs).roots()
}

fn roots_ascending(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let poly = Poly::from_ascending(coeffs.to_vec());
    let Some(degree) = poly.degree() else {
        return Err(Error::InvalidArgument("zero polynomial has no roots".into()));
    };
    if degree > MAX_ROOT_DEGREE {
        return Err(Error::DegreeTooLarge(degree));
    }
    if poly.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric { message: "non-finite polynomial coefficient".into(), residual: f64::NAN });
    }

    // roots at the origin
    let zeros = poly.coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Poly::from_ascending(poly.coeffs[zeros..].to_vec());
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let d = degree - zeros;
    if d == 0 {
        return Ok(roots);
    }

    // x = rho * u brings the coefficient magnitudes closer together
    let lead = reduced.coeffs[d];
    let tail = reduced.coeffs[0];
    let rho = (tail / lead).abs().powf(1.0 / d as f64);
    let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
    let scaled: Vec<f64> =
        reduced.coeffs.iter().enumerate().map(|(i, c)| c * rho.powi(i as i32) / (lead * rho.powi(d as i32))).collect();

    let mut companion = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        companion[(0, j)] = -scaled[d - 1 - j];
    }
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    balance(&mut companion);
    let scaled_poly = Poly::from_ascending(scaled);
    let eig: Vec<Complex64> = match Schur::try_new(companion, f64::EPSILON, 200 * d) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => aberth(&scaled_poly),
    };

    let mut found: Vec<Complex64> = eig.iter().map(|z| z * rho).collect();
    for z in found.iter_mut() {
        *z = polish(&reduced, *z);
    }
    refine_clusters(&reduced, &mut found);
    roots.extend(found);
    Ok(roots)
}

/// Simultaneous Aberth–Ehrlich iteration on a monic polynomial whose roots
/// are of order one.
fn aberth(p: &Poly) -> Vec<Complex64> {
    let d = p.degree().unwrap_or(0);
    let dp = p.derivative();
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / d as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..d {
            let ratio = p.eval_complex(z[k]) / dp.eval_complex(z[k]);
            let repel: Complex64 = (0..d).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repel);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / z[k].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Parlett–Reinsch balancing with radix-2 scaling.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= g;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

fn polish(p: &Poly, z0: Complex64) -> Complex64 {
    let dp = p.derivative();
    let mut z = z0;
    let mut best = (p.relative_residual(z), z);
    for _ in 0..8 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = p.eval_complex(z) / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
        let r = p.relative_residual(z);
        if r < best.0 {
            best = (r, z);
        }
        if step.norm() <= 1e-15 * z.norm().max(1e-300) {
            break;
        }
    }
    best.1
}

/// Eigenvalues of a k-fold root scatter by ~ε^{1/k}; their centroid is far
/// more accurate, and Newton on the (k−1)-th derivative sharpens it further.
fn refine_clusters(p: &Poly, roots: &mut [Complex64]) {
    const CLUSTER_TOL: f64 = 1e-4;
    let n = roots.len();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        for j in (i + 1)..n {
            if !assigned[j] {
                let scale = roots[i].norm().max(roots[j].norm()).max(1e-300);
                if (roots[i] - roots[j]).norm() <= CLUSTER_TOL * scale {
                    members.push(j);
                    assigned[j] = true;
                }
            }
        }
        let k = members.len();
        if k < 2 {
            continue;
        }
        let centroid = members.iter().map(|&m| roots[m]).sum::<Complex64>() / k as f64;
        let mut dk = p.clone();
        for _ in 0..(k - 1) {
            dk = dk.derivative();
        }
        let refined = polish(&dk, centroid);
        let worst_member = members.iter().map(|&m| p.relative_residual(roots[m])).fold(0.0, f64::max);
        if p.relative_residual(refined) <= worst_member {
            for &m in &members {
                roots[m] = refined;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn arithmetic() {
        let a = Poly::from_descending(&[1.0, 1.0]); // x + 1
        let b = Poly::from_descending(&[1.0, -1.0]); // x − 1
        assert_eq!(a.mul(&b).descending(), vec![1.0, 0.0, -1.0]);
        assert_eq!(a.add(&b).descending(), vec![2.0, 0.0]);
        assert_eq!(a.mul(&a).derivative().descending(), vec![2.0, 2.0]);
        assert_eq!(a.add(&a.scale(-1.0)).degree(), None);
    }

    #[test]
    fn quadratic_roots() {
        let r = sorted_re(roots_descending(&[1.0, 0.0, 1.0]).unwrap());
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_roots_are_split_off() {
        let r = roots_descending(&[1.0, -2.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().any(|z| (z - Complex64::new(2.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn triple_root_is_recovered_accurately() {
        // (w + 700)^3
        let w = 700.0_f64;
        let r = roots_descending(&[1.0, 3.0 * w, 3.0 * w * w, w * w * w]).unwrap();
        for z in r {
            assert!((z + w).norm() / w < 1e-9, "{z}");
        }
    }

    #[test]
    fn wide_dynamic_range() {
        // roots 1e-3, 1, 1e3, 1e6
        let mut p = Poly::constant(1.0);
        for root in [1e-3, 1.0, 1e3, 1e6] {
            p = p.mul(&Poly::from_descending(&[1.0, -root]));
        }
        let r = p.roots().unwrap();
        for root in [1e-3, 1.0, 1e3, 1e6] {
            assert!(r.iter().any(|z| (z.re - root).abs() / root < 1e-8), "missing {root}: {r:?}");
        }
    }

    #[test]
    fn degree_cap() {
        let p = Poly::monomial(1.0, MAX_ROOT_DEGREE + 1).add(&Poly::constant(1.0));
        assert_eq!(p.roots(), Err(Error::DegreeTooLarge(MAX_ROOT_DEGREE + 1)));
    }
}
