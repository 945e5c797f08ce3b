//! Corner singularities of the Stokes system and the convergence orders they permit.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Upper end of the searched strip of real parts.
pub const MAX_EXPONENT: f64 = 4.0;
const MIN_EXPONENT: f64 = 0.5;
const MAX_IMAG: f64 = 10.0;
const DEDUP_TOL: f64 = 1e-8;

/// Search grid for the complex Newton iteration.
#[derive(Debug, Clone, Copy)]
pub struct RootSearch {
    pub real_steps: usize,
    pub imag_steps: usize,
}

impl Default for RootSearch {
    fn default() -> Self {
        Self { real_steps: 71, imag_steps: 41 }
    }
}

fn newton(mut lambda: Complex64, omega: f64, sign: f64) -> Option<Complex64> {
    let s = omega.sin();
    for _ in 0..60 {
        let g = (lambda * omega).sin() + sign * lambda * s;
        let dg = omega * (lambda * omega).cos() + sign * s;
        if dg.norm() < 1e-300 {
            return None;
        }
        let step = g / dg;
        lambda -= step;
        if !lambda.re.is_finite() || lambda.norm() > 1e3 {
            return None;
        }
        if step.norm() < 1e-14 * lambda.norm().max(1.0) {
            let residual = (lambda * omega).sin() + sign * lambda * s;
            return (residual.norm() < 1e-10 * lambda.norm().max(1.0)).then_some(lambda);
        }
    }
    None
}

/// Roots of `sin²(λω) = λ² sin²ω` with `0.5 < Re λ ≤ 4`, `0 ≤ Im λ ≤ 10`
/// and `λ ≠ 1`, sorted by real part.
pub fn singular_roots(omega: f64, search: RootSearch) -> Result<Vec<Complex64>> {
    if !(omega > 0.0 && omega < 2.0 * std::f64::consts::PI) {
        return Err(Error::InvalidConfig(format!("corner angle {omega} outside (0, 2π)")));
    }
    let mut roots: Vec<Complex64> = Vec::new();
    for i in 0..search.real_steps {
        let re = MIN_EXPONENT + (MAX_EXPONENT - MIN_EXPONENT) * i as f64 / (search.real_steps - 1) as f64;
        for j in 0..search.imag_steps {
            let im = MAX_IMAG * j as f64 / (search.imag_steps - 1) as f64;
            for sign in [1.0, -1.0] {
                let Some(mut root) = newton(Complex64::new(re, im), omega, sign) else { continue };
                if root.im < 0.0 {
                    root = root.conj();
                }
                if root.im.abs() < 1e-10 {
                    root.im = 0.0;
                }
                let in_strip = root.re > MIN_EXPONENT + 1e-9 && root.re <= MAX_EXPONENT + 1e-12 && root.im <= MAX_IMAG;
                if in_strip && (root - 1.0).norm() > 1e-6 && roots.iter().all(|r| (r - root).norm() > DEDUP_TOL) {
                    roots.push(root);
                }
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Singular exponent of a corner with opening `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularExponent {
    pub value: f64,
    /// The root achieving the minimum real part, if one lies in the strip.
    pub root: Option<Complex64>,
    /// No root in the strip; `value` is the cap [`MAX_EXPONENT`].
    pub saturated: bool,
}

impl SingularExponent {
    /// Smooth enough for the high-regularity error estimates.
    pub fn is_admissible(&self) -> bool {
        self.value > 1.5
    }
}

pub fn singular_exponent_with(omega: f64, search: RootSearch) -> Result<SingularExponent> {
    let roots = singular_roots(omega, search)?;
    Ok(match roots.first() {
        Some(&r) => SingularExponent { value: r.re, root: Some(r), saturated: false },
        None => SingularExponent { value: MAX_EXPONENT, root: None, saturated: true },
    })
}

/// Smallest real part of the nontrivial roots, capped at 4.
pub fn singular_exponent(omega: f64) -> Result<f64> {
    singular_exponent_with(omega, RootSearch::default()).map(|s| s.value)
}

/// An expected order, or none when the estimate gives no rate.
pub type Order = Option<f64>;

/// Orders guaranteed by the error estimates for a polygon with largest angle `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityProfile {
    pub omega: f64,
    pub exponent: SingularExponent,
    pub admissible: bool,
    /// `y_d` smooth enough for the estimates.
    pub target_regular: bool,
    pub degree: usize,
    pub state_flux: Order,
    pub adjoint_flux: Order,
    pub state: Order,
    pub adjoint: Order,
    pub pressure: Order,
    pub adjoint_pressure: Order,
    pub control: Order,
    /// Bound on the piecewise Sobolev index of the control on each side.
    pub local_control_regularity: f64,
}

impl RegularityProfile {
    /// Orders in table order `L, G, y, z, p, q, u`; none when guarantees are withheld.
    pub fn orders(&self) -> [Order; 7] {
        if !self.admissible || !self.target_regular {
            return [None; 7];
        }
        [
            self.state_flux,
            self.adjoint_flux,
            self.state,
            self.adjoint,
            self.pressure,
            self.adjoint_pressure,
            self.control,
        ]
    }
}

/// Expected orders for degree `k` on a convex polygon with largest angle
/// `omega` and target regularity index `target_regularity`.
pub fn expected_orders(degree: usize, omega: f64, target_regularity: f64) -> Result<RegularityProfile> {
    let exponent = singular_exponent_with(omega, RootSearch::default())?;
    let xi = exponent.value;
    let k = degree as f64;

    let r_domain = (xi - 0.5).min(1.5);
    let r_flux = r_domain - 0.5;
    let r_state = r_domain + 0.5;
    let r_adjoint_flux = xi.min(3.0);
    let r_adjoint = r_adjoint_flux + 1.0;

    let s_l = r_flux.min(k + 1.0);
    let s_y = r_state.min(k + 2.0);
    let s_p = r_flux.min(k + 1.0);
    let s_g = r_adjoint_flux.min(k + 1.0);
    let s_z = r_adjoint.min(k + 2.0);
    let s_q = r_adjoint_flux.min(k + 1.0);
    let eps = [s_l, s_y - 1.0, s_p, s_g - 1.0, s_z - 2.0, s_q - 1.0].into_iter().fold(f64::INFINITY, f64::min);

    let base = (eps > 0.0).then_some(eps);
    let half = Some(eps + 0.5).filter(|v| *v > 0.0);
    Ok(RegularityProfile {
        omega,
        exponent,
        admissible: exponent.is_admissible(),
        target_regular: target_regularity >= xi.min(2.0),
        degree,
        state_flux: base,
        adjoint_flux: half,
        state: half,
        adjoint: half,
        pressure: base,
        adjoint_pressure: half,
        control: half,
        local_control_regularity: xi.min(3.0) - 0.5,
    })
}
