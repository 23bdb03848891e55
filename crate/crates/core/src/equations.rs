//! Conservation laws, numerical surface fluxes and two-point volume fluxes.
//!
//! States are passed as slices of length [`Law::n_vars`]; outputs are written
//! into caller-provided slices so the right-hand side can run without
//! allocating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of variables of any supported law.
pub const MAX_VARS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum Law {
    /// `w_t + (alpha w)_x = 0`.
    Advection { alpha: f64 },
    /// `w_t + (w^2 / 2)_x = 0`.
    Burgers,
    /// `(E, B)_t + (c^2 B, E)_x = 0`.
    Maxwell {
        #[serde(default = "one")]
        c: f64,
    },
    /// Compressible Euler in conserved variables `(rho, rho v, rho e)`.
    Euler {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    1.4
}

/// Primitive Euler quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPrimitive {
    pub rho: f64,
    pub v: f64,
    pub p: f64,
}

fn euler_primitive(gamma: f64, w: &[f64]) -> Result<EulerPrimitive> {
    let rho = w[0];
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidState {
            location: String::new(),
            detail: format!("density {rho}"),
        });
    }
    let v = w[1] / rho;
    let p = (gamma - 1.0) * (w[2] - 0.5 * rho * v * v);
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidState {
            location: String::new(),
            detail: format!("pressure {p}"),
        });
    }
    Ok(EulerPrimitive { rho, v, p })
}

/// Logarithmic mean `(y - x) / (log y - log x)`, switching to a series for
/// nearly equal arguments.
pub fn ln_mean(x: f64, y: f64) -> f64 {
    let f2 = (x * (x - 2.0 * y) + y * y) / (x * (x + 2.0 * y) + y * y);
    if f2 < 1e-4 {
        (x + y) / (2.0 + f2 * (2.0 / 3.0 + f2 * (2.0 / 5.0 + f2 * (2.0 / 7.0))))
    } else {
        (y - x) / (y / x).ln()
    }
}

impl Law {
    pub fn n_vars(&self) -> usize {
        match self {
            Law::Advection { .. } | Law::Burgers => 1,
            Law::Maxwell { .. } => 2,
            Law::Euler { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Law::Advection { .. } => "advection",
            Law::Burgers => "burgers",
            Law::Maxwell { .. } => "maxwell",
            Law::Euler { .. } => "euler",
        }
    }

    pub fn variable_names(&self) -> &'static [&'static str] {
        match self {
            Law::Advection { .. } | Law::Burgers => &["w"],
            Law::Maxwell { .. } => &["E", "B"],
            Law::Euler { .. } => &["rho", "rho_v", "rho_e"],
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Law::Advection { .. } | Law::Maxwell { .. })
    }

    pub fn validate(&self, w: &[f64]) -> Result<()> {
        match *self {
            Law::Euler { gamma } => euler_primitive(gamma, w).map(|_| ()),
            _ if w.iter().all(|x| x.is_finite()) => Ok(()),
            _ => Err(Error::InvalidState {
                location: String::new(),
                detail: "non-finite value".into(),
            }),
        }
    }

    pub fn primitive(&self, w: &[f64]) -> Result<EulerPrimitive> {
        match *self {
            Law::Euler { gamma } => euler_primitive(gamma, w),
            _ => Err(Error::invalid(format!("{} has no primitive variables", self.name()))),
        }
    }

    /// Physical flux `f(w)`.
    pub fn flux(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        match *self {
            Law::Advection { alpha } => out[0] = alpha * w[0],
            Law::Burgers => out[0] = 0.5 * w[0] * w[0],
            Law::Maxwell { c } => {
                out[0] = c * c * w[1];
                out[1] = w[0];
            }
            Law::Euler { gamma } => {
                let EulerPrimitive { v, p, .. } = euler_primitive(gamma, w)?;
                out[0] = w[1];
                out[1] = w[1] * v + p;
                out[2] = (w[2] + p) * v;
            }
        }
        Ok(())
    }

    /// Smallest and largest characteristic speed at `w`.
    pub fn wave_speeds(&self, w: &[f64]) -> Result<(f64, f64)> {
        Ok(match *self {
            Law::Advection { alpha } => (alpha, alpha),
            Law::Burgers => (w[0], w[0]),
            Law::Maxwell { c } => (-c, c),
            Law::Euler { gamma } => {
                let s = euler_primitive(gamma, w)?;
                let a = (gamma * s.p / s.rho).sqrt();
                (s.v - a, s.v + a)
            }
        })
    }

    /// Entropy `eta(w)`: the quadratic energy `w^T W w / 2` for the linear
    /// laws and Burgers, `-rho s / (gamma - 1)` for Euler.
    pub fn entropy(&self, w: &[f64]) -> Result<f64> {
        Ok(match *self {
            Law::Euler { gamma } => {
                let s = euler_primitive(gamma, w)?;
                let specific = (s.p / s.rho.powf(gamma)).ln();
                -s.rho * specific / (gamma - 1.0)
            }
            _ => {
                let wts = self.energy_weights();
                0.5 * (0..self.n_vars()).map(|k| wts[k] * w[k] * w[k]).sum::<f64>()
            }
        })
    }

    /// Gradient of [`Law::entropy`] with respect to the conserved variables.
    pub fn entropy_variables(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        match *self {
            Law::Euler { gamma } => {
                let s = euler_primitive(gamma, w)?;
                let specific = (s.p / s.rho.powf(gamma)).ln();
                out[0] = (gamma - specific) / (gamma - 1.0) - 0.5 * s.rho * s.v * s.v / s.p;
                out[1] = s.rho * s.v / s.p;
                out[2] = -s.rho / s.p;
            }
            _ => {
                let wts = self.energy_weights();
                for k in 0..self.n_vars() {
                    out[k] = wts[k] * w[k];
                }
            }
        }
        Ok(())
    }

    /// Entropy potential `psi = v^T f - F`, where `F` is the entropy flux.
    pub fn entropy_potential(&self, w: &[f64]) -> Result<f64> {
        Ok(match *self {
            Law::Advection { alpha } => 0.5 * alpha * w[0] * w[0],
            Law::Burgers => w[0].powi(3) / 6.0,
            // v^T f = E c^2 B + c^2 B E, entropy flux c^2 E B.
            Law::Maxwell { c } => c * c * w[0] * w[1],
            Law::Euler { .. } => w[1],
        })
    }

    /// Per-variable weights of the quadratic energy `sum_k W_k w_k^2`.
    pub fn energy_weights(&self) -> [f64; MAX_VARS] {
        match *self {
            Law::Maxwell { c } => [1.0, c * c, 0.0],
            _ => [1.0; MAX_VARS],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    Upwind,
    Godunov,
    Rusanov,
    Hll,
    Central,
}

impl FluxKind {
    pub fn name(&self) -> &'static str {
        match self {
            FluxKind::Upwind => "upwind",
            FluxKind::Godunov => "godunov",
            FluxKind::Rusanov => "rusanov",
            FluxKind::Hll => "hll",
            FluxKind::Central => "central",
        }
    }
}

impl std::str::FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upwind" => Ok(FluxKind::Upwind),
            "godunov" => Ok(FluxKind::Godunov),
            "rusanov" | "llf" | "local-lax-friedrichs" => Ok(FluxKind::Rusanov),
            "hll" => Ok(FluxKind::Hll),
            "central" => Ok(FluxKind::Central),
            other => Err(Error::invalid(format!("unknown numerical flux '{other}'"))),
        }
    }
}

/// Wave-speed bounds used by HLL.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveSpeedEstimate {
    /// `min(lambda_min(wL), lambda_min(wR))`, `max(lambda_max(wL), lambda_max(wR))`.
    #[default]
    Davis,
    /// Davis bounds widened by the Roe-average speeds (Euler only).
    Einfeldt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalFlux {
    pub kind: FluxKind,
    pub wave_speeds: WaveSpeedEstimate,
}

impl From<FluxKind> for NumericalFlux {
    fn from(kind: FluxKind) -> Self {
        Self {
            kind,
            wave_speeds: WaveSpeedEstimate::Davis,
        }
    }
}

fn unsupported(kind: FluxKind, law: &Law) -> Error {
    Error::UnsupportedFlux {
        flux: kind.name().into(),
        law: law.name().into(),
    }
}

/// Exact Riemann solution flux for Burgers' equation.
fn burgers_godunov(wl: f64, wr: f64) -> f64 {
    let f = |w: f64| 0.5 * w * w;
    if wl <= wr {
        if wl > 0.0 {
            f(wl)
        } else if wr < 0.0 {
            f(wr)
        } else {
            0.0
        }
    } else if wl + wr > 0.0 {
        f(wl)
    } else {
        f(wr)
    }
}

impl NumericalFlux {
    pub fn new(kind: FluxKind) -> Self {
        kind.into()
    }

    /// Check the flux can be evaluated for `law` at all.
    pub fn supports(&self, law: &Law) -> Result<()> {
        match (self.kind, law) {
            (FluxKind::Upwind, Law::Burgers | Law::Euler { .. }) => Err(unsupported(self.kind, law)),
            (FluxKind::Godunov, Law::Euler { .. }) => Err(unsupported(self.kind, law)),
            _ => Ok(()),
        }
    }

    fn hll_speeds(&self, law: &Law, wl: &[f64], wr: &[f64]) -> Result<(f64, f64)> {
        let (l_min, l_max) = law.wave_speeds(wl)?;
        let (r_min, r_max) = law.wave_speeds(wr)?;
        let (mut s_l, mut s_r) = (l_min.min(r_min), l_max.max(r_max));
        if let (WaveSpeedEstimate::Einfeldt, Law::Euler { gamma }) = (self.wave_speeds, *law) {
            let a = euler_primitive(gamma, wl)?;
            let b = euler_primitive(gamma, wr)?;
            let (sa, sb) = (a.rho.sqrt(), b.rho.sqrt());
            let h = |s: &EulerPrimitive, w: &[f64]| (w[2] + s.p) / s.rho;
            let v = (sa * a.v + sb * b.v) / (sa + sb);
            let hh = (sa * h(&a, wl) + sb * h(&b, wr)) / (sa + sb);
            let c = ((gamma - 1.0) * (hh - 0.5 * v * v)).max(0.0).sqrt();
            s_l = s_l.min(v - c);
            s_r = s_r.max(v + c);
        }
        Ok((s_l, s_r))
    }

    /// `f*(wL, wR)`.
    pub fn eval(&self, law: &Law, wl: &[f64], wr: &[f64], out: &mut [f64]) -> Result<()> {
        let n = law.n_vars();
        let mut fl = [0.0; MAX_VARS];
        let mut fr = [0.0; MAX_VARS];
        match (self.kind, *law) {
            (FluxKind::Upwind | FluxKind::Godunov, Law::Advection { alpha }) => {
                out[0] = if alpha >= 0.0 { alpha * wl[0] } else { alpha * wr[0] };
            }
            (FluxKind::Upwind | FluxKind::Godunov, Law::Maxwell { c }) => {
                // A^+ wL + A^- wR with |A| = c I.
                law.flux(wl, &mut fl)?;
                law.flux(wr, &mut fr)?;
                for k in 0..n {
                    out[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * c * (wr[k] - wl[k]);
                }
            }
            (FluxKind::Godunov, Law::Burgers) => out[0] = burgers_godunov(wl[0], wr[0]),
            (FluxKind::Upwind, _) | (FluxKind::Godunov, _) => return Err(unsupported(self.kind, law)),
            (FluxKind::Central, _) => {
                law.flux(wl, &mut fl)?;
                law.flux(wr, &mut fr)?;
                for k in 0..n {
                    out[k] = 0.5 * (fl[k] + fr[k]);
                }
            }
            (FluxKind::Rusanov, _) => {
                law.flux(wl, &mut fl)?;
                law.flux(wr, &mut fr)?;
                let (a, b) = law.wave_speeds(wl)?;
                let (c, d) = law.wave_speeds(wr)?;
                let lambda = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
                for k in 0..n {
                    out[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * lambda * (wr[k] - wl[k]);
                }
            }
            (FluxKind::Hll, _) => {
                law.flux(wl, &mut fl)?;
                law.flux(wr, &mut fr)?;
                let (s_l, s_r) = self.hll_speeds(law, wl, wr)?;
                if s_l >= 0.0 {
                    out[..n].copy_from_slice(&fl[..n]);
                } else if s_r <= 0.0 {
                    out[..n].copy_from_slice(&fr[..n]);
                } else {
                    for k in 0..n {
                        out[k] = (s_r * fl[k] - s_l * fr[k] + s_l * s_r * (wr[k] - wl[k])) / (s_r - s_l);
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether `f*(wL, wR) = f(wL)` holds by construction for this pair, i.e.
    /// the flux takes all information from the left state.
    pub fn is_fully_upwind(&self, law: &Law, wl: &[f64], wr: &[f64]) -> bool {
        match (self.kind, *law) {
            (FluxKind::Upwind | FluxKind::Godunov | FluxKind::Hll, Law::Advection { alpha }) => alpha > 0.0,
            (FluxKind::Godunov, Law::Burgers) => wl[0] > 0.0 && wr[0] > 0.0,
            (FluxKind::Hll, Law::Burgers | Law::Euler { .. }) => {
                self.hll_speeds(law, wl, wr).map(|(s_l, _)| s_l > 0.0).unwrap_or(false)
            }
            _ => false,
        }
    }

    /// Flux kinds whose full-upwind property can hold for some states of
    /// `law`; anything else at a sub-cell point loses conservation.
    pub fn can_be_fully_upwind(&self, law: &Law) -> bool {
        matches!(
            (self.kind, law),
            (
                FluxKind::Upwind | FluxKind::Godunov | FluxKind::Hll,
                Law::Advection { .. }
            ) | (FluxKind::Godunov | FluxKind::Hll, Law::Burgers)
                | (FluxKind::Hll, Law::Euler { .. })
        )
    }
}

/// Volume term of the element discretisation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeFlux {
    /// `-D f(w)`.
    #[default]
    DerivativeForm,
    /// Flux differencing with the arithmetic mean of the physical fluxes;
    /// algebraically identical to the derivative form.
    Central,
    /// Flux differencing with an entropy-conservative two-point flux.
    EntropyConservative,
}

impl VolumeFlux {
    pub fn is_flux_differencing(&self) -> bool {
        !matches!(self, VolumeFlux::DerivativeForm)
    }

    /// Symmetric two-point flux `F(wL, wR)`.
    pub fn two_point(&self, law: &Law, wl: &[f64], wr: &[f64], out: &mut [f64]) -> Result<()> {
        match (self, *law) {
            (VolumeFlux::EntropyConservative, Law::Burgers) => {
                let (a, b) = (wl[0], wr[0]);
                out[0] = (a * a + a * b + b * b) / 6.0;
            }
            (VolumeFlux::EntropyConservative, Law::Euler { gamma }) => {
                ec_euler(gamma, wl, wr, out)?;
            }
            _ => {
                let mut fl = [0.0; MAX_VARS];
                let mut fr = [0.0; MAX_VARS];
                law.flux(wl, &mut fl)?;
                law.flux(wr, &mut fr)?;
                for k in 0..law.n_vars() {
                    out[k] = 0.5 * (fl[k] + fr[k]);
                }
            }
        }
        Ok(())
    }
}

/// Entropy-conservative and kinetic-energy-preserving Euler flux built from
/// logarithmic means of density and `rho / p`.
fn ec_euler(gamma: f64, wl: &[f64], wr: &[f64], out: &mut [f64]) -> Result<()> {
    let l = euler_primitive(gamma, wl)?;
    let r = euler_primitive(gamma, wr)?;
    let rho_mean = ln_mean(l.rho, r.rho);
    let inv_rho_p_mean = l.p * r.p / ln_mean(l.rho * r.p, r.rho * l.p);
    let v_avg = 0.5 * (l.v + r.v);
    let p_avg = 0.5 * (l.p + r.p);
    let f1 = rho_mean * v_avg;
    out[0] = f1;
    out[1] = f1 * v_avg + p_avg;
    out[2] = f1 * (0.5 * l.v * r.v + inv_rho_p_mean / (gamma - 1.0)) + 0.5 * (l.p * r.v + r.p * l.v);
    Ok(())
}

/// Physical flux as a vector; convenience wrapper around [`Law::flux`].
pub fn physical_flux(law: &Law, w: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; law.n_vars()];
    law.flux(w, &mut out)?;
    Ok(out)
}

pub fn numerical_flux(flux: NumericalFlux, law: &Law, wl: &[f64], wr: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; law.n_vars()];
    flux.eval(law, wl, wr, &mut out)?;
    Ok(out)
}

pub fn volume_flux_ec(law: &Law, wl: &[f64], wr: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; law.n_vars()];
    VolumeFlux::EntropyConservative.two_point(law, wl, wr, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EULER: Law = Law::Euler { gamma: 1.4 };

    fn euler_state(rho: f64, v: f64, p: f64) -> [f64; 3] {
        [rho, rho * v, p / 0.4 + 0.5 * rho * v * v]
    }

    #[test]
    fn physical_fluxes() {
        assert_eq!(
            physical_flux(&Law::Advection { alpha: 2.0 }, &[3.0]).unwrap(),
            vec![6.0]
        );
        assert_eq!(physical_flux(&Law::Burgers, &[0.0]).unwrap(), vec![0.0]);
        let f = physical_flux(&EULER, &[1.0, 0.0, 1.0]).unwrap();
        assert!(f[0].abs() < 1e-15 && (f[1] - 0.4).abs() < 1e-15 && f[2].abs() < 1e-15);
        assert_eq!(
            physical_flux(&Law::Maxwell { c: 2.0 }, &[1.0, 3.0]).unwrap(),
            vec![12.0, 1.0]
        );
    }

    #[test]
    fn invalid_euler_states() {
        let err = physical_flux(&EULER, &[-1.0, 0.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("invalid thermodynamic state"));
        assert!(physical_flux(&EULER, &[1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn flux_examples() {
        let adv = Law::Advection { alpha: 2.0 };
        let f = numerical_flux(FluxKind::Rusanov.into(), &adv, &[1.0], &[3.0]).unwrap();
        assert!((f[0] - 2.0).abs() < 1e-15);
        let f = numerical_flux(FluxKind::Godunov.into(), &Law::Burgers, &[1.0], &[0.0]).unwrap();
        assert_eq!(f[0], 0.5);
        // Transonic rarefaction.
        let f = numerical_flux(FluxKind::Godunov.into(), &Law::Burgers, &[-1.0], &[2.0]).unwrap();
        assert_eq!(f[0], 0.0);
        // Left-moving shock.
        let f = numerical_flux(FluxKind::Godunov.into(), &Law::Burgers, &[1.0], &[-3.0]).unwrap();
        assert_eq!(f[0], 4.5);
        assert!(numerical_flux(FluxKind::Godunov.into(), &EULER, &[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn supersonic_hll_is_upwind() {
        let wl = euler_state(2.0, 3.0, 1.0);
        let wr = euler_state(1.5, 2.8, 0.9);
        let hll = NumericalFlux::new(FluxKind::Hll);
        assert!(hll.is_fully_upwind(&EULER, &wl, &wr));
        let f = numerical_flux(hll, &EULER, &wl, &wr).unwrap();
        assert_eq!(f, physical_flux(&EULER, &wl).unwrap());
        assert!(!NumericalFlux::new(FluxKind::Rusanov).is_fully_upwind(&EULER, &wl, &wr));
    }

    #[test]
    fn einfeldt_speeds_contain_davis() {
        let wl = euler_state(1.0, 0.0, 1.0);
        let wr = euler_state(0.125, 0.0, 0.1);
        let davis = NumericalFlux::new(FluxKind::Hll);
        let einfeldt = NumericalFlux {
            kind: FluxKind::Hll,
            wave_speeds: WaveSpeedEstimate::Einfeldt,
        };
        let (a, b) = davis.hll_speeds(&EULER, &wl, &wr).unwrap();
        let (c, d) = einfeldt.hll_speeds(&EULER, &wl, &wr).unwrap();
        assert!(c <= a && d >= b);
    }

    #[test]
    fn ln_mean_branches() {
        for (x, y) in [(1.0f64, 2.0f64), (3.0, 3.0 + 1e-9), (0.5, 0.5), (1e-3, 7.0)] {
            let reference = if x == y { x } else { (y - x) / (y / x).ln() };
            assert!((ln_mean(x, y) - reference).abs() <= 1e-12 * reference);
        }
    }

    #[test]
    fn euler_entropy_example() {
        let s = EULER.entropy(&[1.0, 0.0, 1.0]).unwrap();
        assert!((s + 0.4_f64.ln() / 0.4).abs() < 1e-14);
    }

    fn fd_entropy_variables(law: &Law, w: &[f64]) -> Vec<f64> {
        (0..w.len())
            .map(|k| {
                let h = 1e-6 * w[k].abs().max(1.0);
                let mut wp = w.to_vec();
                let mut wm = w.to_vec();
                wp[k] += h;
                wm[k] -= h;
                (law.entropy(&wp).unwrap() - law.entropy(&wm).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn laws() -> Vec<Law> {
        vec![
            Law::Advection { alpha: 2.0 },
            Law::Advection { alpha: -0.5 },
            Law::Burgers,
            Law::Maxwell { c: 1.5 },
            EULER,
        ]
    }

    fn valid_state(law: &Law, raw: [f64; 3]) -> Vec<f64> {
        match law {
            Law::Euler { .. } => euler_state(0.5 + raw[0].abs(), raw[1], 0.3 + raw[2].abs()).to_vec(),
            _ => raw[..law.n_vars()].to_vec(),
        }
    }

    fn raw_state() -> impl Strategy<Value = [f64; 3]> {
        [-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn all_fluxes_are_consistent(raw in raw_state()) {
            for law in laws() {
                let w = valid_state(&law, raw);
                let f = physical_flux(&law, &w).unwrap();
                for kind in [FluxKind::Upwind, FluxKind::Godunov, FluxKind::Rusanov, FluxKind::Hll, FluxKind::Central] {
                    let flux = NumericalFlux::new(kind);
                    if flux.supports(&law).is_err() {
                        continue;
                    }
                    let g = numerical_flux(flux, &law, &w, &w).unwrap();
                    for (a, b) in f.iter().zip(&g) {
                        prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0), "{law:?} {kind:?}");
                    }
                }
                for vf in [VolumeFlux::Central, VolumeFlux::EntropyConservative] {
                    let mut g = vec![0.0; law.n_vars()];
                    vf.two_point(&law, &w, &w, &mut g).unwrap();
                    for (a, b) in f.iter().zip(&g) {
                        prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
                    }
                }
            }
        }

        #[test]
        fn scalar_advection_fluxes_coincide(a in -3.0..3.0f64, b in -3.0..3.0f64) {
            let law = Law::Advection { alpha: 2.0 };
            for kind in [FluxKind::Upwind, FluxKind::Godunov, FluxKind::Rusanov, FluxKind::Hll] {
                let f = numerical_flux(kind.into(), &law, &[a], &[b]).unwrap();
                prop_assert!((f[0] - 2.0 * a).abs() <= 1e-13 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn entropy_variables_are_gradients(raw in raw_state()) {
            for law in laws() {
                let w = valid_state(&law, raw);
                let mut v = vec![0.0; law.n_vars()];
                law.entropy_variables(&w, &mut v).unwrap();
                let fd = fd_entropy_variables(&law, &w);
                for (a, b) in v.iter().zip(&fd) {
                    prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{law:?}: {v:?} vs {fd:?}");
                }
            }
        }

        #[test]
        fn ec_fluxes_conserve_entropy(l in raw_state(), r in raw_state()) {
            for law in [Law::Burgers, EULER, Law::Advection { alpha: 2.0 }, Law::Maxwell { c: 1.5 }] {
                let wl = valid_state(&law, l);
                let wr = valid_state(&law, r);
                let n = law.n_vars();
                let mut f = vec![0.0; n];
                let mut g = vec![0.0; n];
                VolumeFlux::EntropyConservative.two_point(&law, &wl, &wr, &mut f).unwrap();
                VolumeFlux::EntropyConservative.two_point(&law, &wr, &wl, &mut g).unwrap();
                for (a, b) in f.iter().zip(&g) {
                    prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
                }
                let mut vl = vec![0.0; n];
                let mut vr = vec![0.0; n];
                law.entropy_variables(&wl, &mut vl).unwrap();
                law.entropy_variables(&wr, &mut vr).unwrap();
                let jump: f64 = (0..n).map(|k| (vr[k] - vl[k]) * f[k]).sum();
                let psi = law.entropy_potential(&wr).unwrap() - law.entropy_potential(&wl).unwrap();
                let scale = f.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                prop_assert!((jump - psi).abs() <= 1e-11 * scale, "{law:?}: {jump} vs {psi}");
            }
        }
    }
}
