//! Self-consistency audit of the spectral tables.
//!
//! For every degree and family the audit checks
//!
//! 1. single-layer boundary consistency `A^in(1) = A^out(1) = diag τ`;
//! 2. traction traces of the single-layer profiles (through the traction
//!    formula for radial-profile fields): jump equal to the identity and
//!    average equal to the tabulated K* eigenvalue;
//! 3. double-layer traces: jump `−Id`, continuous traction, and average
//!    equal to the tabulated K eigenvalue;
//! 4. agreement with brute-force quadrature of the Kelvin kernels at
//!    points off the sphere.
//!
//! Entries whose residual exceeds the tolerance of their check are flagged.

use serde::{Deserialize, Serialize};

use super::{
    adjoint_double_eigs, apply_double_layer, apply_single_layer, double_layer_matrix, single_layer_eigs,
    single_layer_matrix, LayerMatrix, Side, SpectraMode, SpectralTables,
};
use crate::harmonics::{traction_of_radial_field, Family, RadialTraces};
use crate::kernels_oracle::{audit_directions, dl_offsurface, mode_density, sl_offsurface, OffSurface, SurfaceRule};
use crate::material::LameParams;
use crate::quadrature::{rule_for_degree, QuadratureError, SphereFrame};
use crate::Vec3;

/// Tolerance for the algebraic checks (1–3).
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Tolerance for the quadrature comparison (4).
pub const ORACLE_TOL: f64 = 1e-7;

/// One line of the spectra audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraAuditEntry {
    pub identity: String,
    pub ell: usize,
    pub k: Family,
    pub residual: f64,
    pub rule_degree: Option<usize>,
    pub epsilon: Option<f64>,
    pub mode: SpectraMode,
    pub flagged: bool,
}

fn traction_of_column(m: &LayerMatrix, k: usize, p: &LameParams) -> Vec3 {
    let a = m.eval(1.0);
    let d = m.deriv(1.0);
    let t = RadialTraces { f: a[(0, k)], f_r: d[(0, k)], g: a[(1, k)], g_r: d[(1, k)], h: a[(2, k)], h_r: d[(2, k)] };
    Vec3::from(traction_of_radial_field(&t, m.ell, p))
}

fn unit(k: usize) -> Vec3 {
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    e
}

/// Run all checks for degrees `0..=ell_max`.
pub fn audit_spectra(
    ell_max: usize,
    p: &LameParams,
    mode: SpectraMode,
    rule_degree: usize,
) -> Result<Vec<SpectraAuditEntry>, QuadratureError> {
    let rule = rule_for_degree(rule_degree)?;
    let tables = SpectralTables::new(*p, mode, ell_max);
    let frame = SphereFrame::unit();
    let oracle = OffSurface::new(SurfaceRule::Lebedev(rule));
    let mut out = Vec::new();
    for ell in 0..=ell_max {
        let tau_s = single_layer_eigs(ell, p);
        let tau_k = adjoint_double_eigs(ell, p, mode);
        let s_in = single_layer_matrix(ell, p, Side::In);
        let s_out = single_layer_matrix(ell, p, Side::Out);
        let d_in = double_layer_matrix(ell, p, Side::In, mode);
        let d_out = double_layer_matrix(ell, p, Side::Out, mode);
        let families: &[Family] = if ell == 0 { &[Family::V] } else { &Family::ALL };
        for &fam in families {
            let k = fam.index();
            let e = unit(k);
            let mut push = |identity: &str, residual: f64, tol: f64, rule: Option<usize>| {
                out.push(SpectraAuditEntry {
                    identity: identity.to_string(),
                    ell,
                    k: fam,
                    residual,
                    rule_degree: rule,
                    epsilon: None,
                    mode,
                    flagged: !(residual <= tol),
                });
            };
            let diag = tau_s[k] * e;
            let r1 = (s_in.eval(1.0).column(k) - diag).norm().max((s_out.eval(1.0).column(k) - diag).norm());
            push("single_boundary_consistency", r1, 1e-14, None);

            let t_in = traction_of_column(&s_in, k, p);
            let t_out = traction_of_column(&s_out, k, p);
            push("single_traction_jump", (t_in - t_out - e).norm(), ALGEBRAIC_TOL, None);
            push("single_traction_average", (0.5 * (t_in + t_out) - tau_k[k] * e).norm(), ALGEBRAIC_TOL, None);

            let din1 = d_in.eval(1.0).column(k).into_owned();
            let dout1 = d_out.eval(1.0).column(k).into_owned();
            push("double_trace_jump", (din1 - dout1 + e).norm(), ALGEBRAIC_TOL, None);
            push("double_trace_average", (0.5 * (din1 + dout1) - tau_k[k] * e).norm(), ALGEBRAIC_TOL, None);
            let td = traction_of_column(&d_in, k, p) - traction_of_column(&d_out, k, p);
            push("double_traction_jump", td.norm(), ALGEBRAIC_TOL, None);

            let mut worst = [0.0f64; 4];
            for m in [0, ell as i64] {
                let density = mode_density(ell, m, fam);
                for s in audit_directions() {
                    for (side, rho) in [(0usize, 0.5), (1, 1.5)] {
                        let x = rho * s;
                        let sl = sl_offsurface(&density, &frame, p, &x, &oracle).expect("off surface");
                        let dl = dl_offsurface(&density, &frame, p, &x, &oracle).expect("off surface");
                        let sl_pred = apply_single_layer(&tables, &frame, &density, &x);
                        let dl_pred = apply_double_layer(&tables, &frame, &density, &x);
                        worst[side] = worst[side].max((sl - sl_pred).norm());
                        worst[2 + side] = worst[2 + side].max((dl - dl_pred).norm());
                    }
                }
            }
            let rd = Some(rule.degree());
            push("oracle_single_in", worst[0], ORACLE_TOL, rd);
            push("oracle_single_out", worst[1], ORACLE_TOL, rd);
            push("oracle_double_in", worst[2], ORACLE_TOL, rd);
            push("oracle_double_out", worst[3], ORACLE_TOL, rd);
        }
    }
    Ok(out)
}
