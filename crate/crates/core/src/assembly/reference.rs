use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::kernels::LawKind;
use crate::linalg::{add_block, Matrix};
use crate::spaces::{Basis, Field, FieldSpace};

use super::{Block, BlockLayout, FieldSpaces, Formulation, ModelConfig, Scheme, SemidiscreteSystem};

/// Local shape functions on cell `e` at reference point `t ∈ [0, 1]`: raw index, value
/// and derivative.
fn shape(basis: Basis, e: usize, t: f64, h: f64) -> Vec<(usize, f64, f64)> {
    match basis {
        Basis::P1 => vec![(e, 1.0 - t, -1.0 / h), (e + 1, t, 1.0 / h)],
        Basis::P0 => vec![(e, 1.0, 0.0)],
        Basis::Trig => unreachable!("reference assembly is finite-element only"),
    }
}

/// `[i][j] = ∫ Dᵃ testᵢ · Dᵇ trialⱼ` on the raw bases, by two-point Gauss quadrature per
/// cell (exact for the polynomial degrees involved).
fn raw_form(test: &FieldSpace, d_test: bool, trial: &FieldSpace, d_trial: bool) -> Matrix {
    let mesh = test.mesh();
    let h = mesh.spacing();
    let g = 0.5 / 3f64.sqrt();
    let mut out = Mat::zeros(test.raw_dim(), trial.raw_dim());
    for e in 0..mesh.cells() {
        for t in [0.5 - g, 0.5 + g] {
            for (i, vi, di) in shape(test.basis(), e, t, h) {
                for (j, vj, dj) in shape(trial.basis(), e, t, h) {
                    let a = if d_test { di } else { vi };
                    let b = if d_trial { dj } else { vj };
                    out[(i, j)] += 0.5 * h * a * b;
                }
            }
        }
    }
    out
}

/// Restricted form `Rₜᵀ X R_f`.
fn form(test: &FieldSpace, d_test: bool, trial: &FieldSpace, d_trial: bool) -> Matrix {
    test.restriction().transpose() * raw_form(test, d_test, trial, d_trial) * trial.restriction()
}

/// `(w', z')` for P1 temperatures; for piecewise constants the mixed form
/// `Bᵀ M_q⁻¹ B` with `B[j][i] = ∫ wᵢ qⱼ'`, solved here by LU.
fn conduction(spaces: &FieldSpaces, field: Field) -> Result<Matrix> {
    let temp = spaces.get(field);
    if temp.basis() == Basis::P1 {
        return Ok(form(temp, true, temp, true));
    }
    let q = spaces.flux_space(field)?;
    let b = form(&q, true, temp, false);
    let mq = form(&q, false, &q, false);
    let x = mq.partial_piv_lu().solve(&b);
    Ok(b.transpose() * x)
}

/// Fourier/Fourier system written out directly from the weak form, row by row, without
/// the history-mode machinery. Used to cross-check [`super::assemble`].
pub fn assemble_fourier_reference(config: &ModelConfig) -> Result<SemidiscreteSystem> {
    config.validate()?;
    if config.law_theta.kind() != LawKind::Fourier || config.law_xi.kind() != LawKind::Fourier {
        return Err(Error::Assembly("reference assembly needs Fourier laws on both channels".into()));
    }
    if config.discretization.scheme == Scheme::Trig || !config.thermal {
        return Err(Error::Assembly("reference assembly uses finite elements and the thermal fields".into()));
    }
    let p = &config.params;
    let s = FieldSpaces::new(config)?;
    let (sp, sr, st, sx) = (&s.displacement, &s.rotation, &s.shear_temperature, &s.bending_temperature);

    let layout = BlockLayout::new(&[
        (Block::Displacement, sp.dim()),
        (Block::Velocity, sp.dim()),
        (Block::Rotation, sr.dim()),
        (Block::AngularVelocity, sr.dim()),
        (Block::ShearTemperature, st.dim()),
        (Block::BendingTemperature, sx.dim()),
    ])?;
    let n = layout.dim();
    let at = |b: Block| layout.range(b).expect("block in layout").offset;
    let (o_phi, o_v, o_psi, o_w, o_th, o_xi) = (
        at(Block::Displacement),
        at(Block::Velocity),
        at(Block::Rotation),
        at(Block::AngularVelocity),
        at(Block::ShearTemperature),
        at(Block::BendingTemperature),
    );

    // Energy: k‖φ'+ψ‖² + b‖ψ'‖² + ρ₁‖Φ‖² + ρ₂‖Ψ‖² + ρ₃‖θ‖² + ρ₄‖ξ‖².
    let k_pp = form(sp, true, sp, true);
    let c_rp = form(sr, false, sp, true); // ∫ φⱼ' ψᵢ
    let c_pr = c_rp.transpose().to_owned();
    let e_rr = &form(sr, false, sr, false) * p.k + &form(sr, true, sr, true) * p.b;
    let mut m = Mat::zeros(n, n);
    add_block(&mut m, o_phi, o_phi, k_pp.as_ref(), p.k);
    add_block(&mut m, o_phi, o_psi, c_pr.as_ref(), p.k);
    add_block(&mut m, o_psi, o_phi, c_rp.as_ref(), p.k);
    add_block(&mut m, o_psi, o_psi, e_rr.as_ref(), 1.0);
    add_block(&mut m, o_v, o_v, form(sp, false, sp, false).as_ref(), p.rho1);
    add_block(&mut m, o_w, o_w, form(sr, false, sr, false).as_ref(), p.rho2);
    add_block(&mut m, o_th, o_th, form(st, false, st, false).as_ref(), p.rho3);
    add_block(&mut m, o_xi, o_xi, form(sx, false, sx, false).as_ref(), p.rho4);

    let k_th = conduction(&s, Field::ShearTemperature)?;
    let k_xi = conduction(&s, Field::BendingTemperature)?;

    let mut a = Mat::zeros(n, n);
    // Position rows, tested against the elastic energy: E (φ, ψ)_t = E (Φ, Ψ).
    add_block(&mut a, o_phi, o_v, k_pp.as_ref(), p.k);
    add_block(&mut a, o_phi, o_w, c_pr.as_ref(), p.k);
    add_block(&mut a, o_psi, o_v, c_rp.as_ref(), p.k);
    add_block(&mut a, o_psi, o_w, e_rr.as_ref(), 1.0);
    // ρ₁(Φ_t, v) = -k(φ'+ψ, v') + γ(θ, v')
    add_block(&mut a, o_v, o_phi, k_pp.as_ref(), -p.k);
    add_block(&mut a, o_v, o_psi, c_pr.as_ref(), -p.k);
    add_block(&mut a, o_v, o_th, form(sp, true, st, false).as_ref(), p.gamma);
    // ρ₂(Ψ_t, v) = -b(ψ', v') - k(φ'+ψ, v) + γ(θ, v) + σ(ξ, v')
    add_block(&mut a, o_w, o_phi, c_rp.as_ref(), -p.k);
    add_block(&mut a, o_w, o_psi, e_rr.as_ref(), -1.0);
    add_block(&mut a, o_w, o_th, form(sr, false, st, false).as_ref(), p.gamma);
    add_block(&mut a, o_w, o_xi, form(sr, true, sx, false).as_ref(), p.sigma);
    // ρ₃(θ_t, w) = -ϖ₁(θ', w') - γ(Φ' + Ψ, w)
    add_block(&mut a, o_th, o_th, k_th.as_ref(), -p.varpi1);
    add_block(&mut a, o_th, o_v, form(st, false, sp, true).as_ref(), -p.gamma);
    add_block(&mut a, o_th, o_w, form(st, false, sr, false).as_ref(), -p.gamma);
    // ρ₄(ξ_t, z) = -ϖ₂(ξ', z') - σ(Ψ', z)
    add_block(&mut a, o_xi, o_xi, k_xi.as_ref(), -p.varpi2);
    add_block(&mut a, o_xi, o_w, form(sx, false, sr, true).as_ref(), -p.sigma);

    let mut d = Mat::zeros(n, n);
    add_block(&mut d, o_th, o_th, k_th.as_ref(), p.varpi1);
    add_block(&mut d, o_xi, o_xi, k_xi.as_ref(), p.varpi2);

    SemidiscreteSystem::new(m, a, d, layout, config.clone(), Formulation::FourierReference, s, None, None)
}
