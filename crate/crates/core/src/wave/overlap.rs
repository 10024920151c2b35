use super::{sample_hg, FieldGrid, ModeIndex};
use crate::beam::ComplexBeamParameter;
use crate::gates::QubitState;
use crate::{Error, Result, C64};

/// Above this residual power the reference beam is rejected.
pub const REFERENCE_RESIDUAL_LIMIT: f64 = 0.5;

/// Decomposition of a field on `HG₁₀` and `HG₀₁` of a reference beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapResult {
    /// `⟨HG₁₀|ψ⟩ / ‖ψ‖`.
    pub a: C64,
    /// `⟨HG₀₁|ψ⟩ / ‖ψ‖`.
    pub b: C64,
    /// `1 - |a|² - |b|²`.
    pub residual_power: f64,
    pub theta: f64,
    pub phi: f64,
    /// Global phase, `arg a` (or `arg b` when `a` vanishes).
    pub chi: f64,
    /// `|a a_t* + b b_t*|²` against the target, if one was given.
    pub fidelity: Option<f64>,
}

impl OverlapResult {
    /// Projected two-state part, renormalized.
    pub fn state(&self) -> Result<QubitState> {
        QubitState::normalized(self.a, self.b)
    }
}

/// Projects `field` on the stigmatic reference beam `q` in the lab frame.
pub fn modal_overlap(
    field: &FieldGrid,
    reference: &ComplexBeamParameter,
    target: Option<&QubitState>,
) -> Result<OverlapResult> {
    let spec = field.spec();
    let ctx = field.ctx();
    let h = sample_hg(ModeIndex::HG10, reference, reference, 0.0, &spec, ctx)?;
    let v = sample_hg(ModeIndex::HG01, reference, reference, 0.0, &spec, ctx)?;
    let p = field.power();
    if !(p > 0.0) {
        return Err(Error::InvalidReference(1.0));
    }
    let norm = 1.0 / p.sqrt();
    let a = h.inner(field)? * norm;
    let b = v.inner(field)? * norm;
    let residual_power = (1.0 - a.norm_sqr() - b.norm_sqr()).max(0.0);
    if residual_power > REFERENCE_RESIDUAL_LIMIT {
        return Err(Error::InvalidReference(residual_power));
    }
    let angles = QubitState::normalized(a, b)?.angles();
    let fidelity = target.map(|t| {
        let [at, bt] = t.amplitudes();
        (a * at.conj() + b * bt.conj()).norm_sqr()
    });
    Ok(OverlapResult {
        a,
        b,
        residual_power,
        theta: angles.theta,
        phi: angles.phi,
        chi: angles.chi,
        fidelity,
    })
}

/// `⟨Lz⟩` in units of ħ, from centred differences over the interior.
pub fn oam_expectation(field: &FieldGrid) -> f64 {
    let n = field.n();
    let xs = field.spec().coords();
    let inv2dx = 0.5 / field.dx();
    let s = field.samples();
    let (mut lz, mut p) = (0.0, 0.0);
    for iy in 1..n - 1 {
        for ix in 1..n - 1 {
            let psi = s[iy * n + ix];
            let dx = (s[iy * n + ix + 1] - s[iy * n + ix - 1]) * inv2dx;
            let dy = (s[(iy + 1) * n + ix] - s[(iy - 1) * n + ix]) * inv2dx;
            lz += (psi.conj() * (xs[ix] * dy - xs[iy] * dx)).im;
            p += psi.norm_sqr();
        }
    }
    if p > 0.0 {
        lz / p
    } else {
        0.0
    }
}
