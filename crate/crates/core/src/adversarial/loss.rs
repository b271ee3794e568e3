//! Minimax objective `L(θ, φ) = Σ_k φ_k (⟨P_k⟩_T − ⟨P_k⟩_G(θ))` on Choi
//! output states, its gradients and the exact fidelity monitor.

use std::f64::consts::FRAC_PI_2;

use crate::adversarial::discriminator::DiscriminatorSpec;
use crate::ansatz::{circuit_unitary, GeneratorSpec};
use crate::error::{Error, Result};
use crate::sim::{
    apply_generator_rows, choi_input_state, choi_output_state, fidelity_hs, projected_fidelity,
    rotate_rows, with_idle_ancilla, PauliSum, Statevector, UnitaryMatrix, C64,
};

/// Fixed pieces of one adversarial game: target, generator layout and
/// discriminator term family, plus the target-side expectations.
#[derive(Clone, Debug)]
pub struct AdversarialContext {
    target: UnitaryMatrix,
    generator: GeneratorSpec,
    discriminator: DiscriminatorSpec,
    terms: PauliSum,
    target_state: Statevector,
    target_expectations: Vec<f64>,
}

impl AdversarialContext {
    pub fn new(
        target: UnitaryMatrix,
        generator: GeneratorSpec,
        discriminator: DiscriminatorSpec,
    ) -> Result<Self> {
        let n_system = generator.n_system_qubits();
        if target.dim() != 1 << n_system {
            return Err(Error::Dimension(format!(
                "target dimension {} does not match {} system qubits",
                target.dim(),
                n_system
            )));
        }
        let with_ancilla = generator.has_ancilla();
        let register = 2 * n_system + usize::from(with_ancilla);
        if discriminator.n_qubits() != register {
            return Err(Error::Dimension(format!(
                "discriminator acts on {} qubits, Choi register has {}",
                discriminator.n_qubits(),
                register
            )));
        }
        let target_state = if with_ancilla {
            choi_output_state(&with_idle_ancilla(&target), true)?
        } else {
            choi_output_state(&target, false)?
        };
        let terms = PauliSum::new(discriminator.terms())?;
        let target_expectations = terms.expectations(&target_state)?;
        Ok(Self {
            target,
            generator,
            discriminator,
            terms,
            target_state,
            target_expectations,
        })
    }

    pub fn target(&self) -> &UnitaryMatrix {
        &self.target
    }

    pub fn generator(&self) -> &GeneratorSpec {
        &self.generator
    }

    pub fn discriminator(&self) -> &DiscriminatorSpec {
        &self.discriminator
    }

    pub fn target_state(&self) -> &Statevector {
        &self.target_state
    }

    pub fn target_expectations(&self) -> &[f64] {
        &self.target_expectations
    }

    fn check(&self, theta: &[f64], phi: &[f64]) -> Result<()> {
        self.generator.check_params(theta)?;
        if phi.len() != self.discriminator.len() {
            return Err(Error::ParamCount {
                expected: self.discriminator.len(),
                got: phi.len(),
            });
        }
        Ok(())
    }

    /// Choi output state of the generator, via its unitary.
    pub fn generator_state(&self, theta: &[f64]) -> Result<Statevector> {
        let u = circuit_unitary(&self.generator, theta)?;
        choi_output_state(&u, self.generator.has_ancilla())
    }

    /// Exact fidelity against the target: the trace formula, through the
    /// ancilla-|0⟩ block when the generator carries an ancilla.
    pub fn fidelity(&self, theta: &[f64]) -> Result<f64> {
        let u = circuit_unitary(&self.generator, theta)?;
        self.fidelity_of(&u)
    }

    pub fn fidelity_of(&self, generated: &UnitaryMatrix) -> Result<f64> {
        if self.generator.has_ancilla() {
            projected_fidelity(generated, &self.target)
        } else {
            fidelity_hs(generated, &self.target)
        }
    }

    /// `L` from precomputed generator expectations.
    pub fn loss_from_expectations(&self, phi: &[f64], generated: &[f64]) -> f64 {
        phi.iter()
            .zip(&self.target_expectations)
            .zip(generated)
            .map(|((w, t), g)| w * (t - g))
            .sum()
    }

    /// `⟨P_k⟩` on a generator Choi state, for every discriminator term.
    pub fn generator_expectations(&self, state: &Statevector) -> Result<Vec<f64>> {
        self.terms.expectations(state)
    }
}

pub fn loss_value(theta: &[f64], phi: &[f64], ctx: &AdversarialContext) -> Result<f64> {
    ctx.check(theta, phi)?;
    let state = ctx.generator_state(theta)?;
    let generated = ctx.generator_expectations(&state)?;
    Ok(ctx.loss_from_expectations(phi, &generated))
}

/// `∂L/∂φ_k = ⟨P_k⟩_T − ⟨P_k⟩_G`; independent of `φ`.
pub fn grad_discriminator(theta: &[f64], phi: &[f64], ctx: &AdversarialContext) -> Result<Vec<f64>> {
    ctx.check(theta, phi)?;
    let state = ctx.generator_state(theta)?;
    Ok(ctx
        .target_expectations
        .iter()
        .zip(ctx.generator_expectations(&state)?)
        .map(|(t, g)| t - g)
        .collect())
}

/// Parameter-shift gradient: `[L(θ_k + π/2) − L(θ_k − π/2)] / 2`.
pub fn grad_generator(theta: &[f64], phi: &[f64], ctx: &AdversarialContext) -> Result<Vec<f64>> {
    ctx.check(theta, phi)?;
    let mut shifted = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            shifted[k] = theta[k] + FRAC_PI_2;
            let plus = loss_value(&shifted, phi, ctx)?;
            shifted[k] = theta[k] - FRAC_PI_2;
            let minus = loss_value(&shifted, phi, ctx)?;
            shifted[k] = theta[k];
            Ok(0.5 * (plus - minus))
        })
        .collect()
}

/// Same gradient as [`grad_generator`] by reverse-mode sweep over the Choi
/// register: one forward pass, then each gate is undone on both the state and
/// the co-state `D(φ)|ψ⟩`, reading off `Im⟨λ|P_k|ψ_k⟩` on the way.
pub fn grad_generator_adjoint(
    theta: &[f64],
    phi: &[f64],
    ctx: &AdversarialContext,
) -> Result<Vec<f64>> {
    ctx.check(theta, phi)?;
    let spec = &ctx.generator;
    let n_sys = spec.n_system_qubits();
    let mut psi = choi_input_state(n_sys, spec.has_ancilla());
    let n_reg = psi.n_qubits();
    let placed: Vec<([usize; 2], usize)> = spec
        .gates()
        .iter()
        .map(|g| {
            let mut q = [0; 2];
            for (slot, &gq) in q.iter_mut().zip(&g.qubits) {
                *slot = n_sys + gq;
            }
            (q, g.qubits.len())
        })
        .collect();

    for (g, ((q, arity), &angle)) in spec.gates().iter().zip(placed.iter().zip(theta)) {
        rotate_rows(psi.amplitudes_mut(), n_reg, 1, g.kind, &q[..*arity], angle);
    }

    let mut lambda = ctx.terms.apply_weighted(phi, &psi)?;

    let mut scratch = vec![C64::new(0.0, 0.0); psi.dim()];
    let mut grad = vec![0.0; theta.len()];
    for k in (0..theta.len()).rev() {
        let g = &spec.gates()[k];
        let (q, arity) = &placed[k];
        let qs = &q[..*arity];
        scratch.copy_from_slice(psi.amplitudes());
        apply_generator_rows(&mut scratch, n_reg, 1, g.kind, qs);
        let overlap: C64 = lambda.iter().zip(&scratch).map(|(l, s)| l.conj() * s).sum();
        // L = const − ⟨ψ|D|ψ⟩
        grad[k] = -overlap.im;
        rotate_rows(psi.amplitudes_mut(), n_reg, 1, g.kind, qs, -theta[k]);
        rotate_rows(&mut lambda, n_reg, 1, g.kind, qs, -theta[k]);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::discriminator::build_discriminator;
    use crate::ansatz::{build_generator_spec, init_params, AncillaConfig, InitMode};
    use crate::sim::target_unitary_zzz;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn context(config: AncillaConfig) -> AdversarialContext {
        let gen = build_generator_spec(3, 2, config).unwrap();
        let disc = build_discriminator(6 + usize::from(config.has_ancilla()), 2).unwrap();
        AdversarialContext::new(target_unitary_zzz(1.0), gen, disc).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_loss_and_gradient() {
        let ctx = context(AncillaConfig::None);
        let theta = init_params(ctx.generator(), InitMode::Random, &mut ChaCha8Rng::seed_from_u64(1));
        let phi = vec![0.0; ctx.discriminator().len()];
        assert_eq!(loss_value(&theta, &phi, &ctx).unwrap(), 0.0);
        assert!(grad_generator(&theta, &phi, &ctx).unwrap().iter().all(|&g| g == 0.0));
        assert!(grad_generator_adjoint(&theta, &phi, &ctx).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn adjoint_matches_shift_rule() {
        for config in [AncillaConfig::None, AncillaConfig::A3] {
            let ctx = context(config);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let theta = init_params(ctx.generator(), InitMode::Random, &mut rng);
            let phi: Vec<f64> = (0..ctx.discriminator().len())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let a = grad_generator(&theta, &phi, &ctx).unwrap();
            let b = grad_generator_adjoint(&theta, &phi, &ctx).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-11, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn shape_errors() {
        let ctx = context(AncillaConfig::None);
        assert!(matches!(
            loss_value(&[0.0; 3], &vec![0.0; ctx.discriminator().len()], &ctx),
            Err(Error::ParamCount { .. })
        ));
        assert!(matches!(
            loss_value(&[0.0; 16], &[0.0; 2], &ctx),
            Err(Error::ParamCount { .. })
        ));
        let gen = build_generator_spec(3, 1, AncillaConfig::A1).unwrap();
        let disc = build_discriminator(6, 2).unwrap();
        assert!(AdversarialContext::new(target_unitary_zzz(1.0), gen.clone(), disc).is_err());
        let disc = build_discriminator(7, 2).unwrap();
        assert!(AdversarialContext::new(UnitaryMatrix::identity(4), gen, disc).is_err());
    }
}
