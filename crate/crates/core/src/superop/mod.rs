//! Super-operators as differential operators on `W_s`, a master-equation
//! DSL, and extraction of Fokker-Planck coefficients.

mod apply;
mod form;
mod fp;
mod parse;
pub mod poly;

pub use apply::{apply_form, AppliedField, STENCIL_HALF_WIDTH};
pub use form::{basic_form, left_right_commute_check, BasicOp, DiffForm, DivergenceForm, Exponents, Ordering};
pub use fp::{extract_fp, FpSpec, FpSpecJson, FpTerm, FpTermJson};
pub use parse::{parse_coefficient, parse_master_equation, Ladder, MasterEquation, MeqTerm, SuperOpWord, RESERVED};
pub use poly::Poly;

use crate::error::Result;

fn one_sided(l: Ladder, left: bool, ordering: &Ordering) -> DiffForm {
    let op = match (l, left) {
        (Ladder::A, true) => BasicOp::LeftA,
        (Ladder::Ad, true) => BasicOp::LeftAd,
        (Ladder::A, false) => BasicOp::RightA,
        (Ladder::Ad, false) => BasicOp::RightAd,
    };
    basic_form(op, ordering)
}

/// Form of `L₁⋯L_k ·` (`F[L₁·]∘⋯∘F[L_k·]`).
pub fn left_word_form(word: &[Ladder], ordering: &Ordering) -> Result<DiffForm> {
    let mut acc = DiffForm::identity(ordering.clone());
    for &l in word {
        acc = DiffForm::compose(&acc, &one_sided(l, true, ordering))?;
    }
    Ok(acc)
}

/// Form of `· R₁⋯R_m` (`F[·R_m]∘⋯∘F[·R₁]`: `R₁` acts first).
pub fn right_word_form(word: &[Ladder], ordering: &Ordering) -> Result<DiffForm> {
    let mut acc = DiffForm::identity(ordering.clone());
    for &r in word {
        acc = DiffForm::compose(&one_sided(r, false, ordering), &acc)?;
    }
    Ok(acc)
}

/// Form of `L ρ R`.
pub fn word_form(word: &SuperOpWord, ordering: &Ordering) -> Result<DiffForm> {
    DiffForm::compose(&left_word_form(&word.left, ordering)?, &right_word_form(&word.right, ordering)?)
}

/// `Σ c_k F[word_k]`, with parameters left symbolic.
pub fn compile_generator(meq: &MasterEquation, ordering: &Ordering) -> Result<DiffForm> {
    let mut acc = DiffForm::zero(ordering.clone());
    for t in &meq.terms {
        acc = acc.add(&word_form(&t.word, ordering)?.scale(&t.coeff))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DAMPED: &str =
        "-(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad) - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)";

    #[test]
    fn damped_oscillator_divergence_form() {
        let meq = parse_master_equation(DAMPED).unwrap();
        let f = compile_generator(&meq, &Ordering::Symbolic).unwrap();
        let g = Poly::var("g");
        let n = Poly::var("N");
        let s = Poly::var("s");
        let half_g = &g * &Poly::ratio(1, 2);
        let d = f.divergence_form();
        let diffusion = &half_g * &(&(&(&n * &Poly::int(2)) + &Poly::one()) - &s);
        let want = [((1, 0, 1, 0), half_g.clone()), ((0, 1, 0, 1), half_g.clone()), ((0, 0, 1, 1), diffusion)];
        assert_eq!(d.terms.len(), 3, "{d}");
        for (e, c) in want {
            assert_eq!(d.coeff(e), c);
        }
        // normal order: γ/2 (2 + α∂α + ᾱ∂ᾱ) + diffusion
        assert_eq!(f.coeff((0, 0, 0, 0)), g);
        assert_eq!(f.coeff((1, 0, 1, 0)), half_g);
    }

    #[test]
    fn rotation_generator() {
        let meq = parse_master_equation("-i*(ad*a*rho - rho*ad*a)").unwrap();
        let f = compile_generator(&meq, &Ordering::Symbolic).unwrap();
        let i = Poly::imag_unit();
        let want = DiffForm::zero(Ordering::Symbolic)
            .with_term((1, 0, 1, 0), i.clone())
            .with_term((0, 1, 0, 1), -&i);
        assert_eq!(f, want);
        let d = f.divergence_form();
        assert!(d.coeff((0, 0, 0, 0)).is_zero());
    }

    #[test]
    fn zero_generator() {
        let meq = parse_master_equation("a*rho - a*rho").unwrap();
        assert!(compile_generator(&meq, &Ordering::Symbolic).unwrap().is_zero());
        let meq = parse_master_equation("").unwrap();
        assert!(compile_generator(&meq, &Ordering::Symbolic).unwrap().is_zero());
    }

    #[test]
    fn basic_rows_from_words() {
        use Ladder::*;
        let o = Ordering::Symbolic;
        let w = |l: Vec<Ladder>, r: Vec<Ladder>| word_form(&SuperOpWord { left: l, right: r }, &o).unwrap();
        assert_eq!(w(vec![Ad, A], vec![]), basic_form(BasicOp::LeftNumber, &o));
        assert_eq!(w(vec![], vec![Ad, A]), basic_form(BasicOp::RightNumber, &o));
        assert_eq!(w(vec![A], vec![Ad]), basic_form(BasicOp::ASandwichAd, &o));
        assert_eq!(w(vec![Ad], vec![A]), basic_form(BasicOp::AdSandwichA, &o));
    }

    fn ladder() -> impl Strategy<Value = Ladder> {
        prop_oneof![Just(Ladder::A), Just(Ladder::Ad)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn split_composition_matches_full_word(
            left in prop::collection::vec(ladder(), 0..=4),
            right in prop::collection::vec(ladder(), 0..=4),
            kl in 0usize..=4,
            kr in 0usize..=4,
        ) {
            let o = Ordering::Symbolic;
            let full = word_form(&SuperOpWord { left: left.clone(), right: right.clone() }, &o).unwrap();
            let kl = kl.min(left.len());
            let kr = kr.min(right.len());
            // L = L1 L2 acts as L1∘L2; ρ R1 R2 as R2∘R1
            let l = DiffForm::compose(
                &left_word_form(&left[..kl], &o).unwrap(),
                &left_word_form(&left[kl..], &o).unwrap(),
            ).unwrap();
            let r = DiffForm::compose(
                &right_word_form(&right[kr..], &o).unwrap(),
                &right_word_form(&right[..kr], &o).unwrap(),
            ).unwrap();
            prop_assert_eq!(&DiffForm::compose(&r, &l).unwrap(), &full);
            prop_assert_eq!(DiffForm::compose(&l, &r).unwrap(), full);
        }

        #[test]
        fn adjoint_maps_left_word_to_reversed_daggered_right_word(
            word in prop::collection::vec(ladder(), 0..=4),
        ) {
            let o = Ordering::Symbolic;
            let left = left_word_form(&word, &o).unwrap();
            // (L₁⋯L_k)† = L_k†⋯L₁†
            let dag: Vec<Ladder> = word.iter().rev().map(|l| l.dagger()).collect();
            prop_assert_eq!(left.adjoint(), right_word_form(&dag, &o).unwrap());
        }
    }
}
