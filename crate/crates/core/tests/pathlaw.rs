use std::collections::BTreeMap;

use proptest::prelude::*;
use sce_core::noise::NoiseModel;
use sce_core::pathlaw::*;
use sce_core::scheme::{FluidState, Solver, SolverConfig};
use sce_core::thermo::ThermoParams;
use sce_core::torus::{GridSpec, SpectralField, SpectralVectorField};
use sce_core::SceError;

fn p(w: &str) -> Path {
    w.chars().map(|c| c.to_string()).collect()
}

fn law(atoms: &[(&str, f64)]) -> PathLaw {
    PathLaw::new(atoms.iter().map(|(w, q)| (p(w), *q)).collect()).unwrap()
}

#[test]
fn construction_validates_input() {
    assert!(PathLaw::new(vec![]).is_err());
    assert!(PathLaw::new(vec![(vec![], 1.0)]).is_err());
    assert!(PathLaw::new(vec![(p("ab"), 0.5), (p("abc"), 0.5)]).is_err());
    assert!(PathLaw::new(vec![(p("ab"), 0.5), (p("aa"), 0.4)]).is_err());
    assert!(PathLaw::new(vec![(p("ab"), -0.1), (p("aa"), 1.1)]).is_err());
    assert!(PathLaw::new(vec![(vec!["a,b".into(), "c".into()], 1.0)]).is_err());
    let merged = law(&[("ab", 0.25), ("ab", 0.25), ("aa", 0.5), ("bb", 0.0)]);
    assert_eq!(merged.support().len(), 2);
    assert_eq!(merged.prob(&p("ab")), 0.5);
    assert_eq!(merged.steps(), 1);
}

#[test]
fn disintegration_by_hand() {
    let l = law(&[("aab", 0.2), ("aba", 0.3), ("abb", 0.5)]);
    let d = l.disintegrate(1).unwrap();
    assert_eq!(d.len(), 2);
    assert!(d[&p("aa")].approx_eq(&law(&[("ab", 1.0)]), 1e-15));
    // P(ξ₂ = a | ξ₀ξ₁ = ab) = 0.3 / 0.8
    assert!(d[&p("ab")].approx_eq(&law(&[("ba", 0.375), ("bb", 0.625)]), 1e-15));
    assert!(l.reconstruct(1, &d).unwrap().approx_eq(&l, 1e-15));
    let marg = l.prefix_marginal(1).unwrap();
    assert!((marg[&p("ab")] - 0.8).abs() < 1e-15);
    assert!(l.disintegrate(3).is_err());
}

#[test]
fn reconstruction_checks_the_kernel() {
    let l = law(&[("aab", 0.2), ("abb", 0.8)]);
    let mut q = BTreeMap::new();
    q.insert(p("aa"), law(&[("ab", 1.0)]));
    assert!(l.reconstruct(1, &q).is_err());
    q.insert(p("ab"), law(&[("ab", 1.0)]));
    assert!(l.reconstruct(1, &q).is_err());
    q.insert(p("ab"), law(&[("ba", 1.0)]));
    let glued = l.reconstruct(1, &q).unwrap();
    assert!(glued.approx_eq(&law(&[("aab", 0.2), ("aba", 0.8)]), 1e-15));
}

#[test]
fn shift_restrict_and_mixture() {
    let l = law(&[("abc", 0.5), ("bbc", 0.5)]);
    assert!(l.shift(1).unwrap().approx_eq(&law(&[("bc", 1.0)]), 0.0));
    assert!(l.shift(3).is_err());
    assert!(l.restrict(0).unwrap().approx_eq(&law(&[("a", 0.5), ("b", 0.5)]), 0.0));
    let m = l.mixture(0.25, &law(&[("ccc", 1.0)])).unwrap();
    assert!((m.prob(&p("ccc")) - 0.75).abs() < 1e-15);
    assert!(l.mixture(1.5, &l).is_err());
    assert!(l.mixture(0.5, &law(&[("cc", 1.0)])).is_err());
    let v = l.discounted(0.0, &|s| if s == "c" { 1.0 } else { 0.0 });
    assert!((v - 1.0).abs() < 1e-15);
}

#[test]
fn text_format_round_trips_and_reports_errors() {
    let l = law(&[("aab", 0.1), ("aba", 0.2), ("abb", 0.7)]);
    let text = l.to_text();
    assert_eq!(text.lines().next().unwrap(), "a,a,b,1e-1");
    let back = PathLaw::from_text(&format!("# comment\n\n{text}")).unwrap();
    assert_eq!(back, l);
    assert!(matches!(PathLaw::from_text("a,b,x"), Err(SceError::Parse(_))));
    assert!(matches!(PathLaw::from_text("1.0"), Err(SceError::Parse(_))));
}

#[test]
fn closed_toy_selects_the_unique_markov_maximiser() {
    let toy = closed_toy();
    toy.check_closure().unwrap();
    let f = [Functional::new(0.1, closed_toy_preference)];
    let sel = krylov_select(&toy, &f).unwrap();
    assert_eq!(sel["a"], PathLaw::word("abc").unwrap());
    assert_eq!(sel["b"], PathLaw::word("bcc").unwrap());
    assert_eq!(sel["c"], PathLaw::word("ccc").unwrap());
    // exhaustive oracle over the 12 selections
    let all = all_selections(&toy);
    assert_eq!(all.len(), 12);
    let markov: Vec<_> = all.iter().filter(|s| is_markov(s)).collect();
    assert!(markov.len() > 1);
    let score = |s: &Selection, y: &str| s[y].discounted(0.1, &closed_toy_preference);
    for s in &all {
        for y in ["a", "b", "c"] {
            assert!(score(s, y) <= score(&sel, y) + PROB_TOL);
        }
    }
    let best: Vec<_> = markov.iter().filter(|s| ***s == sel).collect();
    assert_eq!(best.len(), 1);
}

#[test]
fn open_toy_has_one_markov_selection_but_is_rejected() {
    let toy = open_toy();
    let markov: Vec<Selection> = all_selections(&toy).into_iter().filter(is_markov).collect();
    assert_eq!(markov.len(), 1);
    assert_eq!(markov[0]["a"], PathLaw::word("aba").unwrap());
    assert_eq!(markov[0]["b"], PathLaw::word("bab").unwrap());
    let err = toy.check_closure().unwrap_err().to_string();
    assert!(err.contains("property violated"), "{err}");
    assert!(krylov_select(&toy, &[Functional::new(0.1, |_| 0.0)]).is_err());
}

#[test]
fn candidate_map_validation() {
    let mut map = CandidateMap::new();
    assert!(map.insert("a", PathLaw::word("ba").unwrap()).is_err());
    map.insert("a", PathLaw::word("ab").unwrap()).unwrap();
    map.insert("a", PathLaw::word("aa").unwrap()).unwrap();
    assert!(map.insert("a", PathLaw::word("aaa").unwrap()).is_err());
    map.add_mixture("a", 0, 1, 0.5).unwrap();
    assert_eq!(map.get("a").unwrap().len(), 3);
    // C(b) is missing, so the disintegration property cannot hold
    assert!(map.check_closure().is_err());
}

#[test]
fn markov_check_hand_cases() {
    let mut sel = Selection::new();
    sel.insert("a".into(), PathLaw::word("abb").unwrap());
    sel.insert("b".into(), PathLaw::word("bbb").unwrap());
    assert!(is_markov(&sel));
    sel.insert("b".into(), PathLaw::word("bab").unwrap());
    assert!(!is_markov(&sel));
}

fn state(g: GridSpec, a: f64) -> FluidState {
    let rho = SpectralField::from_fn(g, |x| 1.0 + a * (2.0 * std::f64::consts::PI * x[0]).cos());
    FluidState::from_velocity(rho, &SpectralVectorField::constant(g, [a, 0.0, 0.0]), SpectralField::zeros(g), 0.0).unwrap()
}

#[test]
fn state_metric_and_alphabet() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let (x, y) = (state(g, 0.1), state(g, 0.3));
    assert_eq!(d_f(&x, &x).unwrap(), 0.0);
    assert!((d_f(&x, &y).unwrap() - d_f(&y, &x).unwrap()).abs() < 1e-15);
    let mut alpha = Alphabet::new(1e-3);
    assert_eq!(alpha.assign(&x).unwrap(), "q0");
    assert_eq!(alpha.assign(&y).unwrap(), "q1");
    assert_eq!(alpha.assign(&state(g, 0.1 + 1e-6)).unwrap(), "q0");
    let vacuum = FluidState {
        rho: SpectralField::zeros(g),
        mom: SpectralVectorField::zeros(g),
        entropy: SpectralField::zeros(g),
        time: 0.0,
    };
    assert_eq!(alpha.assign(&vacuum).unwrap(), VACUUM_LABEL);
    assert_eq!(alpha.len(), 2);
    assert_eq!(alpha.centre("q1"), Some(&y));
}

#[test]
fn empirical_law_of_deterministic_runs_is_a_point_mass() {
    let g = GridSpec::new(1, 16, 5).unwrap();
    let solver = Solver::new(SolverConfig::new(1e-3, ThermoParams::new(1.4).unwrap()), NoiseModel::none(g)).unwrap();
    let t = solver.run_trajectory(&state(g, 0.1), 0.005, 0).unwrap();
    let mut alpha = Alphabet::new(1.0);
    let l = empirical_law(&[t.clone(), t.clone(), t], &[0, 2, 5], &mut alpha).unwrap();
    assert!(l.approx_eq(&PathLaw::delta(vec!["q0".into(); 3]).unwrap(), 1e-15));
    assert!(empirical_law(&[], &[0], &mut alpha).is_err());
}

fn arb_law() -> impl Strategy<Value = PathLaw> {
    prop::collection::vec((prop::collection::vec(0u8..3, 4), 0.01f64..1.0), 1..12).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms = atoms
            .into_iter()
            .map(|(w, q)| (w.iter().map(|c| ((b'a' + c) as char).to_string()).collect(), q / total))
            .collect();
        PathLaw::new(atoms).unwrap()
    })
}

proptest! {
    #[test]
    fn disintegrate_then_reconstruct_is_identity(l in arb_law(), t in 0usize..=3) {
        let glued = l.reconstruct(t, &l.disintegrate(t).unwrap()).unwrap();
        prop_assert!(glued.approx_eq(&l, 1e-12));
    }

    #[test]
    fn shifts_compose(l in arb_law(), s in 0usize..=3, t in 0usize..=3) {
        prop_assume!(s + t <= 3);
        prop_assert!(l.shift(s).unwrap().shift(t).unwrap().approx_eq(&l.shift(s + t).unwrap(), 1e-12));
        let a = l.shift(s).unwrap().restrict(3 - s - t).unwrap();
        let b = l.restrict(3 - t).unwrap().shift(s).unwrap();
        prop_assert!(a.approx_eq(&b, 1e-12));
    }

    #[test]
    fn text_round_trip_is_exact(l in arb_law()) {
        prop_assert_eq!(PathLaw::from_text(&l.to_text()).unwrap(), l);
    }

    #[test]
    fn mixtures_keep_unit_mass(a in arb_law(), b in arb_law(), lambda in 0.0f64..=1.0) {
        let m = a.mixture(lambda, &b).unwrap();
        let total: f64 = m.support().values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
