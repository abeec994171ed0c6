use super::*;
use crate::model::ModelSpec;
use crate::spectra;
use crate::words::{enumerate_words, DEFAULT_ENUMERATION_BUDGET};

const BUDGET: u128 = DEFAULT_ENUMERATION_BUDGET;

fn bernoulli() -> PotentialModel {
    PotentialModel::normalize(&ModelSpec::bernoulli(&[2.0 / 3.0, 1.0 / 3.0])).unwrap()
}

fn markov() -> PotentialModel {
    PotentialModel::normalize(&ModelSpec::markov(&[vec![0.2, 0.8], vec![0.4, 0.6]])).unwrap()
}

fn uniform() -> PotentialModel {
    PotentialModel::normalize(&ModelSpec::uniform(2)).unwrap()
}

fn memory_two() -> PotentialModel {
    PotentialModel::normalize(&ModelSpec::potential(
        2,
        2,
        vec![0.3, -0.2, 0.5, 0.1, -0.7, 0.0, 0.2, 0.4],
    ))
    .unwrap()
}

fn w(s: &str) -> Word {
    Word::parse(s, 2).unwrap()
}

#[test]
fn zeta_examples() {
    assert!((zeta(&bernoulli(), &w("00")).zeta - 1.0 / 3.0).abs() < 1e-15);
    assert!((zeta(&bernoulli(), &w("01")).zeta - 7.0 / 9.0).abs() < 1e-15);
    assert!((zeta(&uniform(), &w("0")).zeta - 0.5).abs() < 1e-15);
    assert_eq!(zeta(&bernoulli(), &w("010")).tau, Period(2));
}

#[test]
fn geometric_return_law_of_a_symbol() {
    let law = return_law(&uniform(), &w("0"), LawMode::Return).unwrap();
    let p = law.pmf(4);
    assert_eq!(p[0], 0.0);
    assert!((p[1] - 0.5).abs() < 1e-15 && (p[2] - 0.25).abs() < 1e-15);
    let m = law.moment(-1.0).unwrap();
    assert!((m.value - 2f64.ln()).abs() < 1e-12, "{m:?}");
    assert_eq!(law.moment(0.0).unwrap().value, 1.0);
}

#[test]
fn kac_and_minimal_shift() {
    for model in [bernoulli(), markov(), memory_two()] {
        for n in 1..=6 {
            for word in enumerate_words(2, n, BUDGET).unwrap() {
                let law = return_law(&model, &word, LawMode::Return).unwrap();
                let m = law.moment(1.0).unwrap();
                let mu = model.cylinder_measure(&word).exp();
                assert!((m.value * mu - 1.0).abs() < 1e-9, "word {word}: {m:?}");
                assert!((m.shifted - m.value - 1.0).abs() < 1e-9);
                let t = tau(&word).get();
                let p = law.pmf(t);
                assert!(p[..t].iter().all(|&x| x == 0.0), "word {word}");
            }
        }
    }
}

#[test]
fn identity_matches_automaton() {
    for model in [bernoulli(), markov(), memory_two()] {
        for n in 1..=8 {
            for word in enumerate_words(2, n, BUDGET).unwrap() {
                let z = zeta(&model, &word);
                let law = return_law(&model, &word, LawMode::Return).unwrap();
                let p = law.pmf(z.tau.get());
                assert!((z.zeta - (1.0 - p[z.tau.get()])).abs() < 1e-12, "word {word}");
            }
        }
    }
}

#[test]
fn zeta_above_lower_bound() {
    for model in [bernoulli(), markov(), memory_two()] {
        let lb = zeta_lower_bound(&model);
        for n in 1..=10 {
            for word in enumerate_words(2, n, BUDGET).unwrap() {
                let z = zeta(&model, &word).zeta;
                assert!(z > 0.0 && z <= 1.0);
                assert!(z >= lb - 1e-12, "word {word}: {z} < {lb}");
            }
        }
    }
}

/// Exhaustive enumeration of all paths of length `len` starting with a word.
fn brute_force_law(model: &PotentialModel, len: usize, n: usize) -> Vec<(Word, Vec<f64>)> {
    let space = WordSpace::new(2, len, BUDGET).unwrap();
    let words: Vec<Word> = enumerate_words(2, n, BUDGET).unwrap().collect();
    let mut laws = vec![vec![0.0; len - n + 1]; words.len()];
    for x in space.iter() {
        let s = x.symbols();
        let p = model.cylinder_measure(&x).exp();
        let idx = x.prefix(n).index() as usize;
        if let Some(j) = (1..=len - n).find(|&j| s[j..j + n] == s[..n]) {
            laws[idx][j] += p;
        }
    }
    words
        .into_iter()
        .zip(laws)
        .map(|(word, law)| {
            let mu = model.cylinder_measure(&word).exp();
            (word, law.into_iter().map(|p| p / mu).collect())
        })
        .collect()
}

#[test]
fn matches_path_enumeration() {
    let len = 16;
    for model in [bernoulli(), markov(), memory_two()] {
        for n in 1..=4 {
            for (word, exact) in brute_force_law(&model, len, n) {
                let law = return_law(&model, &word, LawMode::Return).unwrap();
                let p = law.pmf(len - n);
                let tv: f64 = p.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum();
                assert!(tv <= 1e-10, "word {word}: tv {tv}");
            }
        }
    }
}

#[test]
fn hitting_law() {
    let law = return_law(&uniform(), &w("0"), LawMode::Hitting).unwrap();
    let p = law.pmf(3);
    assert!((p[1] - 0.5).abs() < 1e-15 && (p[2] - 0.25).abs() < 1e-15);
    for model in [markov(), memory_two()] {
        for word in enumerate_words(2, 3, BUDGET).unwrap() {
            let law = return_law(&model, &word, LawMode::Hitting).unwrap();
            let mu = model.cylinder_measure(&word).exp();
            assert!((law.pmf(1)[1] - mu).abs() < 1e-14, "word {word}");
            let total: f64 = law.pmf(4000).iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn hitting_law_matches_return_tail() {
    // stationarity gives P(T = t + 1) = mu(w) P_w(S > t)
    let model = markov();
    for word in enumerate_words(2, 4, BUDGET).unwrap() {
        let hit = return_law(&model, &word, LawMode::Hitting).unwrap().pmf(30);
        let ret = return_law(&model, &word, LawMode::Return).unwrap().pmf(30);
        let mu = model.cylinder_measure(&word).exp();
        let mut survive = 1.0;
        for t in 1..30 {
            survive -= ret[t];
            assert!((hit[t + 1] - mu * survive).abs() < 1e-13, "word {word} t={t}");
        }
    }
}

#[test]
fn tail_certificate_bounds_survival() {
    for model in [bernoulli(), markov()] {
        for word in enumerate_words(2, 5, BUDGET).unwrap() {
            let law = return_law(&model, &word, LawMode::Return).unwrap();
            let cert = law.tail_certificate();
            assert!(cert.rho_tail < 1.0);
            let p = law.pmf(400);
            let mut tail: f64 = 1.0;
            for (t, pt) in p.iter().enumerate() {
                tail -= pt;
                assert!(tail <= cert.c_tail * cert.rho_tail.powi(t as i32) + 1e-12);
            }
        }
    }
}

#[test]
fn survival_by_squaring_matches_stepping() {
    let model = markov();
    for word in [w("0110"), w("000"), w("1")] {
        let law = return_law(&model, &word, LawMode::Return).unwrap();
        let p = law.pmf(300);
        for t in [0u64, 1, 5, 64, 137, 299] {
            let direct: f64 = 1.0 - p[..=t as usize].iter().sum::<f64>();
            let (sq, rel) = law.survival(t).unwrap();
            assert!((sq - direct).abs() < 1e-12, "word {word} t={t}");
            assert!(rel < 1e-10);
        }
    }
}

#[test]
fn exact_spectrum_examples() {
    for model in [bernoulli(), markov()] {
        for n in [3, 5] {
            let s = exact_return_spectra(&model, n, &[0.0, 1.0], BUDGET).unwrap();
            assert_eq!(s[0].value, 0.0);
            // sum_w mu(w) E_w[S + 1] = K^n + 1 by Kac
            let want = ((1u64 << n) as f64 + 1.0).ln() / n as f64;
            assert!((s[1].value - want).abs() < 1e-10);
            assert!((s[1].value_shift - 2f64.ln()).abs() < 1e-10);
            assert!(s[1].certified_error < 1e-10, "{:?}", s[1]);
        }
    }
    // degenerate model, q = -2: approaches -log 2
    let gaps: Vec<f64> = [4, 8, 12]
        .iter()
        .map(|&n| {
            let v = exact_return_spectrum(&uniform(), n, -2.0, BUDGET).unwrap().value;
            (v + 2f64.ln()).abs()
        })
        .collect();
    assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn nonnegative_orders_are_bounded_by_the_spectrum() {
    // For q >= 0 the moments sit between constant multiples of mu^{-q}.
    let model = markov();
    for word in enumerate_words(2, 6, BUDGET).unwrap() {
        let law = return_law(&model, &word, LawMode::Return).unwrap();
        let mu = model.cylinder_measure(&word).exp();
        for q in [0.5, 1.0, 2.0] {
            let m = law.moment(q).unwrap();
            let ratio = m.value * mu.powf(q);
            assert!(ratio > 0.05 && ratio < 20.0, "word {word} q={q}: {ratio}");
        }
    }
}

#[test]
fn lambda_examples_and_bound() {
    assert!((lambda_n(&bernoulli(), 1, BUDGET).unwrap() - (5.0f64 / 9.0).ln()).abs() < 1e-14);
    assert!((lambda_n(&uniform(), 1, BUDGET).unwrap() - 0.5f64.ln()).abs() < 1e-14);
    for model in [bernoulli(), markov()] {
        let g = spectra::gamma_plus(&model);
        let d = model.quasi_bernoulli_d();
        let mut gaps = Vec::new();
        for n in 1..=14 {
            let l = lambda_n(&model, n, BUDGET).unwrap();
            assert!(l <= g + (d * n as f64).ln() / n as f64 + 1e-12);
            gaps.push((l - g).abs());
        }
        assert!(gaps[13] < gaps[3]);
    }
}

#[test]
fn exact_tail_examples() {
    let u = uniform();
    assert_eq!(exact_tail(&u, 3, 1.0, BUDGET).unwrap().log_p, 0.0);
    let t = exact_tail(&u, 1, 4.0, BUDGET).unwrap();
    assert!((t.log_p - 0.125f64.ln()).abs() < 1e-14);
    let model = bernoulli();
    let mut last = 0.0;
    for l in [2.0, 5.0, 50.0, 500.0, 5e4, 5e6] {
        let t = exact_tail(&model, 4, l, BUDGET).unwrap();
        assert!(t.log_p < last || (l == 2.0 && t.log_p <= 0.0));
        last = t.log_p;
    }
    assert!(last < -100.0);
}

#[test]
fn memory_larger_than_word() {
    let model = PotentialModel::normalize(&ModelSpec::potential(
        2,
        3,
        (0..16).map(|i| ((i * 5 % 7) as f64) * 0.2 - 0.6).collect(),
    ))
    .unwrap();
    for n in 1..=4 {
        for word in enumerate_words(2, n, BUDGET).unwrap() {
            let law = return_law(&model, &word, LawMode::Return).unwrap();
            let mu = model.cylinder_measure(&word).exp();
            assert!((law.moment(1.0).unwrap().value * mu - 1.0).abs() < 1e-9, "word {word}");
            let hit = return_law(&model, &word, LawMode::Hitting).unwrap();
            assert!((hit.pmf(1)[1] - mu).abs() < 1e-13);
        }
    }
    for (word, exact) in brute_force_law(&model, 14, 2) {
        let p = return_law(&model, &word, LawMode::Return).unwrap().pmf(12);
        let tv: f64 = p.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum();
        assert!(tv <= 1e-10, "word {word}: tv {tv}");
    }
}

#[test]
fn budget_is_enforced() {
    let err = ReturnLaw::with_budget(&markov(), &w("010"), LawMode::Return, 4).unwrap_err();
    assert!(matches!(err, crate::Error::BudgetExceeded { .. }));
}
