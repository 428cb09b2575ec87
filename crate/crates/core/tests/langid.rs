use progst::langid::{f_eng, script_fraction, tokenize, Lexicon, Script};
use proptest::prelude::*;

const FIXTURE: &str = include_str!("fixtures/mixed_script.tsv");

#[test]
fn mixed_script_fixture_matches_hand_counts() {
    let mut rows = 0;
    for line in FIXTURE.lines().filter(|l| !l.starts_with('#')) {
        let mut cols = line.splitn(3, '\t');
        let latin: usize = cols.next().unwrap().parse().unwrap();
        let words: usize = cols.next().unwrap().parse().unwrap();
        let text = cols.next().unwrap();

        let f = script_fraction(text, Script::Latin);
        assert_eq!((f.matched, f.words), (latin, words), "{text}");
        assert_eq!(f.degenerate, words == 0, "{text}");
        if words > 0 {
            assert_eq!(f.value, latin as f64 / words as f64, "{text}");
            let d = script_fraction(text, Script::Devanagari);
            assert_eq!(d.matched, words - latin, "{text}");
        }
        rows += 1;
    }
    assert_eq!(rows, 20);
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z]{1,8}",
        "[\u{0915}-\u{0939}]{1,5}",
        "[0-9]{1,3}",
        Just(":)".to_string()),
        Just("!!".to_string()),
    ]
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 0..16)
}

fn lexicon_from(words: &[String], mask: &[bool]) -> Option<Lexicon> {
    let chosen: Vec<&String> = words.iter().zip(mask).filter(|(_, &m)| m).map(|(w, _)| w).collect();
    Lexicon::new("fixture", chosen).ok()
}

proptest! {
    #[test]
    fn f_eng_ignores_word_order(words in sentence(), mask in prop::collection::vec(any::<bool>(), 16), seed in any::<u64>()) {
        let Some(lex) = lexicon_from(&words, &mask) else { return Ok(()) };
        let mut shuffled = words.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        let a = f_eng(&words.join(" "), &lex);
        let b = f_eng(&shuffled.join(" "), &lex);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn larger_lexicon_never_lowers_f_eng(
        words in sentence(),
        small in prop::collection::vec(any::<bool>(), 16),
        extra in prop::collection::vec(any::<bool>(), 16),
    ) {
        let big: Vec<bool> = small.iter().zip(&extra).map(|(a, b)| *a || *b).collect();
        let (Some(s), Some(b)) = (lexicon_from(&words, &small), lexicon_from(&words, &big)) else { return Ok(()) };
        let text = words.join(" ");
        prop_assert!(f_eng(&text, &s).value <= f_eng(&text, &b).value);
    }

    #[test]
    fn f_eng_is_a_fraction_and_universal_lexicon_gives_one(words in sentence()) {
        let text = words.join(" ");
        let counted: Vec<String> = tokenize(&text).counted().map(|t| t.surface.clone()).collect();
        let other = Lexicon::new("other", ["zzzzzzzzzz"]).unwrap();
        let f = f_eng(&text, &other);
        prop_assert!((0.0..=1.0).contains(&f.value));
        if counted.is_empty() {
            prop_assert!(f.degenerate);
            prop_assert_eq!(f.value, 0.0);
        } else {
            let all = Lexicon::new("all", &counted).unwrap();
            prop_assert_eq!(f_eng(&text, &all).value, 1.0);
        }
    }

    #[test]
    fn counted_means_has_a_letter(words in sentence()) {
        for tok in tokenize(&words.join(" ")).tokens {
            prop_assert_eq!(tok.counted, tok.surface.chars().any(char::is_alphabetic));
        }
    }
}
