use proptest::prelude::*;

use taskmix::corruption::{corrupt, parse_rendered, plan_spans, reconstruct, CorruptionConfig, Token};
use taskmix::rates::{
    capped_proportional, family_pair_rates, normalize, r_combine, random_subset_chain, Cap, RRatio, RateTable,
};
use taskmix::registry::{Family, Registry, TaskSpec};
use taskmix::stream::{MixtureStream, SourceSet, StreamConfig, SyntheticSource, SyntheticTextSource};
use taskmix::MixtureSpec;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

/// Registries with unique names and positive sizes.
fn registry(max: usize) -> impl Strategy<Value = Registry> {
    prop::collection::vec((family(), 1u64..2_000_000, "[a-z]{1,6}"), 1..max).prop_map(|rows| {
        let tasks = rows
            .into_iter()
            .enumerate()
            .map(|(i, (fam, size, coll))| {
                TaskSpec::new(format!("task_{i}"), fam, coll, size, "in: {text}", "{label}").unwrap()
            })
            .collect();
        Registry::new(tasks).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn corruption_round_trips(
        n in 2usize..300,
        density in prop::sample::select(vec![0.0, 0.05, 0.15, 0.3]),
        mean in prop::sample::select(vec![1.0, 2.0, 3.0, 5.0]),
        seed in any::<u64>(),
        counter in any::<u64>(),
    ) {
        let cfg = CorruptionConfig::new(density, mean, seed).unwrap();
        let tokens: Vec<u32> = (0..n as u32).collect();
        let pair = corrupt(&tokens, &cfg, counter).unwrap();
        prop_assert_eq!(reconstruct(&pair).unwrap(), tokens.clone());

        let sentinels: Vec<u32> = pair.input.iter().filter_map(|t| match t {
            Token::Sentinel(k) => Some(*k),
            Token::Plain(_) => None,
        }).collect();
        prop_assert!(sentinels.iter().enumerate().all(|(i, &k)| k as usize == i));
        let spans = plan_spans(n, &cfg, counter).unwrap();
        prop_assert_eq!(spans.iter().map(|s| s.len).sum::<usize>(), (n as f64 * density).round() as usize);
        prop_assert!(spans.windows(2).all(|w| w[0].end() < w[1].start));

        let words: Vec<String> = tokens.iter().map(|t| format!("w{t}")).collect();
        let (i, o) = corrupt(&words, &cfg, counter).unwrap().render();
        prop_assert_eq!(reconstruct(&parse_rendered(&i, &o)).unwrap(), words);
    }

    #[test]
    fn registry_tsv_round_trips(reg in registry(30)) {
        let back = Registry::from_tsv(&reg.to_tsv(), None).unwrap();
        prop_assert_eq!(back, reg);
    }

    #[test]
    fn capped_rates_are_proportional_and_bounded(reg in registry(40), cap in 1u64..1_000_000) {
        let cap = Cap::new(cap).unwrap();
        let raw = capped_proportional(&reg, cap).unwrap();
        let rates = normalize(&raw).unwrap();
        prop_assert!((rates.total() - 1.0).abs() < 1e-9);
        for t in reg.tasks() {
            prop_assert_eq!(raw.get(&t.name).unwrap(), cap.apply(t.train_size) as f64);
        }
        let capped: Vec<f64> = reg.tasks().iter()
            .filter(|t| cap.apply(t.train_size) < t.train_size)
            .map(|t| rates.get(&t.name).unwrap())
            .collect();
        prop_assert!(capped.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn family_pair_gives_half_to_each(reg in registry(40)) {
        let fams: Vec<Family> = reg.families().into_iter().collect();
        prop_assume!(fams.len() >= 2);
        let rt = family_pair_rates(&reg, fams[0], fams[1], Cap::Unlimited).unwrap();
        let mass = |f: Family| reg.tasks().iter().filter(|t| t.family == f)
            .map(|t| rt.get(&t.name).unwrap()).sum::<f64>();
        prop_assert!((mass(fams[0]) - 0.5).abs() < 1e-12);
        prop_assert!((mass(fams[1]) - 0.5).abs() < 1e-12);
        prop_assert_eq!(rt.len(), reg.tasks().iter().filter(|t| t.family == fams[0] || t.family == fams[1]).count());
    }

    #[test]
    fn r_combine_splits_mass(reg in registry(20), r in 0.0f64..50.0) {
        let rates = normalize(&capped_proportional(&reg, Cap::Unlimited).unwrap()).unwrap();
        let mix = r_combine(&rates, RRatio::new(r).unwrap(), "web").unwrap();
        prop_assert!((mix.supervised.total() + mix.unsupervised_fraction() - 1.0).abs() < 1e-9);
        prop_assert!((mix.unsupervised_fraction() - r / (r + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn subset_chains_nest(reg in registry(60), seed in any::<u64>()) {
        let n = reg.len();
        let sizes: Vec<usize> = [n / 3, n / 2, n].into_iter().filter(|&s| s > 0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let chain = random_subset_chain(&reg, &sizes, seed).unwrap();
        for (sub, &size) in chain.iter().zip(&sizes) {
            prop_assert_eq!(sub.len(), size);
        }
        for w in chain.windows(2) {
            prop_assert!(w[0].names().all(|t| w[1].contains(t)));
        }
        prop_assert_eq!(random_subset_chain(&reg, &sizes, seed).unwrap(), chain);
    }

    #[test]
    fn every_epoch_is_a_permutation(len in 1usize..40, epochs in 1usize..5, seed in any::<u64>()) {
        let mix = MixtureSpec::new(RateTable::new([("t".to_string(), 1.0)]).unwrap(), RRatio::new(0.0).unwrap(), None).unwrap();
        let src = SourceSet::new().with_task("t", Family::Cls, SyntheticSource::new("t", len));
        let mut s = MixtureStream::open(&mix, &src, StreamConfig::new(seed)).unwrap();
        for _ in 0..epochs {
            let mut seen: Vec<u64> = (0..len).map(|_| s.next_record().unwrap().index).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..len as u64).collect::<Vec<_>>());
        }
    }

    #[test]
    fn snapshot_restore_is_transparent(cut in 0usize..300, seed in any::<u64>(), r in prop::sample::select(vec![0.0, 1.0, 4.0])) {
        let table = RateTable::new([("a".to_string(), 3.0), ("b".to_string(), 1.0), ("c".to_string(), 0.5)]).unwrap();
        let mix = r_combine(&normalize(&table).unwrap(), RRatio::new(r).unwrap(), "web").unwrap();
        let mut src = SourceSet::new()
            .with_task("a", Family::Nli, SyntheticSource::new("a", 13))
            .with_task("b", Family::Cls, SyntheticSource::new("b", 4))
            .with_task("c", Family::Rc, SyntheticSource::new("c", 1));
        if r > 0.0 {
            src = src.with_unsupervised("web", SyntheticTextSource::new(9, 2, 3, 30));
        }
        let cfg = StreamConfig::new(seed).with_shard(2, 5);
        let mut a = MixtureStream::open(&mix, &src, cfg).unwrap();
        for _ in 0..cut {
            a.next_record().unwrap();
        }
        let state = a.snapshot();
        prop_assert_eq!(state.draws, cut as u64);
        let json = state.to_json();
        let mut b = MixtureStream::resume(&mix, &src, cfg, &taskmix::StreamState::from_json(&json).unwrap()).unwrap();
        prop_assert_eq!(b.snapshot().to_json(), json);
        for _ in 0..50 {
            prop_assert_eq!(a.next_record().unwrap(), b.next_record().unwrap());
        }
    }
}
