mod common;

use std::collections::{BTreeSet, HashMap};

use ccmol::basis::*;
use proptest::prelude::*;

fn toy_energy(v: u32, j: u32) -> f64 {
    // anharmonic vibration plus a v-dependent rotational constant
    4160.0 * v as f64 - 120.0 * (v * v) as f64 + (59.3 - 3.0 * v as f64) * (j * (j + 1)) as f64
}

#[test]
fn enumeration_matches_brute_force_pairs() {
    for species in [Species::Para, Species::Ortho, Species::Hetero] {
        let list = enumerate_cms(toy_energy, 6, 6, None, species);
        let mut expected = BTreeSet::new();
        for v1 in 0..=6 {
            for j1 in 0..=6 {
                for v2 in 0..=6 {
                    for j2 in 0..=6 {
                        if species.allows(j1) && species.allows(j2) {
                            let key = if (v1, j1) >= (v2, j2) { (v1, j1, v2, j2) } else { (v2, j2, v1, j1) };
                            expected.insert(key);
                        }
                    }
                }
            }
        }
        let got: BTreeSet<_> = list.iter().map(|c| c.labels()).collect();
        assert_eq!(got.len(), list.len(), "duplicates for {species:?}");
        assert_eq!(got, expected);
        assert!(list.iter().all(Cms::is_well_ordered));
        assert!(list.windows(2).all(|w| w[0].energy <= w[1].energy));
    }
}

#[test]
fn energy_cap_filters() {
    let all = enumerate_cms(toy_energy, 2, 4, None, Species::Para);
    let cap = 5000.0;
    let capped = enumerate_cms(toy_energy, 2, 4, Some(cap), Species::Para);
    assert_eq!(capped.len(), all.iter().filter(|c| c.energy <= cap).count());
    assert!(capped.iter().all(|c| c.energy <= cap));
}

#[test]
fn ordered_pairs_contain_both_orders() {
    let list = enumerate_ordered_pairs(toy_energy, 1, 2, None, Species::Para);
    assert_eq!(list.len(), 16);
    for c in &list {
        assert!(list.iter().any(|d| d.labels() == c.swapped().labels()));
    }
}

#[test]
fn label_round_trip() {
    let c = Cms::new(1, 0, 0, 2, 0.0);
    assert_eq!(c.label(), "(1002)");
    assert_eq!(c.ordered_label(), "[10;02]");
    for text in ["(1002)", "[10;02]", "(1,0,0,2)"] {
        assert_eq!(Cms::parse_labels(text).unwrap(), (1, 0, 0, 2));
    }
    assert_eq!(Cms::parse_labels("(1,0,0,12)").unwrap(), (1, 0, 0, 12));
    assert!(Cms::parse_labels("(10)").is_err());
}

fn block(j_total: u32, parity: i8, symmetry: Symmetry) -> BlockLabel {
    BlockLabel { j_total, parity, symmetry }
}

#[test]
fn single_channel_examples() {
    let c = [Cms::new(0, 2, 0, 0, 0.0)];
    let ch = build_channels(&c, block(0, 1, Symmetry::BOSONIC));
    assert_eq!(ch.len(), 1);
    assert_eq!((ch[0].j12, ch[0].l), (2, 2));

    let g = [Cms::new(0, 0, 0, 0, 0.0)];
    let ch = build_channels(&g, block(0, 1, Symmetry::BOSONIC));
    assert_eq!(ch.len(), 1);
    assert_eq!((ch[0].j12, ch[0].l), (0, 0));
    let odd = build_channels(&g, block(1, -1, Symmetry::Distinguishable));
    assert_eq!(odd.len(), 1);
    assert_eq!(odd[0].l, 1);
    assert!(build_channels(&g, block(1, 1, Symmetry::Distinguishable)).is_empty());
}

fn clebsch(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    let phase = if (j1 - j2 + m) % 2 == 0 { 1.0 } else { -1.0 };
    phase * ((2 * j + 1) as f64).sqrt() * common::three_j(2 * j1, 2 * j2, 2 * j, 2 * m1, 2 * m2, -2 * m).to_f64()
}

/// Norm² of (1 + εP)|((j j) j12, l) J M=J⟩ built explicitly in product states.
fn symmetrized_norm(j: i64, j12: i64, l: i64, jt: i64, epsilon: f64) -> f64 {
    let mut state: HashMap<(i64, i64, i64), f64> = HashMap::new();
    for m12 in -j12..=j12 {
        let ml = jt - m12;
        if ml.abs() > l {
            continue;
        }
        let outer = clebsch(j12, m12, l, ml, jt, jt);
        for mu1 in -j..=j {
            let mu2 = m12 - mu1;
            if mu2.abs() > j {
                continue;
            }
            *state.entry((mu1, mu2, ml)).or_default() += outer * clebsch(j, mu1, j, mu2, j12, m12);
        }
    }
    // P swaps the molecules and inverts R̂, giving (−1)^l on |l m_l⟩
    let parity_l = if l % 2 == 0 { 1.0 } else { -1.0 };
    let mut sym: HashMap<(i64, i64, i64), f64> = state.clone();
    for (&(a, b, ml), &w) in &state {
        *sym.entry((b, a, ml)).or_default() += epsilon * parity_l * w;
    }
    sym.values().map(|x| x * x).sum()
}

#[test]
fn exchange_filter_matches_explicit_symmetrization() {
    for j in 0..=4u32 {
        for jt in 0..=6u32 {
            for parity in [1i8, -1] {
                for epsilon in [1i8, -1] {
                    let cms = [Cms::new(0, j, 0, j, 0.0)];
                    let kept = build_channels(&cms, block(jt, parity, Symmetry::Indistinguishable { epsilon })).len();
                    let all = build_channels(&cms, block(jt, parity, Symmetry::Distinguishable));
                    let oracle = all
                        .iter()
                        .filter(|c| symmetrized_norm(j as i64, c.j12 as i64, c.l as i64, jt as i64, epsilon as f64) > 1e-10)
                        .count();
                    assert_eq!(kept, oracle, "j={j} J={jt} parity={parity} ε={epsilon}");
                }
            }
        }
    }
}

#[test]
fn channel_order_is_cms_then_j12_then_l() {
    let list = enumerate_cms(toy_energy, 1, 2, None, Species::Para);
    let ch = build_channels(&list, block(3, 1, Symmetry::BOSONIC));
    assert!(ch.windows(2).all(|w| (w[0].cms_index, w[0].j12, w[0].l) < (w[1].cms_index, w[1].j12, w[1].l)));
}

#[test]
fn truncation_examples() {
    let list = enumerate_cms(toy_energy, 3, 0, None, Species::Para);
    let reference = Cms::new(1, 0, 0, 0, 0.0);
    let kept = truncate_cms_dv(list.clone(), 1, &[reference]);
    let labels: Vec<_> = kept.iter().map(|c| c.labels()).collect();
    assert!(labels.contains(&(0, 0, 0, 0)));
    assert!(labels.contains(&(1, 0, 1, 0)));
    assert!(labels.contains(&(2, 0, 0, 0)));
    assert!(!labels.contains(&(3, 0, 0, 0)));
    assert!(!labels.contains(&(2, 0, 2, 0)));
    // optimal pairing across the well-ordering
    assert_eq!(vibrational_distance(&Cms::new(1, 0, 0, 0, 0.0), &Cms::new(0, 0, 1, 0, 0.0)), 0);
}

#[test]
fn channel_table_csv() {
    let list = [Cms::new(0, 0, 0, 0, 0.0), Cms::new(0, 2, 0, 0, 354.0)];
    let b = block(0, 1, Symmetry::BOSONIC);
    let ch = build_channels(&list, b);
    let mut out = Vec::new();
    write_channel_table(&mut out, &b, &ch, 0.0).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), ch.len() + 1);
    assert!(rows[0].starts_with("index,"));
}

proptest! {
    #[test]
    fn parity_blocks_partition_channels(j1 in 0u32..5, j2 in 0u32..5, jt in 0u32..8) {
        let cms = [Cms::new(1, j1, 0, j2, 0.0)];
        let even = build_channels(&cms, block(jt, 1, Symmetry::Distinguishable));
        let odd = build_channels(&cms, block(jt, -1, Symmetry::Distinguishable));
        let mut union: Vec<(u32, u32)> = even.iter().chain(&odd).map(|c| (c.j12, c.l)).collect();
        union.sort();
        let mut expected = Vec::new();
        for j12 in j1.abs_diff(j2)..=j1 + j2 {
            for l in jt.abs_diff(j12)..=jt + j12 {
                expected.push((j12, l));
            }
        }
        prop_assert_eq!(union, expected);
    }

    #[test]
    fn distinct_levels_are_never_filtered(j1 in 0u32..5, j2 in 0u32..5, jt in 0u32..8, parity in prop_oneof![Just(1i8), Just(-1i8)]) {
        let cms = [Cms::new(1, j1, 0, j2, 0.0)];
        let sym = build_channels(&cms, block(jt, parity, Symmetry::BOSONIC)).len();
        let dist = build_channels(&cms, block(jt, parity, Symmetry::Distinguishable)).len();
        prop_assert_eq!(sym, dist);
    }

    #[test]
    fn vibrational_distance_is_symmetric(a in proptest::array::uniform4(0u32..5), b in proptest::array::uniform4(0u32..5)) {
        let x = Cms::new(a[0], a[1], a[2], a[3], 0.0);
        let y = Cms::new(b[0], b[1], b[2], b[3], 0.0);
        prop_assert_eq!(vibrational_distance(&x, &y), vibrational_distance(&y, &x));
        prop_assert_eq!(vibrational_distance(&x, &y), vibrational_distance(&x.swapped(), &y));
    }
}
