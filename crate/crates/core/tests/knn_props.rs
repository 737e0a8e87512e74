use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use privride::knn::{
    derive_user_keys, encrypt_index, generate_master_keys, match_similarity, read_key_set, write_key_set, Role,
    SchemeParams, TosSecrets, UserKeySet, SIMILARITY_TOLERANCE,
};

const M: usize = 40;
const K: usize = 5;
const ELL: usize = 6;

struct Keys {
    tos: TosSecrets,
    nrs_driver: UserKeySet,
    nrs_rider: UserKeySet,
    trs_driver: UserKeySet,
    trs_rider: UserKeySet,
}

fn keys() -> &'static Keys {
    static KEYS: OnceLock<Keys> = OnceLock::new();
    KEYS.get_or_init(|| {
        let (nrs, trs, tos) = generate_master_keys(&SchemeParams::new(M, K, ELL).unwrap(), 21).unwrap();
        Keys {
            nrs_driver: derive_user_keys(&nrs, &tos, Role::DriverNrs, 1).unwrap(),
            nrs_rider: derive_user_keys(&nrs, &tos, Role::RiderNrs, 2).unwrap(),
            trs_driver: derive_user_keys(&trs, &tos, Role::DriverTrs, 3).unwrap(),
            trs_rider: derive_user_keys(&trs, &tos, Role::RiderTrs, 4).unwrap(),
            tos,
        }
    })
}

fn plain_dot(a: &[bool], b: &[bool]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| **x && **y).count() as f64
}

fn similarity(q: &[bool], p: &[bool], rider: &UserKeySet, driver: &UserKeySet, seed: u64) -> f64 {
    let k = keys();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let qi = encrypt_index(q, rider, &mut rng).unwrap().unmask(&k.tos).unwrap();
    let pi = encrypt_index(p, driver, &mut rng).unwrap().unmask(&k.tos).unwrap();
    match_similarity(&qi, &pi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nrs_similarity_is_the_plain_inner_product(
        q in proptest::collection::vec(any::<bool>(), M),
        p in proptest::collection::vec(any::<bool>(), M),
        seed: u64,
    ) {
        let k = keys();
        let s = similarity(&q, &p, &k.nrs_rider, &k.nrs_driver, seed);
        prop_assert!((s - plain_dot(&q, &p)).abs() <= SIMILARITY_TOLERANCE, "{} vs {}", s, plain_dot(&q, &p));
    }

    #[test]
    fn trs_similarity_is_the_plain_inner_product(
        q in proptest::collection::vec(any::<bool>(), 2 * K + ELL),
        p in proptest::collection::vec(any::<bool>(), 2 * K + ELL),
        seed: u64,
    ) {
        let k = keys();
        let s = similarity(&q, &p, &k.trs_rider, &k.trs_driver, seed);
        prop_assert!((s - plain_dot(&q, &p)).abs() <= SIMILARITY_TOLERANCE);
    }

    #[test]
    fn masked_indices_are_refused(q in proptest::collection::vec(any::<bool>(), M), seed: u64) {
        let k = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let qi = encrypt_index(&q, &k.nrs_rider, &mut rng).unwrap();
        let pi = encrypt_index(&q, &k.nrs_driver, &mut rng).unwrap().unmask(&k.tos).unwrap();
        prop_assert!(match_similarity(&qi, &pi).is_err());
    }
}

#[test]
fn key_files_round_trip() {
    let k = keys();
    for set in [&k.nrs_driver, &k.trs_rider] {
        let mut buf = Vec::new();
        write_key_set(&mut buf, set).unwrap();
        assert_eq!(&read_key_set(buf.as_slice()).unwrap(), set);
        assert!(read_key_set(&buf[..buf.len() / 2]).is_err());
    }
}

#[test]
fn wrong_dimension_is_rejected() {
    let k = keys();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    assert!(encrypt_index(&[true; M + 1], &k.nrs_rider, &mut rng).is_err());
}
