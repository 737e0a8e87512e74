use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::matrix::{random_invertible, random_invertible_split, Invertible, Matrix};
use super::{KnnError, NumericField, Role, Scheme, SchemeParams, PARTS};

/// Per-position choice between copying a plaintext entry into both halves
/// or splitting it additively.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitVector(Vec<bool>);

impl SplitVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self((0..dim).map(|_| rng.random_bool(0.5)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

/// Master secret of one scheme: two sum matrices, eight part matrices and
/// the splitting vector.
#[derive(Clone, Debug)]
pub struct MasterKey {
    scheme: Scheme,
    sum_keys: [Invertible; 2],
    part_keys: Vec<Invertible>,
    split: SplitVector,
}

impl MasterKey {
    fn generate<R: Rng + ?Sized>(
        scheme: Scheme,
        dim: usize,
        field: &NumericField,
        rng: &mut R,
    ) -> Result<Self, KnnError> {
        let sum_keys = [random_invertible(dim, field, rng)?, random_invertible(dim, field, rng)?];
        let part_keys = (0..PARTS)
            .map(|_| random_invertible(dim, field, rng))
            .collect::<Result<Vec<_>, _>>()?;
        let split = SplitVector::random(dim, rng);
        Ok(Self { scheme, sum_keys, part_keys, split })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.split.len()
    }

    /// First (`0`) or second (`1`) sum matrix.
    pub fn sum_key(&self, which: usize) -> &Matrix {
        &self.sum_keys[which].mat
    }

    pub fn sum_key_inverse(&self, which: usize) -> &Matrix {
        &self.sum_keys[which].inv
    }

    pub fn part_key(&self, i: usize) -> &Matrix {
        &self.part_keys[i].mat
    }

    pub fn part_key_inverse(&self, i: usize) -> &Matrix {
        &self.part_keys[i].inv
    }

    pub fn split(&self) -> &SplitVector {
        &self.split
    }
}

/// The organizer's four masking matrices. Driver-side ciphertexts carry the
/// inverse of a driver mask, rider-side ciphertexts carry a rider mask.
#[derive(Clone, Debug)]
pub struct TosSecrets {
    nrs_rider: Invertible,
    nrs_driver: Invertible,
    trs_rider: Invertible,
    trs_driver: Invertible,
}

impl TosSecrets {
    fn generate<R: Rng + ?Sized>(
        params: &SchemeParams,
        rng: &mut R,
    ) -> Result<Self, KnnError> {
        let f = &params.numeric;
        Ok(Self {
            nrs_rider: random_invertible(params.m, f, rng)?,
            nrs_driver: random_invertible(params.m, f, rng)?,
            trs_rider: random_invertible(params.n(), f, rng)?,
            trs_driver: random_invertible(params.n(), f, rng)?,
        })
    }

    pub fn rider_mask(&self, scheme: Scheme) -> &Matrix {
        &self.rider(scheme).mat
    }

    pub fn rider_mask_inverse(&self, scheme: Scheme) -> &Matrix {
        &self.rider(scheme).inv
    }

    pub fn driver_mask(&self, scheme: Scheme) -> &Matrix {
        &self.driver(scheme).mat
    }

    pub fn driver_mask_inverse(&self, scheme: Scheme) -> &Matrix {
        &self.driver(scheme).inv
    }

    pub fn dim(&self, scheme: Scheme) -> usize {
        self.rider(scheme).mat.nrows()
    }

    fn rider(&self, scheme: Scheme) -> &Invertible {
        match scheme {
            Scheme::Nrs => &self.nrs_rider,
            Scheme::Trs => &self.trs_rider,
        }
    }

    fn driver(&self, scheme: Scheme) -> &Invertible {
        match scheme {
            Scheme::Nrs => &self.nrs_driver,
            Scheme::Trs => &self.trs_driver,
        }
    }
}

/// Draws both master key sets and the organizer secrets from one seed.
pub fn generate_master_keys(
    params: &SchemeParams,
    seed: u64,
) -> Result<(MasterKey, MasterKey, TosSecrets), KnnError> {
    params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let nrs = MasterKey::generate(Scheme::Nrs, params.m, &params.numeric, &mut rng)?;
    let trs = MasterKey::generate(Scheme::Trs, params.n(), &params.numeric, &mut rng)?;
    let tos = TosSecrets::generate(params, &mut rng)?;
    Ok((nrs, trs, tos))
}

/// Eight key parts for one user and role, plus the splitting vector.
#[derive(Clone, Debug, PartialEq)]
pub struct UserKeySet {
    role: Role,
    parts: Vec<Matrix>,
    split: SplitVector,
}

impl UserKeySet {
    pub(crate) fn from_parts(
        role: Role,
        parts: Vec<Matrix>,
        split: SplitVector,
    ) -> Result<Self, KnnError> {
        if parts.len() != PARTS {
            return Err(KnnError::Format(format!("expected {PARTS} parts, got {}", parts.len())));
        }
        let dim = split.len();
        for p in &parts {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(KnnError::DimensionMismatch { expected: dim, actual: p.nrows() });
            }
        }
        Ok(Self { role, parts, split })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.split.len()
    }

    pub fn parts(&self) -> &[Matrix] {
        &self.parts
    }

    pub fn split(&self) -> &SplitVector {
        &self.split
    }
}

// Which random share multiplies each key part: driver parts use
// [a, b, a, b, c, d, c, d], rider parts [e, e, f, f, g, g, h, h].
const DRIVER_SHARE: [usize; PARTS] = [0, 1, 0, 1, 2, 3, 2, 3];
const RIDER_SHARE: [usize; PARTS] = [0, 0, 1, 1, 2, 2, 3, 3];

/// Caches the per-part mask products of one master key so that each user
/// derivation costs eight matrix products.
#[derive(Clone, Debug)]
pub struct KeyDeriver {
    scheme: Scheme,
    sum_keys: [Invertible; 2],
    split: SplitVector,
    field: NumericField,
    /// inverse driver mask times inverse part key, per part
    driver_prefix: Vec<Matrix>,
    /// part key times rider mask, per part
    rider_suffix: Vec<Matrix>,
}

impl KeyDeriver {
    pub fn new(master: &MasterKey, tos: &TosSecrets, field: NumericField) -> Result<Self, KnnError> {
        let scheme = master.scheme;
        if tos.dim(scheme) != master.dim() {
            return Err(KnnError::DimensionMismatch {
                expected: master.dim(),
                actual: tos.dim(scheme),
            });
        }
        let driver_prefix = master
            .part_keys
            .iter()
            .map(|p| tos.driver_mask_inverse(scheme) * &p.inv)
            .collect();
        let rider_suffix = master
            .part_keys
            .iter()
            .map(|p| &p.mat * tos.rider_mask(scheme))
            .collect();
        Ok(Self {
            scheme,
            sum_keys: master.sum_keys.clone(),
            split: master.split.clone(),
            field,
            driver_prefix,
            rider_suffix,
        })
    }

    pub fn derive<R: Rng + ?Sized>(&self, role: Role, rng: &mut R) -> Result<UserKeySet, KnnError> {
        if role.scheme() != self.scheme {
            return Err(KnnError::RoleMismatch { role, scheme: self.scheme });
        }
        let sum_keys = &self.sum_keys;
        let parts = match role.orientation() {
            super::Orientation::Column => {
                // a + b = inverse of the first sum key, c + d = inverse of the second
                let (a, b) = random_invertible_split(&sum_keys[0].inv, &self.field, rng)?;
                let (c, d) = random_invertible_split(&sum_keys[1].inv, &self.field, rng)?;
                let shares = [a, b, c, d];
                (0..PARTS)
                    .map(|i| &self.driver_prefix[i] * &shares[DRIVER_SHARE[i]])
                    .collect()
            }
            super::Orientation::Row => {
                // e + f = first sum key, g + h = second
                let (e, f) = random_invertible_split(&sum_keys[0].mat, &self.field, rng)?;
                let (g, h) = random_invertible_split(&sum_keys[1].mat, &self.field, rng)?;
                let shares = [e, f, g, h];
                (0..PARTS)
                    .map(|i| &shares[RIDER_SHARE[i]] * &self.rider_suffix[i])
                    .collect()
            }
        };
        UserKeySet::from_parts(role, parts, self.split.clone())
    }
}

/// Derives a fresh key set for `role`. For many users prefer a shared [`KeyDeriver`].
pub fn derive_user_keys(
    master: &MasterKey,
    tos: &TosSecrets,
    role: Role,
    rng_seed: u64,
) -> Result<UserKeySet, KnnError> {
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    KeyDeriver::new(master, tos, NumericField::default())?.derive(role, &mut rng)
}
