//! Seeding, deterministic Gaussian draws, noisy thresholds and noise layers.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::value::Value;

/// Separator placed between seed components before hashing.
pub const COMPONENT_SEPARATOR: u8 = 0x1F;

/// Mean of the noisy thresholds.
pub const THRESHOLD_MEAN: f64 = 4.0;
/// Standard deviation of the noisy thresholds.
pub const THRESHOLD_SD: f64 = 0.5;
/// Hard lower bound for every noisy threshold.
pub const HARD_THRESHOLD: i64 = 2;

/// First eight bytes of SHA-256, big-endian.
pub fn hash64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

pub fn salt_hash(salt: &str) -> u64 {
    hash64(salt.as_bytes())
}

fn serialize_components(table: &str, column: &str, components: &[String]) -> Vec<u8> {
    let mut out = Vec::with_capacity(table.len() + column.len() + 16 * components.len());
    out.extend_from_slice(table.as_bytes());
    out.push(COMPONENT_SEPARATOR);
    out.extend_from_slice(column.as_bytes());
    for c in components {
        out.push(COMPONENT_SEPARATOR);
        out.extend_from_slice(c.as_bytes());
    }
    out
}

pub fn static_seed(table: &str, column: &str, components: &[String], salt: &str) -> u64 {
    static_seed_with_hash(table, column, components, salt_hash(salt))
}

/// [`static_seed`] with the salt already hashed.
pub fn static_seed_with_hash(table: &str, column: &str, components: &[String], salt_hash: u64) -> u64 {
    hash64(&serialize_components(table, column, components)) ^ salt_hash
}

/// XOR of the hashed canonical uids. Order-independent; 0 for an empty set.
pub fn uid_term<'a>(uids: impl IntoIterator<Item = &'a Value>) -> u64 {
    uids.into_iter()
        .fold(0, |acc, uid| acc ^ hash64(uid.canonical().as_bytes()))
}

pub fn dynamic_seed(static_seed: u64, uid_term: u64) -> u64 {
    static_seed ^ uid_term
}

fn uniform(seed: u64, tag: &str, counter: u32) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update(tag.as_bytes());
    h.update(counter.to_be_bytes());
    let digest = h.finalize();
    let n = u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"));
    (n as f64 + 0.5) / 18_446_744_073_709_551_616.0
}

/// Standard normal sample, fully determined by `(seed, tag)`.
pub fn gauss(seed: u64, tag: &str) -> f64 {
    let u1 = uniform(seed, tag, 0);
    let u2 = uniform(seed, tag, 1);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Threshold from a unit normal draw: `round(4 + 0.5 g)`, floored at 2.
pub fn threshold_from_draw(g: f64) -> i64 {
    ((THRESHOLD_MEAN + THRESHOLD_SD * g).round() as i64).max(HARD_THRESHOLD)
}

pub fn noisy_threshold(seed: u64, tag: &str) -> i64 {
    threshold_from_draw(gauss(seed, tag))
}

/// Decide whether a bucket with these distinct uids is suppressed.
pub fn low_count_filter<'a>(uids: impl IntoIterator<Item = &'a Value>, salt: &str) -> bool {
    let uids: Vec<&Value> = uids.into_iter().collect();
    low_count_filter_with_term(uids.len(), uid_term(uids.iter().copied()), salt_hash(salt))
}

/// [`low_count_filter`] over a precomputed uid count and term.
pub fn low_count_filter_with_term(count: usize, uid_term: u64, salt_hash: u64) -> bool {
    if (count as i64) < HARD_THRESHOLD {
        return true;
    }
    let t = THRESHOLD_MEAN + THRESHOLD_SD * gauss(salt_hash ^ uid_term, "lcf");
    (count as f64) < t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerClass {
    Static,
    Dynamic,
}

/// Seed material for one condition's layers, before the salt and uids are mixed in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LayerSpec {
    pub column: String,
    pub components: Vec<String>,
    pub static_layer: bool,
    pub dynamic_layer: bool,
    /// Human-readable origin, e.g. `dept = 'CS'`.
    pub provenance: String,
}

impl LayerSpec {
    pub fn new(column: impl Into<String>, components: Vec<String>, provenance: impl Into<String>) -> LayerSpec {
        LayerSpec {
            column: column.into(),
            components,
            static_layer: true,
            dynamic_layer: true,
            provenance: provenance.into(),
        }
    }

    pub fn static_only(mut self) -> LayerSpec {
        self.dynamic_layer = false;
        self
    }

    pub fn dynamic_only(mut self) -> LayerSpec {
        self.static_layer = false;
        self
    }

    pub fn layer_count(&self) -> usize {
        self.static_layer as usize + self.dynamic_layer as usize
    }
}

/// One seeded noise draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NoiseLayer {
    pub class: LayerClass,
    pub static_seed: u64,
    /// Present for dynamic layers: `static_seed ^ uid_term`.
    pub dynamic_seed: Option<u64>,
    pub provenance: String,
}

impl NoiseLayer {
    pub fn seed(&self) -> u64 {
        self.dynamic_seed.unwrap_or(self.static_seed)
    }
}

/// Which layer classes take part in noise. Only for attack experiments.
#[cfg(feature = "layer-hooks")]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerToggles {
    pub static_layers: bool,
    pub dynamic_layers: bool,
}

#[cfg(feature = "layer-hooks")]
impl Default for LayerToggles {
    fn default() -> Self {
        LayerToggles {
            static_layers: true,
            dynamic_layers: true,
        }
    }
}

/// All layers of one bucket plus the seeds derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSet {
    pub layers: Vec<NoiseLayer>,
    /// XOR of every static seed and the uid term; seeds per-purpose thresholds.
    pub combined_seed: u64,
}

impl LayerSet {
    /// Seeds the specs for a bucket. Duplicate specs collapse to one, and
    /// layers are kept in a canonical order so sums are bit-stable.
    pub fn build(table: &str, specs: &[LayerSpec], salt_hash: u64, uid_term: u64) -> LayerSet {
        let mut specs: Vec<&LayerSpec> = specs.iter().collect();
        specs.sort_by(|a, b| (&a.column, &a.components, a.static_layer, a.dynamic_layer).cmp(&(&b.column, &b.components, b.static_layer, b.dynamic_layer)));
        specs.dedup_by(|a, b| a.column == b.column && a.components == b.components && a.static_layer == b.static_layer && a.dynamic_layer == b.dynamic_layer);
        let mut layers = Vec::new();
        let mut combined = uid_term;
        for spec in specs {
            let seed = static_seed_with_hash(table, &spec.column, &spec.components, salt_hash);
            combined ^= seed;
            if spec.static_layer {
                layers.push(NoiseLayer {
                    class: LayerClass::Static,
                    static_seed: seed,
                    dynamic_seed: None,
                    provenance: spec.provenance.clone(),
                });
            }
            if spec.dynamic_layer {
                layers.push(NoiseLayer {
                    class: LayerClass::Dynamic,
                    static_seed: seed,
                    dynamic_seed: Some(dynamic_seed(seed, uid_term)),
                    provenance: spec.provenance.clone(),
                });
            }
        }
        layers.sort_by_key(|l| (l.class, l.seed()));
        LayerSet {
            layers,
            combined_seed: combined,
        }
    }

    #[cfg(feature = "layer-hooks")]
    pub fn apply_toggles(&mut self, toggles: LayerToggles) {
        self.layers.retain(|l| match l.class {
            LayerClass::Static => toggles.static_layers,
            LayerClass::Dynamic => toggles.dynamic_layers,
        });
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Sum of one draw per layer. Returns `(N_b, L)`.
    pub fn baseline_noise(&self, tag: &str) -> (f64, usize) {
        let nb = self.layers.iter().map(|l| gauss(l.seed(), tag)).sum();
        (nb, self.layers.len())
    }

    pub fn threshold(&self, tag: &str) -> i64 {
        noisy_threshold(self.combined_seed, tag)
    }
}

pub fn baseline_noise(layers: &LayerSet) -> (f64, usize) {
    layers.baseline_noise("noise")
}

/// One line of the golden seed-vector file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedVector {
    pub table: String,
    pub column: String,
    pub components: Vec<String>,
    pub salt: String,
    pub static_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic_seed: Option<u64>,
}

impl SeedVector {
    pub fn compute(table: &str, column: &str, components: Vec<String>, salt: &str, uids: Option<&[Value]>) -> SeedVector {
        let static_seed = static_seed(table, column, &components, salt);
        SeedVector {
            table: table.to_string(),
            column: column.to_string(),
            components,
            salt: salt.to_string(),
            static_seed,
            dynamic_seed: uids.map(|u| dynamic_seed(static_seed, uid_term(u))),
        }
    }

    /// Recompute the seeds from the inputs and compare.
    pub fn verify(&self) -> bool {
        let s = static_seed(&self.table, &self.column, &self.components, &self.salt);
        s == self.static_seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comps(c: &[&str]) -> Vec<String> {
        c.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hash64_golden() {
        // SHA-256("") = e3b0c442 98fc1c14 ...
        assert_eq!(hash64(b""), 0xe3b0c44298fc1c14);
        // SHA-256("abc") = ba7816bf 8f01cfea ...
        assert_eq!(hash64(b"abc"), 0xba7816bf8f01cfea);
        assert_ne!(hash64(b"a"), hash64(b"b"));
    }

    #[test]
    fn static_seed_properties() {
        let a = static_seed("hrtable", "dept", &comps(&["CS", "CS", "1"]), "s1");
        assert_eq!(a, static_seed("hrtable", "dept", &comps(&["CS", "CS", "1"]), "s1"));
        assert_ne!(a, static_seed("hrtable", "dept", &comps(&["CS", "CS", "1"]), "s2"));
        assert_ne!(a, static_seed("hrtable", "dept", &comps(&["CS"]), "s1"));
        // Component boundaries matter.
        assert_ne!(
            static_seed("t", "c", &comps(&["ab", "c"]), "s"),
            static_seed("t", "c", &comps(&["a", "bc"]), "s")
        );
    }

    #[test]
    fn uid_terms() {
        let a = [Value::Int(1), Value::Int(2)];
        let b = [Value::Int(2), Value::Int(1)];
        assert_eq!(uid_term(&a), uid_term(&b));
        assert_ne!(uid_term(&a), uid_term(&[Value::Int(1), Value::Int(3)]));
        assert_eq!(uid_term(&[]), 0);
    }

    #[test]
    fn gauss_sticky_and_tagged() {
        assert_eq!(gauss(42, "noise").to_bits(), gauss(42, "noise").to_bits());
        assert_ne!(gauss(42, "noise"), gauss(42, "t1"));
    }

    #[test]
    fn gauss_moments() {
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| gauss(hash64(&(i as u64).to_be_bytes()), "noise")).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((sd - 1.0).abs() < 0.02, "sd {sd}");
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_from_draw(0.0), 4);
        assert_eq!(threshold_from_draw(-5.0), 2);
        assert_eq!(threshold_from_draw(2.0), 5);
        let n = 10_000;
        let raw: Vec<f64> = (0..n).map(|i| 4.0 + 0.5 * gauss(i, "t1")).collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let sd = (raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean - 4.0).abs() < 0.05);
        assert!((sd - 0.5).abs() < 0.05);
    }

    #[test]
    fn low_count_filter_rules() {
        let one = [Value::Int(7)];
        for salt in ["a", "b", "c", "d"] {
            assert!(low_count_filter(&one, salt));
        }
        let six: Vec<Value> = (0..6).map(Value::Int).collect();
        assert_eq!(low_count_filter(&six, "x"), low_count_filter(&six, "x"));
    }

    #[test]
    fn layer_set_counts_and_dedup() {
        let spec = LayerSpec::new("dept", comps(&["CS", "CS", "1"]), "dept = 'CS'");
        let set = LayerSet::build("t", &[spec.clone(), spec.clone()], salt_hash("s"), 99);
        assert_eq!(set.len(), 2);
        let dynamic = set.layers.iter().find(|l| l.class == LayerClass::Dynamic).unwrap();
        assert_eq!(dynamic.dynamic_seed, Some(dynamic.static_seed ^ 99));
        let in_clause = LayerSpec::new("age", comps(&["30", "31"]), "in").static_only();
        let set = LayerSet::build("t", &[spec, in_clause], salt_hash("s"), 99);
        assert_eq!(set.len(), 3);
    }

    #[test]
    fn seed_vector_round_trip() {
        let v = SeedVector::compute("t", "c", comps(&["x"]), "salt", Some(&[Value::Int(1)]));
        assert!(v.verify());
        let line = serde_json::to_string(&v).unwrap();
        let back: SeedVector = serde_json::from_str(&line).unwrap();
        assert_eq!(back, v);
    }
}
