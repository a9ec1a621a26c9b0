//! Binary linear programs, weighted exact cover instance generation, and an
//! exhaustive reference oracle.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Feasibility tolerance for instances with non-integer data. Instances whose
/// `A` and `b` entries are all integers are checked exactly.
pub const FEAS_EPS: f64 = 1e-9;

/// Enumeration guard for the exhaustive oracle.
pub const BRUTE_FORCE_CAP: usize = 24;

/// A binary linear program `min { c^T x | A x = b, x in {0,1}^n }`.
///
/// Immutable after construction; all operations are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct BlpInstance {
    name: String,
    c: Array1<f64>,
    a: Array2<f64>,
    b: Array1<f64>,
    integer_data: bool,
}

impl BlpInstance {
    /// Builds and validates an instance. `a` must be `m x n` with `|c| = n`
    /// and `|b| = m`; all entries must be finite. `m = 0` is legal and models
    /// the fully relaxed (unconstrained) problem.
    pub fn new(
        name: impl Into<String>,
        c: Array1<f64>,
        a: Array2<f64>,
        b: Array1<f64>,
    ) -> Result<Self> {
        let n = c.len();
        let m = b.len();
        if n == 0 {
            return Err(Error::Config("instance needs at least one variable".into()));
        }
        if a.nrows() != m {
            return Err(Error::DimensionMismatch {
                what: "rows of A vs b",
                expected: m,
                got: a.nrows(),
            });
        }
        if m > 0 && a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "columns of A vs c",
                expected: n,
                got: a.ncols(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "c" });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "A" });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "b" });
        }
        let integer_data = a.iter().all(|v| v.fract() == 0.0) && b.iter().all(|v| v.fract() == 0.0);
        // Normalize the m = 0 shape so comparisons do not depend on how an
        // empty matrix was constructed.
        let a = if m == 0 { Array2::zeros((0, n)) } else { a };
        Ok(Self {
            name: name.into(),
            c,
            a,
            b,
            integer_data,
        })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn c(&self) -> &Array1<f64> {
        &self.c
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn b(&self) -> &Array1<f64> {
        &self.b
    }

    /// True when every entry of `A` and `b` is an integer, enabling exact
    /// feasibility tests.
    pub fn is_integer_data(&self) -> bool {
        self.integer_data
    }

    /// `c^T x`, summed in ascending variable order.
    pub fn objective(&self, x: &Assignment) -> Result<f64> {
        self.check_len(x)?;
        Ok(x.bits()
            .iter()
            .zip(self.c.iter())
            .map(|(&bit, &ci)| f64::from(bit) * ci)
            .sum())
    }

    /// `A x - b`.
    pub fn residual(&self, x: &Assignment) -> Result<Array1<f64>> {
        self.check_len(x)?;
        let mut r = -&self.b;
        for (j, row) in self.a.rows().into_iter().enumerate() {
            for (&bit, &aji) in x.bits().iter().zip(row.iter()) {
                if bit == 1 {
                    r[j] += aji;
                }
            }
        }
        Ok(r)
    }

    /// Per-row violation flags under the shared feasibility notion.
    pub fn violations(&self, x: &Assignment) -> Result<Vec<bool>> {
        let r = self.residual(x)?;
        Ok(r.iter().map(|&rj| !self.residual_ok(rj)).collect())
    }

    /// True iff every constraint holds at `x`.
    pub fn is_feasible(&self, x: &Assignment) -> Result<bool> {
        Ok(self.violations(x)?.iter().all(|&v| !v))
    }

    fn residual_ok(&self, r: f64) -> bool {
        if self.integer_data {
            r == 0.0
        } else {
            r.abs() <= FEAS_EPS
        }
    }

    fn check_len(&self, x: &Assignment) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "assignment length",
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// A 0/1 assignment of the decision variables.
///
/// Bit convention used across the crate: variable `i` is bit `i` of a basis
/// state index (bit 0 least significant), a set bit means `x_i = 1`, and the
/// spin picture maps `sigma_i = 2 x_i - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct Assignment(Vec<u8>);

impl Assignment {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Config(format!("assignment entry {i} is not 0/1")));
        }
        Ok(Self(bits))
    }

    /// Decodes a basis state index into bits.
    pub fn from_index(z: u64, n: usize) -> Self {
        Self((0..n).map(|i| ((z >> i) & 1) as u8).collect())
    }

    /// Encodes the bits back into a basis state index.
    pub fn to_index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The spin vector `2x - 1`.
    pub fn spins(&self) -> Vec<i8> {
        self.0
            .iter()
            .map(|&b| if b == 1 { 1 } else { -1 })
            .collect()
    }
}

/// Result of the exhaustive oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum OptResult {
    Optimal { x: Assignment, value: f64 },
    Infeasible,
}

/// Enumerates all `2^n` assignments and returns the minimum-objective
/// feasible one. Ties break toward the lexicographically smallest bit vector
/// (variable 0 most significant).
pub fn brute_force_opt(inst: &BlpInstance) -> Result<OptResult> {
    let n = inst.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut best: Option<(f64, Assignment)> = None;
    for z in 0..(1u64 << n) {
        let x = Assignment::from_index(z, n);
        if !inst.is_feasible(&x)? {
            continue;
        }
        let value = inst.objective(&x)?;
        let better = match &best {
            None => true,
            Some((bv, bx)) => value < *bv || (value == *bv && x < *bx),
        };
        if better {
            best = Some((value, x));
        }
    }
    Ok(match best {
        Some((value, x)) => OptResult::Optimal { x, value },
        None => OptResult::Infeasible,
    })
}

/// Configuration of the weighted exact cover generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WecConfig {
    /// Number of subsets (decision variables).
    pub n_sets: usize,
    /// Universe size (equality constraints).
    pub n_elements: usize,
    /// Largest subset cardinality.
    pub max_set_size: usize,
    pub weight_min: u64,
    pub weight_max: u64,
    pub seed: u64,
}

impl WecConfig {
    pub fn new(n_sets: usize, n_elements: usize, max_set_size: usize, seed: u64) -> Self {
        Self {
            n_sets,
            n_elements,
            max_set_size,
            weight_min: 1,
            weight_max: 100,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_sets < 2 {
            return Err(Error::Config("need at least 2 sets".into()));
        }
        if self.max_set_size == 0 || self.max_set_size > self.n_elements {
            return Err(Error::Config(format!(
                "max_set_size must be in 1..={}, got {}",
                self.n_elements, self.max_set_size
            )));
        }
        if self.weight_min == 0 || self.weight_min > self.weight_max {
            return Err(Error::Config(format!(
                "weights must satisfy 1 <= min <= max, got {}..={}",
                self.weight_min, self.weight_max
            )));
        }
        if self.n_sets * self.max_set_size < self.n_elements {
            return Err(Error::Config(format!(
                "cannot plant a partition: {} sets of size <= {} cover at most {} of {} elements",
                self.n_sets,
                self.max_set_size,
                self.n_sets * self.max_set_size,
                self.n_elements
            )));
        }
        Ok(())
    }
}

/// Generates a weighted exact cover instance: one equality constraint per
/// universe element, `A[j][i] = 1` iff element `j` belongs to set `i`,
/// `b = 1`, and uniform integer weights.
///
/// A random partition of the universe is planted across a random subset of
/// the sets first, so every generated instance admits at least one feasible
/// assignment. Remaining sets are filled with random elements. The output is
/// a pure function of the config.
pub fn generate_wec(cfg: &WecConfig) -> Result<BlpInstance> {
    cfg.validate()?;
    let n = cfg.n_sets;
    let m = cfg.n_elements;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut elements: Vec<usize> = (0..m).collect();
    elements.shuffle(&mut rng);

    // Partition into k parts, each nonempty and at most max_set_size.
    let min_parts = m.div_ceil(cfg.max_set_size);
    let max_parts = n.min(m);
    let k = rng.random_range(min_parts..=max_parts);
    let mut sizes = vec![1usize; k];
    let mut remaining = m - k;
    while remaining > 0 {
        let open: Vec<usize> = (0..k).filter(|&i| sizes[i] < cfg.max_set_size).collect();
        let pick = open[rng.random_range(0..open.len())];
        sizes[pick] += 1;
        remaining -= 1;
    }

    let hosts = rand::seq::index::sample(&mut rng, n, k).into_vec();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut cursor = 0;
    for (&size, &set) in sizes.iter().zip(hosts.iter()) {
        members[set] = elements[cursor..cursor + size].to_vec();
        cursor += size;
    }

    // Fillers get 1..=max_set_size random elements each.
    for (i, entry) in members.iter_mut().enumerate() {
        if hosts.contains(&i) {
            continue;
        }
        let size = rng.random_range(1..=cfg.max_set_size);
        *entry = rand::seq::index::sample(&mut rng, m, size).into_vec();
    }

    let weights: Vec<f64> = (0..n)
        .map(|_| rng.random_range(cfg.weight_min..=cfg.weight_max) as f64)
        .collect();

    let mut a = Array2::zeros((m, n));
    for (i, elems) in members.iter().enumerate() {
        for &e in elems {
            a[[e, i]] = 1.0;
        }
    }
    let name = format!(
        "wec-{}-{}-{}-s{}",
        cfg.n_sets, cfg.n_elements, cfg.max_set_size, cfg.seed
    );
    BlpInstance::new(name, Array1::from(weights), a, Array1::ones(m))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    name: String,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// Parses the instance JSON schema
/// `{"name": str, "c": [...], "A": [[...]], "b": [...]}` (row-major `A`,
/// no extra keys).
pub fn load_instance(text: &[u8]) -> Result<BlpInstance> {
    let raw: RawInstance = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    let m = raw.a.len();
    if m != raw.b.len() {
        return Err(Error::DimensionMismatch {
            what: "rows of A vs b",
            expected: raw.b.len(),
            got: m,
        });
    }
    let n = raw.c.len();
    let mut flat = Vec::with_capacity(m * n);
    for (j, row) in raw.a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!(
                "row {j} of A has {} entries, expected {n}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    let a = Array2::from_shape_vec((m, n), flat).map_err(|e| Error::Parse(e.to_string()))?;
    BlpInstance::new(raw.name, Array1::from(raw.c), a, Array1::from(raw.b))
}

fn json_num(v: f64) -> serde_json::Value {
    if v.fract() == 0.0 && v.abs() <= 9_007_199_254_740_992.0 {
        serde_json::Value::from(v as i64)
    } else {
        serde_json::Value::from(v)
    }
}

/// Serializes an instance to the JSON schema accepted by [`load_instance`].
/// `load(save(inst))` reproduces the instance field for field.
pub fn save_instance(inst: &BlpInstance) -> Vec<u8> {
    let a: Vec<serde_json::Value> = inst
        .a()
        .rows()
        .into_iter()
        .map(|row| serde_json::Value::from(row.iter().map(|&v| json_num(v)).collect::<Vec<_>>()))
        .collect();
    let doc = serde_json::json!({
        "name": inst.name(),
        "c": inst.c().iter().map(|&v| json_num(v)).collect::<Vec<_>>(),
        "A": a,
        "b": inst.b().iter().map(|&v| json_num(v)).collect::<Vec<_>>(),
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("instance JSON serialization");
    out.push(b'\n');
    out
}
