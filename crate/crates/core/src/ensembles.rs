//! Random Hamiltonian ensembles: complex Ginibre matrices on the half-filled
//! Fock space and the four-body SYK model with complex couplings.
//!
//! Every realization draws from its own ChaCha20 stream. The 64-bit key comes
//! from [`derive_realization_seed`], the stream id from the model tag and the
//! number of modes, so realizations can be generated in any order.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilate, create, enumerate_half_filling, FockBasis};

/// Identifier of the random-number pipeline, recorded in run provenance.
pub const RNG_ALGORITHM: &str =
    "ChaCha20Rng (rand_chacha 0.9, key=splitmix64(seed,index), stream=model<<8|N); StandardNormal ziggurat (rand_distr 0.5)";

/// Which random ensemble to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Complex Ginibre matrix on the half-filled Fock space.
    GinibreComplex,
    /// SYK with independent complex couplings everywhere.
    SykCaseI,
    /// SYK with real diagonal couplings and independent complex off-diagonal ones.
    SykCaseII,
    /// SYK with complex diagonal couplings and Hermitian-paired off-diagonal ones.
    SykCaseIII,
    /// Standard Hermitian complex-fermion SYK.
    SykHermitian,
    /// Hermitian (GUE-like) counterpart of the Ginibre ensemble.
    GinibreHermitianBaseline,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::GinibreComplex,
        Model::SykCaseI,
        Model::SykCaseII,
        Model::SykCaseIII,
        Model::SykHermitian,
        Model::GinibreHermitianBaseline,
    ];

    /// Tag byte used in binary dumps and stream selection.
    pub fn tag(self) -> u8 {
        match self {
            Model::GinibreComplex => 0,
            Model::SykCaseI => 1,
            Model::SykCaseII => 2,
            Model::SykCaseIII => 3,
            Model::SykHermitian => 4,
            Model::GinibreHermitianBaseline => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Model> {
        Model::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn is_syk(self) -> bool {
        matches!(
            self,
            Model::SykCaseI | Model::SykCaseII | Model::SykCaseIII | Model::SykHermitian
        )
    }

    /// Short command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Model::GinibreComplex => "ginibre",
            Model::SykCaseI => "syk1",
            Model::SykCaseII => "syk2",
            Model::SykCaseIII => "syk3",
            Model::SykHermitian => "syk-hermitian",
            Model::GinibreHermitianBaseline => "ginibre-hermitian",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Model {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Model {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.to_ascii_lowercase().as_str() {
            "ginibre" | "ginibre-complex" => Model::GinibreComplex,
            "syk1" | "syk-case-i" => Model::SykCaseI,
            "syk2" | "syk-case-ii" => Model::SykCaseII,
            "syk3" | "syk-case-iii" => Model::SykCaseIII,
            "syk-hermitian" | "sykh" => Model::SykHermitian,
            "ginibre-hermitian" | "gue" | "ginibre-hermitian-baseline" => {
                Model::GinibreHermitianBaseline
            }
            other => return Err(Error::invalid(format!("unknown model {other:?}"))),
        };
        Ok(m)
    }
}

/// Fully determines one sampled Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model: Model,
    pub n_modes: usize,
    pub master_seed: u64,
    pub realization_index: u64,
}

impl EnsembleSpec {
    pub fn new(model: Model, n_modes: usize, master_seed: u64, realization_index: u64) -> Self {
        Self {
            model,
            n_modes,
            master_seed,
            realization_index,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_modes.is_multiple_of(2) || self.n_modes < 2 {
            return Err(Error::invalid(format!(
                "n_modes must be even and >= 2, got {}",
                self.n_modes
            )));
        }
        if self.model.is_syk() && self.n_modes < 4 {
            return Err(Error::invalid("four-body SYK needs at least 4 modes"));
        }
        Ok(())
    }

    /// The random stream for this realization.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng =
            ChaCha20Rng::seed_from_u64(derive_realization_seed(self.master_seed, self.realization_index));
        rng.set_stream(((self.model.tag() as u64) << 8) | self.n_modes as u64);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed and a realization index into a per-realization key
/// with two rounds of the splitmix64 finalizer.
pub fn derive_realization_seed(master_seed: u64, realization_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(realization_index).rotate_left(23))
}

/// One sampled Hamiltonian with the basis it is written in.
#[derive(Debug, Clone)]
pub struct HamiltonianRealization {
    pub spec: EnsembleSpec,
    pub matrix: Mat<c64>,
    pub basis: FockBasis,
}

impl HamiltonianRealization {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
}

fn gaussian(rng: &mut ChaCha20Rng, std: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z * std
}

/// Samples whichever ensemble `spec.model` names.
pub fn sample(spec: &EnsembleSpec) -> Result<HamiltonianRealization> {
    match spec.model {
        Model::GinibreComplex | Model::GinibreHermitianBaseline => sample_ginibre(spec),
        _ => sample_syk(spec),
    }
}

/// `D x D` matrix with independent entries `A + iB`, `A, B ~ N(0, 1/(2D))`.
///
/// The Hermitian baseline symmetrizes the same draw as `(A + A†)/sqrt(2)`,
/// which keeps `E|H_mn|^2 = 1/D` off the diagonal.
pub fn sample_ginibre(spec: &EnsembleSpec) -> Result<HamiltonianRealization> {
    spec.validate()?;
    if !matches!(
        spec.model,
        Model::GinibreComplex | Model::GinibreHermitianBaseline
    ) {
        return Err(Error::invalid(format!("{} is not a Ginibre model", spec.model)));
    }
    let basis = enumerate_half_filling(spec.n_modes)?;
    let d = basis.dim();
    let std = (1.0 / (2.0 * d as f64)).sqrt();
    let mut rng = spec.rng();
    let mut a = Mat::<c64>::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let re = gaussian(&mut rng, std);
            let im = gaussian(&mut rng, std);
            a[(m, n)] = c64::new(re, im);
        }
    }
    let matrix = if spec.model == Model::GinibreHermitianBaseline {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Mat::from_fn(d, d, |m, n| (a[(m, n)] + a[(n, m)].conj()) * s)
    } else {
        a
    };
    Ok(HamiltonianRealization {
        spec: *spec,
        matrix,
        basis,
    })
}

/// SYK couplings `J_{i1 i2 : j1 j2}` stored on ordered representatives
/// `i1 < i2`, `j1 < j2`.
#[derive(Debug, Clone)]
pub struct CouplingTensor {
    n_modes: usize,
    pairs: Vec<(usize, usize)>,
    pair_index: Vec<Vec<Option<usize>>>,
    values: Vec<c64>,
}

impl CouplingTensor {
    fn zeros(n_modes: usize) -> Self {
        let mut pairs = Vec::new();
        let mut pair_index = vec![vec![None; n_modes]; n_modes];
        for (i, row) in pair_index.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
                *slot = Some(pairs.len());
                pairs.push((i, j));
            }
        }
        let p = pairs.len();
        Self {
            n_modes,
            pairs,
            pair_index,
            values: vec![c64::new(0.0, 0.0); p * p],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Ordered mode pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Amplitude on ordered representatives `p = (i1,i2)`, `q = (j1,j2)`.
    pub fn representative(&self, p: usize, q: usize) -> c64 {
        self.values[p * self.pairs.len() + q]
    }

    fn set(&mut self, p: usize, q: usize, v: c64) {
        let np = self.pairs.len();
        self.values[p * np + q] = v;
    }

    fn ordered(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        if a == b {
            return None;
        }
        if a < b {
            Some((self.pair_index[a][b]?, 1.0))
        } else {
            Some((self.pair_index[b][a]?, -1.0))
        }
    }

    /// Full antisymmetric amplitude `J_{i1 i2 : j1 j2}` for arbitrary indices.
    pub fn get(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> c64 {
        match (self.ordered(i1, i2), self.ordered(j1, j2)) {
            (Some((p, sp)), Some((q, sq))) => self.representative(p, q) * (sp * sq),
            _ => c64::new(0.0, 0.0),
        }
    }

    /// Returns a copy with every `{i1,i2} = {j1,j2}` amplitude set to zero.
    pub fn without_diagonal(&self) -> Self {
        let mut out = self.clone();
        for p in 0..self.pairs.len() {
            out.set(p, p, c64::new(0.0, 0.0));
        }
        out
    }
}

/// Draws the coupling tensor for an SYK model.
///
/// Components have variance 1/2 (non-Hermitian cases); the Hermitian baseline
/// uses `var(Re J) = 1` on the diagonal and 1/2 per component elsewhere.
pub fn sample_couplings(spec: &EnsembleSpec) -> Result<CouplingTensor> {
    spec.validate()?;
    let mut rng = spec.rng();
    let mut t = CouplingTensor::zeros(spec.n_modes);
    let np = t.pairs.len();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..np {
        for q in 0..np {
            match spec.model {
                Model::SykCaseI => {
                    let v = c64::new(gaussian(&mut rng, half), gaussian(&mut rng, half));
                    t.set(p, q, v);
                }
                Model::SykCaseII => {
                    let v = if p == q {
                        c64::new(gaussian(&mut rng, half), 0.0)
                    } else {
                        c64::new(gaussian(&mut rng, half), gaussian(&mut rng, half))
                    };
                    t.set(p, q, v);
                }
                Model::SykCaseIII => {
                    if p <= q {
                        let v = c64::new(gaussian(&mut rng, half), gaussian(&mut rng, half));
                        t.set(p, q, v);
                        if p < q {
                            t.set(q, p, v.conj());
                        }
                    }
                }
                Model::SykHermitian => {
                    if p == q {
                        t.set(p, q, c64::new(gaussian(&mut rng, 1.0), 0.0));
                    } else if p < q {
                        let v = c64::new(gaussian(&mut rng, half), gaussian(&mut rng, half));
                        t.set(p, q, v);
                        t.set(q, p, v.conj());
                    }
                }
                other => {
                    return Err(Error::invalid(format!("{other} is not an SYK model")));
                }
            }
        }
    }
    Ok(t)
}

/// Assembles `H = (2N)^{-3/2} sum_{i1 i2 j1 j2} J c†_{i1} c†_{i2} c_{j1} c_{j2}`
/// on the half-filled sector.
///
/// The unrestricted sum visits each ordered representative four times with
/// matching antisymmetry signs, so it equals `4 (2N)^{-3/2}` times the sum
/// over representatives.
pub fn syk_hamiltonian(couplings: &CouplingTensor, basis: &FockBasis) -> Result<Mat<c64>> {
    let n = basis.n_modes();
    if couplings.n_modes != n {
        return Err(Error::invalid("coupling tensor and basis disagree on N"));
    }
    let d = basis.dim();
    let scale = 4.0 / (2.0 * n as f64).powf(1.5);
    let np = couplings.pairs.len();
    let mut h = Mat::<c64>::zeros(d, d);
    for (b, &s) in basis.states().iter().enumerate() {
        for (q, &(j1, j2)) in couplings.pairs.iter().enumerate() {
            // c_{j1} c_{j2}: c_{j2} acts first
            let Some((s2, t2)) = annihilate(s, j2) else { continue };
            let Some((s1, t1)) = annihilate(t2, j1) else { continue };
            for (p, &(i1, i2)) in couplings.pairs.iter().enumerate() {
                let Some((s3, t3)) = create(t1, i2) else { continue };
                let Some((s4, t4)) = create(t3, i1) else { continue };
                let a = basis
                    .index_of(t4)
                    .expect("four-fermion term conserves particle number");
                let sign = s1 * s2 * s3 * s4 * scale;
                h[(a, b)] += couplings.values[p * np + q] * sign;
            }
        }
    }
    Ok(h)
}

/// Samples one SYK realization.
pub fn sample_syk(spec: &EnsembleSpec) -> Result<HamiltonianRealization> {
    if !spec.model.is_syk() {
        return Err(Error::invalid(format!("{} is not an SYK model", spec.model)));
    }
    let couplings = sample_couplings(spec)?;
    let basis = enumerate_half_filling(spec.n_modes)?;
    let matrix = syk_hamiltonian(&couplings, &basis)?;
    Ok(HamiltonianRealization {
        spec: *spec,
        matrix,
        basis,
    })
}

/// Magic bytes of the binary matrix dump.
pub const MATRIX_MAGIC: &[u8; 6] = b"NHETH1";

/// Header of a binary matrix dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub n_modes: u32,
    pub dim: u64,
    pub model: Model,
}

/// Writes `NHETH1 | N: u32 | D: u64 | model: u8 | row-major (re, im) f64 pairs`,
/// all little-endian.
pub fn write_matrix<W: Write>(
    mut w: W,
    n_modes: usize,
    model: Model,
    matrix: &Mat<c64>,
) -> std::io::Result<()> {
    let d = matrix.nrows();
    assert_eq!(d, matrix.ncols(), "matrix dump expects a square matrix");
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(n_modes as u32).to_le_bytes())?;
    w.write_all(&(d as u64).to_le_bytes())?;
    w.write_all(&[model.tag()])?;
    let mut row = Vec::with_capacity(16 * d);
    for m in 0..d {
        row.clear();
        for n in 0..d {
            let z = matrix[(m, n)];
            row.extend_from_slice(&z.re.to_le_bytes());
            row.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&row)?;
    }
    w.flush()
}

/// Reads a dump written by [`write_matrix`].
pub fn read_matrix<R: Read>(mut r: R) -> std::io::Result<(MatrixHeader, Mat<c64>)> {
    use std::io::{Error as IoError, ErrorKind};
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(IoError::new(ErrorKind::InvalidData, "bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b4)?;
    r.read_exact(&mut b8)?;
    r.read_exact(&mut b1)?;
    let n_modes = u32::from_le_bytes(b4);
    let dim = u64::from_le_bytes(b8);
    let model = Model::from_tag(b1[0])
        .ok_or_else(|| IoError::new(ErrorKind::InvalidData, "unknown model tag"))?;
    let d = usize::try_from(dim).map_err(|_| IoError::new(ErrorKind::InvalidData, "D too large"))?;
    let mut buf = vec![0u8; 16 * d];
    let mut out = Mat::<c64>::zeros(d, d);
    for m in 0..d {
        r.read_exact(&mut buf)?;
        for n in 0..d {
            let o = 16 * n;
            let re = f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[o + 8..o + 16].try_into().unwrap());
            out[(m, n)] = c64::new(re, im);
        }
    }
    Ok((
        MatrixHeader {
            n_modes,
            dim,
            model,
        },
        out,
    ))
}
