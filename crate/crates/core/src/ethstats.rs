//! Observable matrix elements in the right-eigenvector basis, the
//! overlap-corrected off-diagonal elements, energy windows, and the pooled
//! fluctuation statistics built from them.

use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{exact_diagonal, trace};
use crate::spectral::{overlap_gram, OverlapGram, SpectralDecomposition};
use crate::stats::{gaussian_fit, sample_variance, GaussianFit};

/// Which pair of eigenvector families sandwiches the observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// `<R_m|O|R_n>`
    RightRight,
    /// `<R_m|O|L_n>` with `|L_n> = (<L_n|)†`
    RightLeft,
}

#[derive(Debug, Clone)]
pub struct MatrixElementSet {
    pub basis_kind: BasisKind,
    pub elements: Mat<c64>,
    /// Present for [`BasisKind::RightRight`] only.
    pub gram: Option<OverlapGram>,
    /// `O-bar = tr(O) / D`.
    pub observable_mean: f64,
    /// `tr(O^2) / D`.
    pub observable_sq_mean: f64,
}

impl MatrixElementSet {
    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// RMT fluctuation scale `sqrt(mean(O^2) / D)`.
    pub fn fluctuation_scale(&self) -> f64 {
        (self.observable_sq_mean / self.dim() as f64).sqrt()
    }
}

/// `diag(w) * r`, i.e. a diagonal observable applied to every column of `r`.
fn scale_rows(w: &[c64], r: MatRef<'_, c64>) -> Mat<c64> {
    Mat::from_fn(r.nrows(), r.ncols(), |i, j| w[i] * r[(i, j)])
}

pub fn matrix_elements(
    o: MatRef<'_, c64>,
    dec: &SpectralDecomposition,
    kind: BasisKind,
) -> Result<MatrixElementSet> {
    let d = dec.dim();
    if o.nrows() != d || o.ncols() != d {
        return Err(Error::invalid(format!(
            "observable is {}x{} but the decomposition has dimension {d}",
            o.nrows(),
            o.ncols()
        )));
    }
    let r = dec.right();
    let ket = match kind {
        BasisKind::RightRight => r.to_owned(),
        BasisKind::RightLeft => dec.left().adjoint().to_owned(),
    };
    let o_ket = match exact_diagonal(o) {
        Some(w) => scale_rows(&w, ket.as_ref()),
        None => o * &ket,
    };
    let elements = r.adjoint() * &o_ket;
    let gram = match kind {
        BasisKind::RightRight => Some(overlap_gram(dec)),
        BasisKind::RightLeft => None,
    };
    let observable_mean = trace(o).re / d as f64;
    let mut sq = 0.0;
    for i in 0..d {
        for k in 0..d {
            sq += (o[(i, k)] * o[(k, i)]).re;
        }
    }
    Ok(MatrixElementSet {
        basis_kind: kind,
        elements,
        gram,
        observable_mean,
        observable_sq_mean: sq / d as f64,
    })
}

/// Off-diagonal elements with the overlap contribution removed:
/// `O~_mm = O_mm`, `O~_mn = O_mn - G_mn O-bar`.
#[derive(Debug, Clone)]
pub struct CorrectedElements {
    pub tilde: Mat<c64>,
}

pub fn corrected_elements(mset: &MatrixElementSet) -> Result<CorrectedElements> {
    let gram = match (mset.basis_kind, &mset.gram) {
        (BasisKind::RightRight, Some(g)) => g,
        _ => {
            return Err(Error::UnsupportedBasis(
                "the overlap correction is defined for right-right matrix elements only".into(),
            ))
        }
    };
    let d = mset.dim();
    let obar = mset.observable_mean;
    let tilde = Mat::from_fn(d, d, |m, n| {
        if m == n {
            mset.elements[(m, n)]
        } else {
            mset.elements[(m, n)] - gram.get(m, n) * obar
        }
    });
    Ok(CorrectedElements { tilde })
}

/// Splitting of `|R_n>` into its component along `|R_m>` and an orthogonal
/// remainder: `|R_n> = alpha |R_m> + beta |R_{n perp m}>`.
#[derive(Debug, Clone)]
pub struct DecompositionCheck {
    /// `<R_m|R_n>`
    pub alpha: c64,
    /// `<R_{n perp m}|R_n>`
    pub beta: c64,
    /// `|| |R_n> - alpha|R_m> - beta|R_{n perp m}> ||_2`
    pub residual: f64,
    /// The normalized orthogonal component `|R_{n perp m}>`.
    pub perp: Vec<c64>,
}

pub fn decomposition_check(dec: &SpectralDecomposition, m: usize, n: usize) -> Result<DecompositionCheck> {
    let d = dec.dim();
    if m == n {
        return Err(Error::invalid("decomposition check needs m != n"));
    }
    if m >= d || n >= d {
        return Err(Error::invalid(format!("indices ({m}, {n}) out of range for D={d}")));
    }
    let r = dec.right();
    let rm = r.col(m);
    let rn = r.col(n);
    let alpha: c64 = (0..d).map(|i| rm[i].conj() * rn[i]).sum();
    let mut perp: Vec<c64> = (0..d).map(|i| rn[i] - alpha * rm[i]).collect();
    let norm = perp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::ExceptionalPoint {
            index: n,
            condition: f64::INFINITY,
        });
    }
    perp.iter_mut().for_each(|z| *z /= norm);
    let beta: c64 = (0..d).map(|i| perp[i].conj() * rn[i]).sum();
    let residual = (0..d)
        .map(|i| (rn[i] - alpha * rm[i] - beta * perp[i]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(DecompositionCheck {
        alpha,
        beta,
        residual,
        perp,
    })
}

impl DecompositionCheck {
    /// Rebuilds `<R_m|O|R_n>` as `alpha O_mm + beta <R_m|O|R_{n perp m}>`.
    pub fn rebuild_element(&self, o: MatRef<'_, c64>, dec: &SpectralDecomposition, m: usize) -> c64 {
        let d = dec.dim();
        let rm = dec.right().col(m);
        let mut o_mm = c64::new(0.0, 0.0);
        let mut o_mp = c64::new(0.0, 0.0);
        for i in 0..d {
            let mut orm = c64::new(0.0, 0.0);
            let mut orp = c64::new(0.0, 0.0);
            for k in 0..d {
                orm += o[(i, k)] * rm[k];
                orp += o[(i, k)] * self.perp[k];
            }
            o_mm += rm[i].conj() * orm;
            o_mp += rm[i].conj() * orp;
        }
        self.alpha * o_mm + self.beta * o_mp
    }
}

/// A region of the complex energy plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyWindow {
    /// `|eps| <= radius`
    Disk { radius: f64 },
    /// `rho_min <= |eps| <= rho_max` and `|arg eps| <= phi_max`
    AngularSlice {
        rho_min: f64,
        rho_max: f64,
        phi_max: f64,
    },
}

impl EnergyWindow {
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
        }
        Ok(EnergyWindow::Disk { radius })
    }

    pub fn slice(rho_min: f64, rho_max: f64, phi_max: f64) -> Result<Self> {
        if !(rho_min >= 0.0 && rho_min < rho_max && rho_max.is_finite()) {
            return Err(Error::invalid(format!(
                "slice needs 0 <= rho_min < rho_max, got [{rho_min}, {rho_max}]"
            )));
        }
        if !(phi_max > 0.0 && phi_max.is_finite()) {
            return Err(Error::invalid(format!("slice needs phi_max > 0, got {phi_max}")));
        }
        Ok(EnergyWindow::AngularSlice {
            rho_min,
            rho_max,
            phi_max,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnergyWindow::Disk { radius } => EnergyWindow::disk(radius).map(|_| ()),
            EnergyWindow::AngularSlice {
                rho_min,
                rho_max,
                phi_max,
            } => EnergyWindow::slice(rho_min, rho_max, phi_max).map(|_| ()),
        }
    }

    pub fn contains(&self, z: c64) -> bool {
        let rho = z.norm();
        match *self {
            EnergyWindow::Disk { radius } => rho <= radius,
            EnergyWindow::AngularSlice {
                rho_min,
                rho_max,
                phi_max,
            } => rho >= rho_min && rho <= rho_max && z.arg().abs() <= phi_max,
        }
    }
}

impl fmt::Display for EnergyWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyWindow::Disk { radius } => write!(f, "disk:{radius}"),
            EnergyWindow::AngularSlice {
                rho_min,
                rho_max,
                phi_max,
            } => write!(f, "slice:{rho_min},{rho_max},{phi_max}"),
        }
    }
}

impl FromStr for EnergyWindow {
    type Err = Error;

    /// Parses `disk:<r>` or `slice:<rho_min>,<rho_max>,<phi_max>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse window {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), nums.as_slice()) {
            ("disk", [r]) => EnergyWindow::disk(*r),
            ("slice", [a, b, c]) => EnergyWindow::slice(*a, *b, *c),
            _ => Err(bad()),
        }
    }
}

impl Serialize for EnergyWindow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for EnergyWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Indices `m` with `eps_m` inside the window, ascending.
pub fn select_window(eigenvalues: &[c64], window: &EnergyWindow) -> Vec<usize> {
    eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &z)| window.contains(z))
        .map(|(m, _)| m)
        .collect()
}

/// Sum of squared moduli and count of off-diagonal entries `(m, n)`, `m != n`,
/// with both indices in `indices`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OffdiagMoments {
    pub sum_sq: f64,
    pub count: usize,
}

impl OffdiagMoments {
    pub fn of(elements: MatRef<'_, c64>, indices: &[usize]) -> Self {
        let mut sum_sq = 0.0;
        let mut count = 0;
        for &m in indices {
            for &n in indices {
                if m != n {
                    sum_sq += elements[(m, n)].norm_sqr();
                    count += 1;
                }
            }
        }
        Self { sum_sq, count }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            sum_sq: self.sum_sq + other.sum_sq,
            count: self.count + other.count,
        }
    }

    pub fn rms(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.sum_sq / self.count as f64).sqrt()
        }
    }
}

/// Windowed matrix elements of one realization, reduced to what pooling needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSamples {
    /// Selected eigenvalues, as `[re, im]`.
    pub energies: Vec<[f64; 2]>,
    /// `Re O_mm` for each selected `m`.
    pub diag: Vec<f64>,
    /// `O~_mn` as `[re, im]` for each unordered selected pair `m < n`.
    pub offdiag: Vec<[f64; 2]>,
    pub observable_mean: f64,
    /// Uncorrected `|O_mn|^2` over ordered selected pairs.
    pub bare: OffdiagMoments,
    /// Corrected `|O~_mn|^2` over ordered selected pairs.
    pub corrected: OffdiagMoments,
}

pub fn window_samples(
    mset: &MatrixElementSet,
    corrected: &CorrectedElements,
    eigenvalues: &[c64],
    window: &EnergyWindow,
) -> WindowSamples {
    let idx = select_window(eigenvalues, window);
    let mut offdiag = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &m) in idx.iter().enumerate() {
        for &n in &idx[a + 1..] {
            let z = corrected.tilde[(m, n)];
            offdiag.push([z.re, z.im]);
        }
    }
    WindowSamples {
        energies: idx.iter().map(|&m| [eigenvalues[m].re, eigenvalues[m].im]).collect(),
        diag: idx.iter().map(|&m| mset.elements[(m, m)].re).collect(),
        offdiag,
        observable_mean: mset.observable_mean,
        bare: OffdiagMoments::of(mset.elements.as_ref(), &idx),
        corrected: OffdiagMoments::of(corrected.tilde.as_ref(), &idx),
    }
}

/// What the diagonal elements are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagReference {
    /// The infinite-temperature mean `tr(O)/D`.
    GlobalMean,
    /// The mean of `O_mm` over the windowed eigenstates of the same
    /// realization. Realizations with fewer than two windowed states carry no
    /// diagonal samples under this reference.
    WindowMean,
}

impl FromStr for DiagReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global-mean" | "global" => Ok(DiagReference::GlobalMean),
            "window-mean" | "window" => Ok(DiagReference::WindowMean),
            other => Err(Error::invalid(format!("unknown diagonal reference {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EthStatistics {
    pub window: EnergyWindow,
    pub reference: DiagReference,
    pub n_realizations: usize,
    /// Selected eigenstates per realization.
    pub window_counts: Vec<usize>,
    /// Mean of all selected eigenvalues, `[re, im]`.
    pub window_mean_energy: [f64; 2],
    /// `O-bar`, averaged over realizations.
    pub observable_mean: f64,
    /// Pooled mean of the raw `O_mm`.
    pub diag_mean: f64,
    /// Value subtracted from `O_mm` to form the diagonal samples.
    pub reference_value: f64,
    /// `O_mm - reference`, sorted. Written to CSV rather than JSON.
    #[serde(skip, default)]
    pub diag_samples: Vec<f64>,
    /// `Re O~_mn` over unordered windowed pairs, sorted. Written to CSV rather
    /// than JSON.
    #[serde(skip, default)]
    pub offdiag_samples: Vec<f64>,
    pub var_diag: f64,
    pub var_offdiag: f64,
    /// Variance of `Im O~_mn`, reported for symmetry diagnostics only.
    pub var_offdiag_imag: f64,
    pub diag_fit: GaussianFit,
    pub offdiag_fit: GaussianFit,
    pub rms_bare_offdiag: f64,
    pub rms_corrected_offdiag: f64,
}

impl EthStatistics {
    pub fn variance_ratio(&self) -> f64 {
        self.var_diag / self.var_offdiag
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn sorted_mean(v: &[f64]) -> f64 {
    sorted(v.to_vec()).iter().sum::<f64>() / v.len() as f64
}

/// Pools windowed samples over realizations.
pub fn pool_statistics(
    realizations: &[WindowSamples],
    window: &EnergyWindow,
    reference: DiagReference,
) -> Result<EthStatistics> {
    if realizations.is_empty() {
        return Err(Error::invalid("pooling needs at least one realization"));
    }
    let window_counts: Vec<usize> = realizations.iter().map(|r| r.diag.len()).collect();
    let raw_diag: Vec<f64> = realizations.iter().flat_map(|r| r.diag.iter().copied()).collect();
    let offdiag_re: Vec<f64> = realizations
        .iter()
        .flat_map(|r| r.offdiag.iter().map(|z| z[0]))
        .collect();
    let offdiag_im: Vec<f64> = realizations
        .iter()
        .flat_map(|r| r.offdiag.iter().map(|z| z[1]))
        .collect();
    if raw_diag.len() < 3 || offdiag_re.len() < 3 {
        return Err(Error::EmptyWindow {
            counts: window_counts,
        });
    }

    let diag_mean = sorted_mean(&raw_diag);
    let observable_mean =
        sorted_mean(&realizations.iter().map(|r| r.observable_mean).collect::<Vec<_>>());
    // per-realization window means, one degree of freedom each
    let groups: Vec<(&WindowSamples, f64)> = realizations
        .iter()
        .filter(|r| r.diag.len() >= 2)
        .map(|r| (r, sorted_mean(&r.diag)))
        .collect();
    let (diag_samples, dof_lost) = match reference {
        DiagReference::GlobalMean => (
            realizations
                .iter()
                .flat_map(|r| r.diag.iter().map(move |x| x - r.observable_mean))
                .collect::<Vec<_>>(),
            1,
        ),
        DiagReference::WindowMean => (
            groups
                .iter()
                .flat_map(|&(r, m)| r.diag.iter().map(move |x| x - m))
                .collect(),
            groups.len(),
        ),
    };
    if diag_samples.len() < dof_lost + 2 {
        return Err(Error::EmptyWindow {
            counts: window_counts,
        });
    }
    let reference_value = match reference {
        DiagReference::GlobalMean => observable_mean,
        DiagReference::WindowMean => sorted_mean(&groups.iter().map(|g| g.1).collect::<Vec<_>>()),
    };
    let diag_samples = sorted(diag_samples);
    let var_diag = match reference {
        DiagReference::GlobalMean => sample_variance(&diag_samples),
        DiagReference::WindowMean => {
            diag_samples.iter().map(|x| x * x).sum::<f64>() / (diag_samples.len() - dof_lost) as f64
        }
    };
    let offdiag_samples = sorted(offdiag_re);

    let er: Vec<f64> = realizations.iter().flat_map(|r| r.energies.iter().map(|z| z[0])).collect();
    let ei: Vec<f64> = realizations.iter().flat_map(|r| r.energies.iter().map(|z| z[1])).collect();

    let bare = realizations
        .iter()
        .fold(OffdiagMoments::default(), |acc, r| acc.merge(r.bare));
    let corrected = realizations
        .iter()
        .fold(OffdiagMoments::default(), |acc, r| acc.merge(r.corrected));

    Ok(EthStatistics {
        window: *window,
        reference,
        n_realizations: realizations.len(),
        window_counts,
        window_mean_energy: [sorted_mean(&er), sorted_mean(&ei)],
        observable_mean,
        diag_mean,
        reference_value,
        var_diag,
        var_offdiag: sample_variance(&offdiag_samples),
        var_offdiag_imag: sample_variance(&offdiag_im),
        diag_fit: gaussian_fit(&diag_samples)?,
        offdiag_fit: gaussian_fit(&offdiag_samples)?,
        diag_samples,
        offdiag_samples,
        rms_bare_offdiag: bare.rms(),
        rms_corrected_offdiag: corrected.rms(),
    })
}
