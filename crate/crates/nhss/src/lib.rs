//! Cumulative-sampling non-homogeneous sample selection (CS-NHSS).
//!
//! Echo bins well above the noise floor are grouped into segments, one per
//! pulse return. Segments are added to a growing sample set from near to far;
//! the sum of squared correlations between the presumed target steering
//! vector and the leading eigenvectors jumps when the true target's segment
//! enters. That segment is removed and the rest are returned as training data
//! for the interference-plus-noise covariance.

use faer::{c64, Col, ColRef, Mat, MatRef};
use serde::{Deserialize, Serialize};
use stca_eigen::{eig_descending, sample_covariance, CovarianceKind, CovarianceMatrix, EigenError, EigenSplit};
use stca_scene::DataCube;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NhssError {
    #[error("invalid thresholds: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

pub type Result<T> = std::result::Result<T, NhssError>;

/// Scaling of the steering vector in correlation sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMode {
    /// Unit-norm steering vector: correlations lie in `[0, 1]`.
    #[default]
    Normalized,
    /// Unscaled steering vector with `MN` squared norm.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionThresholds {
    /// Sampling threshold above the noise floor, dB.
    pub eta_db: f64,
    /// Target presence threshold on the best correlation.
    pub chi: f64,
    /// Threshold on the jump of the cumulative correlation sum.
    pub zeta: f64,
    pub mode: CorrelationMode,
}

impl Default for DetectionThresholds {
    /// Normalised thresholds placed between the target-absent and
    /// target-present correlation distributions (see `calibrate_threshold`).
    fn default() -> Self {
        Self { eta_db: 7.0, chi: 0.5, zeta: 0.5, mode: CorrelationMode::Normalized }
    }
}

impl DetectionThresholds {
    /// Unnormalised thresholds for a 256-element virtual array.
    pub fn raw() -> Self {
        Self { eta_db: 7.0, chi: 150.0, zeta: 125.0, mode: CorrelationMode::Raw }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_db", self.eta_db), ("chi", self.chi), ("zeta", self.zeta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(NhssError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    /// Largest squared correlation with any eigenvector.
    pub gamma: f64,
    /// 1-based position of that eigenvector in descending eigenvalue order.
    pub rank: usize,
    pub eigenvector: Col<c64>,
}

fn scaled(v: ColRef<'_, c64>, mode: CorrelationMode) -> Result<Col<c64>> {
    let norm = v.norm_l2();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(NhssError::Argument("steering vector must be nonzero".into()));
    }
    Ok(match mode {
        CorrelationMode::Normalized => Col::from_fn(v.nrows(), |i| v[i] / norm),
        CorrelationMode::Raw => v.to_owned(),
    })
}

fn correlations(vectors: MatRef<'_, c64>, v: &Col<c64>) -> Vec<f64> {
    let c = vectors.adjoint() * v;
    c.iter().map(|x| x.norm_sqr()).collect()
}

pub fn best_correlation(e: &EigenSplit, v_s0: ColRef<'_, c64>, mode: CorrelationMode) -> Result<CorrelationReport> {
    if v_s0.nrows() != e.dim() {
        return Err(NhssError::Argument("steering vector length does not match covariance".into()));
    }
    let v = scaled(v_s0, mode)?;
    let corr = correlations(e.eigenvectors.as_ref(), &v);
    let (idx, gamma) = corr
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &g)| if g > best.1 { (i, g) } else { best });
    Ok(CorrelationReport { gamma, rank: idx + 1, eigenvector: e.eigenvectors.col(idx).to_owned() })
}

/// Sum of squared correlations with the leading `count` eigenvectors.
pub fn correlation_sum(e: &EigenSplit, v_s0: ColRef<'_, c64>, count: usize, mode: CorrelationMode) -> Result<f64> {
    let v = scaled(v_s0, mode)?;
    Ok(correlations(e.leading(count), &v).iter().sum())
}

/// Inclusive range of bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn num_bins(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn bins(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }

    pub fn contains(&self, bin: usize) -> bool {
        (self.start..=self.end).contains(&bin)
    }
}

#[derive(Debug, Clone)]
pub struct SampleSegments {
    /// Disjoint and sorted near to far.
    pub segments: Vec<Segment>,
    pub noise_floor: f64,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn runs_above(power: &[f64], threshold: f64, min_len: usize) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &p) in power.iter().chain(std::iter::once(&f64::NEG_INFINITY)).enumerate() {
        match (p > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    out.push(Segment { start: s, end: i - 1 });
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Segments of a per-bin power profile. The floor is first taken as the
/// median of all bins, then re-estimated from the bins outside the segments.
pub fn segment_profile(power: &[f64], eta_db: f64, min_len: usize) -> SampleSegments {
    let factor = 10f64.powf(eta_db / 10.0);
    let mut floor = median(&mut power.to_vec());
    let mut segments = runs_above(power, floor * factor, min_len);
    let mut outside: Vec<f64> = power
        .iter()
        .enumerate()
        .filter(|(i, _)| !segments.iter().any(|s| s.contains(*i)))
        .map(|(_, &p)| p)
        .collect();
    if !outside.is_empty() {
        floor = median(&mut outside);
        segments = runs_above(power, floor * factor, min_len);
    }
    SampleSegments { segments, noise_floor: floor }
}

/// Minimum segment length: more than four fifths of a pulse return.
pub fn min_segment_len(pulse_bins: usize) -> usize {
    ((0.8 * pulse_bins as f64) - 1e-9).ceil().max(1.0) as usize
}

pub fn segment_echo(cube: &DataCube, eta_db: f64, pulse_bins: usize) -> SampleSegments {
    segment_profile(&cube.power_profile(), eta_db, min_segment_len(pulse_bins))
}

/// Snapshots of one segment.
#[derive(Debug, Clone)]
pub struct SegmentSamples {
    pub segment: Segment,
    pub snapshots: Mat<c64>,
}

pub fn collect_segments(cube: &DataCube, segments: &SampleSegments) -> Vec<SegmentSamples> {
    segments
        .segments
        .iter()
        .map(|s| SegmentSamples { segment: *s, snapshots: cube.gather_bins(&s.bins().collect::<Vec<_>>()) })
        .collect()
}

#[derive(Debug, Clone)]
pub struct NhssResult {
    pub target_present: bool,
    /// 1-based index of the target segment in near-to-far order.
    pub target_segment_index: Option<usize>,
    pub target_segment: Option<Segment>,
    /// First bin of the target segment.
    pub target_range_bin: Option<usize>,
    /// Training snapshots, one column each, target bins excluded when a target was found.
    pub training: Mat<c64>,
    pub training_segments: Vec<Segment>,
    /// Cumulative correlation sums, one per segment examined.
    pub gamma_trace: Vec<f64>,
    /// Best correlation against the full-echo eigenvectors.
    pub correlation: CorrelationReport,
    pub segments: Vec<Segment>,
    pub noise_floor: f64,
}

impl NhssResult {
    /// Jamming subspace dimension for the training covariance: one per training segment.
    pub fn jamming_dimension(&self) -> usize {
        self.training_segments.len()
    }

    pub fn training_covariance(&self) -> Result<CovarianceMatrix> {
        let mut r = sample_covariance(self.training.as_ref())?;
        r.kind = CovarianceKind::Training;
        Ok(r)
    }

    pub fn training_bins(&self) -> Vec<usize> {
        self.training_segments.iter().flat_map(|s| s.bins()).collect()
    }
}

/// Core search over pre-collected segments. `full` is the eigen-decomposition
/// of the covariance of the complete echo.
pub fn locate_in_segments(
    segments: &[SegmentSamples],
    noise_floor: f64,
    full: &EigenSplit,
    v_s0: ColRef<'_, c64>,
    thresholds: &DetectionThresholds,
) -> Result<NhssResult> {
    thresholds.validate()?;
    let correlation = best_correlation(full, v_s0, thresholds.mode)?;
    let all: Vec<Segment> = segments.iter().map(|s| s.segment).collect();
    let mut gamma_trace = Vec::new();
    let mut found = None;

    if correlation.gamma >= thresholds.chi {
        let rho = correlation.rank;
        let n = full.dim();
        let mut sum = Mat::<c64>::zeros(n, n);
        let mut count = 0usize;
        let mut previous = 0.0;
        for (q, seg) in segments.iter().enumerate() {
            let part = sample_covariance(seg.snapshots.as_ref())?;
            let k = seg.snapshots.ncols();
            sum += faer::Scale(c64::new(k as f64, 0.0)) * &part.values;
            count += k;
            let cumulative = CovarianceMatrix {
                values: faer::Scale(c64::new(1.0 / count as f64, 0.0)) * &sum,
                sample_count: count,
                kind: CovarianceKind::Training,
            };
            let e = eig_descending(&cumulative)?;
            let gamma = correlation_sum(&e, v_s0, rho, thresholds.mode)?;
            gamma_trace.push(gamma);
            if (gamma - previous).abs() >= thresholds.zeta {
                found = Some(q);
                break;
            }
            previous = gamma;
        }
    }

    let keep: Vec<usize> = (0..segments.len()).filter(|&q| Some(q) != found).collect();
    let columns: usize = keep.iter().map(|&q| segments[q].snapshots.ncols()).sum();
    let n = full.dim();
    let mut training = Mat::<c64>::zeros(n, columns);
    let mut at = 0;
    for &q in &keep {
        let s = &segments[q].snapshots;
        training.as_mut().subcols_mut(at, s.ncols()).copy_from(s);
        at += s.ncols();
    }
    Ok(NhssResult {
        target_present: found.is_some(),
        target_segment_index: found.map(|q| q + 1),
        target_segment: found.map(|q| segments[q].segment),
        target_range_bin: found.map(|q| segments[q].segment.start),
        training,
        training_segments: keep.iter().map(|&q| segments[q].segment).collect(),
        gamma_trace,
        correlation,
        segments: all,
        noise_floor,
    })
}

pub fn locate_target(
    cube: &DataCube,
    full: &EigenSplit,
    v_s0: ColRef<'_, c64>,
    thresholds: &DetectionThresholds,
    pulse_bins: usize,
) -> Result<NhssResult> {
    thresholds.validate()?;
    let segs = segment_echo(cube, thresholds.eta_db, pulse_bins);
    let samples = collect_segments(cube, &segs);
    locate_in_segments(&samples, segs.noise_floor, full, v_s0, thresholds)
}

/// Full pipeline: covariance of the whole echo, decomposition, then search.
pub fn run_cs_nhss(
    cube: &DataCube,
    v_s0: ColRef<'_, c64>,
    thresholds: &DetectionThresholds,
    pulse_bins: usize,
) -> Result<NhssResult> {
    thresholds.validate()?;
    let r = sample_covariance(cube.snapshots())?;
    let e = eig_descending(&r)?;
    locate_target(cube, &e, v_s0, thresholds, pulse_bins)
}

/// Threshold at the knee between two score populations: the midpoint of the
/// gap when they separate, otherwise the point minimising total errors.
pub fn calibrate_threshold(absent: &[f64], present: &[f64]) -> Option<f64> {
    if absent.is_empty() || present.is_empty() {
        return None;
    }
    let hi0 = absent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo1 = present.iter().copied().fold(f64::INFINITY, f64::min);
    if hi0 < lo1 {
        return Some(0.5 * (hi0 + lo1));
    }
    let mut candidates: Vec<f64> = absent.iter().chain(present).copied().collect();
    candidates.sort_by(f64::total_cmp);
    let errors = |t: f64| absent.iter().filter(|&&x| x >= t).count() + present.iter().filter(|&&x| x < t).count();
    candidates.into_iter().min_by_key(|&t| errors(t))
}
