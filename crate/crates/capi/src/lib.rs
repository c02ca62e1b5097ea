//! C ABI for the faircrowd library.
//!
//! Conventions:
//! - Objects cross the boundary as opaque pointers created by `fc_*_new` /
//!   `fc_*_load_*` constructors and released by the matching `fc_*_free`.
//!   Every `fc_*_free` accepts NULL as a no-op.
//! - Fallible functions return an [`FcStatus`]; `FC_STATUS_OK` is 0. On any
//!   failure a human-readable message is stored in thread-local state and can
//!   be fetched with [`fc_last_error_message`].
//! - Output parameters are written only on success. Buffers are caller
//!   allocated; their capacity is passed in elements and checked.
//! - Panics never unwind across the boundary; they surface as
//!   `FC_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use faircrowd::aggregate::{PosteriorTable, Source};
use faircrowd::baseline::post_td;
use faircrowd::data::{load_csv, GroupAssignment, LabelMatrix};
use faircrowd::error::Error;
use faircrowd::experiments::aggregate_with;
use faircrowd::fair::{apply, fairify, FairConfig, FairifyResult};
use faircrowd::metrics::{dp_gap, f1_accuracy};
use faircrowd::theory::baillon_eta;

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(message: &str) {
    LAST_ERROR.with(|slot| {
        let mut bytes = slot.borrow_mut();
        bytes.clear();
        bytes.extend_from_slice(message.as_bytes());
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().clear());
}

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FcStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A parameter was outside its admissible range.
    InvalidArgument = 2,
    /// The operation needs ground-truth labels the dataset does not carry.
    TruthRequired = 3,
    /// A buffer or array length does not match the dataset.
    LengthMismatch = 4,
    /// Reading or writing a file failed.
    Io = 5,
    /// The input data failed validation (bad labels, empty groups, ...).
    Data = 6,
    /// An internal invariant was violated.
    Internal = 7,
}

/// Label-aggregation method selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FcMethod {
    /// Majority vote with ties predicting 1.
    MajorityVote = 0,
    /// Posterior weighting under a confusion model estimated against truth.
    Bayes = 1,
    /// One-coin EM without ground truth.
    DawidSkene = 2,
}

impl From<FcMethod> for Source {
    fn from(method: FcMethod) -> Self {
        match method {
            FcMethod::MajorityVote => Source::MajorityVote,
            FcMethod::Bayes => Source::Bayes,
            FcMethod::DawidSkene => Source::DawidSkene,
        }
    }
}

/// Tuning knobs of the fairness post-processor; `fc_fair_config_default`
/// supplies the standard values.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FcFairConfig {
    /// Demographic-parity budget, >= 0.
    pub epsilon: f64,
    /// Softmax temperature of the smoothed risk objective.
    pub softmax_c: f64,
    /// Half-width of the randomization band around each threshold; 0 makes
    /// the classifier deterministic.
    pub delta: f64,
    /// Width of the preprocessed upper posterior tail, in [0, 1).
    pub alpha: f64,
    /// Half-width of the dual-weight search interval.
    pub beta_bound: f64,
    /// Grid points per randomization-weight axis, >= 2.
    pub omega_grid: usize,
}

impl From<FcFairConfig> for FairConfig {
    fn from(c: FcFairConfig) -> Self {
        FairConfig {
            epsilon: c.epsilon,
            softmax_c: c.softmax_c,
            delta: c.delta,
            alpha: c.alpha,
            beta_bound: c.beta_bound,
            omega_grid: c.omega_grid,
        }
    }
}

/// Parameters of a fitted randomized group-threshold classifier.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FcClassifierParams {
    /// Selected dual weight; 0 means the parity constraint was inactive.
    pub beta_star: f64,
    /// Per-group decision thresholds, indexed by group.
    pub tau: [f64; 2],
    /// Per-group randomization weights inside the threshold band.
    pub omega: [f64; 2],
    /// Band half-width.
    pub delta: f64,
    /// Estimated group marginals N_a / N.
    pub pi_hat: [f64; 2],
    /// Distance between the achieved parity gap and its target (0 when the
    /// band mass could hit the budget exactly).
    pub residual: f64,
    /// 1 when the dual-weight search ended on the search boundary.
    pub at_boundary: u8,
}

/// A vote matrix together with per-task protected groups and optional truth.
pub struct FcDataset {
    matrix: LabelMatrix,
    groups: GroupAssignment,
}

/// Per-task posterior probabilities produced by an aggregation method.
pub struct FcPosterior(PosteriorTable);

/// A fitted fair classifier bound to the posterior table it was trained on.
pub struct FcFairFit(FairifyResult);

fn status_of(e: &Error) -> FcStatus {
    match e {
        Error::Io(_) | Error::Csv(_) => FcStatus::Io,
        Error::InvalidConfig(_) => FcStatus::InvalidArgument,
        Error::TruthRequired(_) => FcStatus::TruthRequired,
        Error::LengthMismatch(_) => FcStatus::LengthMismatch,
        _ => FcStatus::Data,
    }
}

fn fail(e: &Error) -> FcStatus {
    set_last_error(&e.to_string());
    status_of(e)
}

fn fail_null(what: &str) -> FcStatus {
    set_last_error(&format!("{what} must not be NULL"));
    FcStatus::NullArgument
}

/// Runs `f` with panics converted to `FC_STATUS_INTERNAL` and clears the
/// error slot on success.
fn guarded(f: impl FnOnce() -> FcStatus) -> FcStatus {
    let status = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {message}"));
            FcStatus::Internal
        }
    };
    if status == FcStatus::Ok {
        clear_last_error();
    }
    status
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buffer` as a
/// NUL-terminated string, truncating to `capacity` bytes (NUL included).
/// Returns the full message length in bytes, NUL excluded; 0 means the last
/// call on this thread succeeded. `buffer` may be NULL to query the length.
#[no_mangle]
pub unsafe extern "C" fn fc_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let bytes = slot.borrow();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// The sup-pmf constant appearing in the small-crowd parity bound.
#[no_mangle]
pub extern "C" fn fc_baillon_eta() -> f64 {
    baillon_eta()
}

/// Builds a dataset from parallel vote arrays.
///
/// `vote_tasks`, `vote_annotators`, and `vote_labels` hold `n_votes` entries
/// each: task index, annotator index, and binary label (0 or 1) of one vote.
/// `groups` holds one entry in {0, 1} per task. `truth` is either NULL or
/// one binary entry per task. Every task needs at least one vote and no
/// annotator may vote twice on a task.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_new(
    n_tasks: usize,
    n_annotators: usize,
    n_votes: usize,
    vote_tasks: *const usize,
    vote_annotators: *const usize,
    vote_labels: *const u8,
    groups: *const u8,
    truth: *const u8,
    out: *mut *mut FcDataset,
) -> FcStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        if vote_tasks.is_null() || vote_annotators.is_null() || vote_labels.is_null() {
            return fail_null("vote arrays");
        }
        if groups.is_null() {
            return fail_null("groups");
        }
        let tasks = std::slice::from_raw_parts(vote_tasks, n_votes);
        let annotators = std::slice::from_raw_parts(vote_annotators, n_votes);
        let labels = std::slice::from_raw_parts(vote_labels, n_votes);
        let group_vec = std::slice::from_raw_parts(groups, n_tasks).to_vec();
        let truth_vec = if truth.is_null() {
            None
        } else {
            Some(std::slice::from_raw_parts(truth, n_tasks).iter().map(|&y| y != 0).collect())
        };

        let votes = (0..n_votes).map(|i| (tasks[i], annotators[i], labels[i] != 0));
        let matrix = match LabelMatrix::from_votes(n_tasks, n_annotators, votes) {
            Ok(m) => m,
            Err(e) => return fail(&e),
        };
        let groups = match GroupAssignment::new(group_vec, truth_vec) {
            Ok(g) => g,
            Err(e) => return fail(&e),
        };
        *out = Box::into_raw(Box::new(FcDataset { matrix, groups }));
        FcStatus::Ok
    })
}

unsafe fn path_arg(ptr: *const c_char, what: &str) -> Result<PathBuf, FcStatus> {
    if ptr.is_null() {
        return Err(fail_null(what));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_last_error(&format!("{what} is not valid UTF-8"));
            Err(FcStatus::InvalidArgument)
        }
    }
}

/// Loads a dataset from CSV files: votes (`task_id,annotator_id,label`),
/// groups (`task_id,a`), and optionally truth (`task_id,y`; pass NULL to
/// skip).
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_load_csv(
    votes_path: *const c_char,
    groups_path: *const c_char,
    truth_path: *const c_char,
    out: *mut *mut FcDataset,
) -> FcStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        let votes = match path_arg(votes_path, "votes_path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let groups = match path_arg(groups_path, "groups_path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let truth = if truth_path.is_null() {
            None
        } else {
            match path_arg(truth_path, "truth_path") {
                Ok(p) => Some(p),
                Err(s) => return s,
            }
        };
        match load_csv(&votes, &groups, truth.as_deref()) {
            Ok(data) => {
                *out = Box::into_raw(Box::new(FcDataset {
                    matrix: data.matrix,
                    groups: data.groups,
                }));
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of tasks in the dataset; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_n_tasks(dataset: *const FcDataset) -> usize {
    dataset.as_ref().map_or(0, |ds| ds.matrix.n_tasks())
}

/// Size of the dataset's annotator index space; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_n_annotators(dataset: *const FcDataset) -> usize {
    dataset.as_ref().map_or(0, |ds| ds.matrix.n_annotators())
}

/// 1 when the dataset carries ground-truth labels, else 0.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_has_truth(dataset: *const FcDataset) -> u8 {
    u8::from(dataset.as_ref().is_some_and(|ds| ds.groups.truth().is_some()))
}

/// Releases a dataset. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fc_dataset_free(dataset: *mut FcDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Aggregates the dataset's votes into per-task posteriors with the chosen
/// method. `FC_METHOD_BAYES` requires ground truth in the dataset.
#[no_mangle]
pub unsafe extern "C" fn fc_aggregate(
    dataset: *const FcDataset,
    method: FcMethod,
    out: *mut *mut FcPosterior,
) -> FcStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        let Some(ds) = dataset.as_ref() else {
            return fail_null("dataset");
        };
        match aggregate_with(method.into(), &ds.matrix, &ds.groups) {
            Ok(table) => {
                *out = Box::into_raw(Box::new(FcPosterior(table)));
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of tasks covered by the posterior table; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn fc_posterior_n_tasks(posterior: *const FcPosterior) -> usize {
    posterior.as_ref().map_or(0, |p| p.0.n_tasks())
}

/// Copies the per-task probabilities of class 1 into `buffer` (`capacity`
/// elements, must cover every task).
#[no_mangle]
pub unsafe extern "C" fn fc_posterior_values(
    posterior: *const FcPosterior,
    buffer: *mut f64,
    capacity: usize,
) -> FcStatus {
    guarded(|| {
        let Some(p) = posterior.as_ref() else {
            return fail_null("posterior");
        };
        if buffer.is_null() {
            return fail_null("buffer");
        }
        let n = p.0.n_tasks();
        if capacity < n {
            set_last_error(&format!("buffer holds {capacity} elements but there are {n} tasks"));
            return FcStatus::LengthMismatch;
        }
        std::ptr::copy_nonoverlapping(p.0.phi1.as_ptr(), buffer, n);
        FcStatus::Ok
    })
}

/// Copies hard labels (1 iff the posterior is >= 1/2) into `buffer`.
#[no_mangle]
pub unsafe extern "C" fn fc_posterior_labels(
    posterior: *const FcPosterior,
    buffer: *mut u8,
    capacity: usize,
) -> FcStatus {
    guarded(|| {
        let Some(p) = posterior.as_ref() else {
            return fail_null("posterior");
        };
        if buffer.is_null() {
            return fail_null("buffer");
        }
        let hard = p.0.harden();
        if capacity < hard.len() {
            set_last_error(&format!(
                "buffer holds {capacity} elements but there are {} tasks",
                hard.len()
            ));
            return FcStatus::LengthMismatch;
        }
        for (i, label) in hard.into_iter().enumerate() {
            *buffer.add(i) = u8::from(label);
        }
        FcStatus::Ok
    })
}

/// Releases a posterior table. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fc_posterior_free(posterior: *mut FcPosterior) {
    if !posterior.is_null() {
        drop(Box::from_raw(posterior));
    }
}

/// The standard post-processor configuration at parity budget `epsilon`.
#[no_mangle]
pub extern "C" fn fc_fair_config_default(epsilon: f64) -> FcFairConfig {
    FcFairConfig {
        epsilon,
        softmax_c: 1e-4,
        delta: 1e-5,
        alpha: 0.04,
        beta_bound: 2.0,
        omega_grid: 101,
    }
}

/// Fits the optimal budget-constrained randomized classifier on a posterior
/// table. The returned fit keeps its own preprocessed copy of the
/// posteriors, so the input may be freed afterwards.
#[no_mangle]
pub unsafe extern "C" fn fc_fairify(
    posterior: *const FcPosterior,
    dataset: *const FcDataset,
    config: *const FcFairConfig,
    out: *mut *mut FcFairFit,
) -> FcStatus {
    guarded(|| {
        if out.is_null() {
            return fail_null("out");
        }
        let Some(p) = posterior.as_ref() else {
            return fail_null("posterior");
        };
        let Some(ds) = dataset.as_ref() else {
            return fail_null("dataset");
        };
        let Some(cfg) = config.as_ref() else {
            return fail_null("config");
        };
        match fairify(&p.0, &ds.groups, &FairConfig::from(*cfg)) {
            Ok(fit) => {
                *out = Box::into_raw(Box::new(FcFairFit(fit)));
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Copies the fitted classifier's parameters into `out`.
#[no_mangle]
pub unsafe extern "C" fn fc_fair_fit_params(
    fit: *const FcFairFit,
    out: *mut FcClassifierParams,
) -> FcStatus {
    guarded(|| {
        let Some(fit) = fit.as_ref() else {
            return fail_null("fit");
        };
        if out.is_null() {
            return fail_null("out");
        }
        let rc = &fit.0.classifier;
        *out = FcClassifierParams {
            beta_star: rc.beta_star,
            tau: rc.tau,
            omega: rc.omega,
            delta: rc.delta,
            pi_hat: rc.pi_hat,
            residual: rc.residual,
            at_boundary: u8::from(rc.at_boundary),
        };
        FcStatus::Ok
    })
}

/// Evaluates the fitted classifier on the dataset it was trained against:
/// writes each task's probability of predicting 1 into `q_out` and one
/// sampled hard labeling into `labels_out` (independent per-task draws
/// derived from `seed`). Either output may be NULL to skip it; `capacity`
/// applies to both.
#[no_mangle]
pub unsafe extern "C" fn fc_fair_fit_apply(
    fit: *const FcFairFit,
    dataset: *const FcDataset,
    seed: u64,
    q_out: *mut f64,
    labels_out: *mut u8,
    capacity: usize,
) -> FcStatus {
    guarded(|| {
        let Some(fit) = fit.as_ref() else {
            return fail_null("fit");
        };
        let Some(ds) = dataset.as_ref() else {
            return fail_null("dataset");
        };
        let n = fit.0.posteriors.n_tasks();
        if (!q_out.is_null() || !labels_out.is_null()) && capacity < n {
            set_last_error(&format!("buffers hold {capacity} elements but there are {n} tasks"));
            return FcStatus::LengthMismatch;
        }
        match apply(&fit.0.classifier, &fit.0.posteriors, &ds.groups, seed) {
            Ok((q, labels)) => {
                if !q_out.is_null() {
                    std::ptr::copy_nonoverlapping(q.as_ptr(), q_out, n);
                }
                if !labels_out.is_null() {
                    for (i, label) in labels.into_iter().enumerate() {
                        *labels_out.add(i) = u8::from(label);
                    }
                }
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a classifier fit. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn fc_fair_fit_free(fit: *mut FcFairFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Baseline parity repair: hardens the posteriors and flips labels near the
/// group rates until the gap is within `epsilon`. Writes one label per task
/// into `labels_out`.
#[no_mangle]
pub unsafe extern "C" fn fc_post_td(
    posterior: *const FcPosterior,
    dataset: *const FcDataset,
    epsilon: f64,
    seed: u64,
    labels_out: *mut u8,
    capacity: usize,
) -> FcStatus {
    guarded(|| {
        let Some(p) = posterior.as_ref() else {
            return fail_null("posterior");
        };
        let Some(ds) = dataset.as_ref() else {
            return fail_null("dataset");
        };
        if labels_out.is_null() {
            return fail_null("labels_out");
        }
        let n = p.0.n_tasks();
        if capacity < n {
            set_last_error(&format!("buffer holds {capacity} elements but there are {n} tasks"));
            return FcStatus::LengthMismatch;
        }
        match post_td(&p.0.harden(), &ds.groups, epsilon, seed) {
            Ok(labels) => {
                for (i, label) in labels.into_iter().enumerate() {
                    *labels_out.add(i) = u8::from(label);
                }
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Demographic-parity gap |rate_1 - rate_0| of per-task positive
/// probabilities (hard labels are the 0/1 special case). `len` must equal
/// the dataset's task count.
#[no_mangle]
pub unsafe extern "C" fn fc_dp_gap(
    q: *const f64,
    len: usize,
    dataset: *const FcDataset,
    gap_out: *mut f64,
) -> FcStatus {
    guarded(|| {
        if q.is_null() {
            return fail_null("q");
        }
        let Some(ds) = dataset.as_ref() else {
            return fail_null("dataset");
        };
        if gap_out.is_null() {
            return fail_null("gap_out");
        }
        let pred = std::slice::from_raw_parts(q, len);
        match dp_gap(pred, &ds.groups) {
            Ok(report) => {
                *gap_out = report.dp_gap;
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Binary F1 (positive class 1) and accuracy of hard labels against the
/// dataset's ground truth.
#[no_mangle]
pub unsafe extern "C" fn fc_f1_accuracy(
    labels: *const u8,
    len: usize,
    dataset: *const FcDataset,
    f1_out: *mut f64,
    accuracy_out: *mut f64,
) -> FcStatus {
    guarded(|| {
        if labels.is_null() {
            return fail_null("labels");
        }
        let Some(ds) = dataset.as_ref() else {
            return fail_null("dataset");
        };
        if f1_out.is_null() || accuracy_out.is_null() {
            return fail_null("f1_out/accuracy_out");
        }
        let truth = match ds.groups.require_truth("scoring needs ground-truth labels") {
            Ok(truth) => truth,
            Err(e) => return fail(&e),
        };
        let pred: Vec<bool> =
            std::slice::from_raw_parts(labels, len).iter().map(|&b| b != 0).collect();
        match f1_accuracy(&pred, truth) {
            Ok((f1, accuracy)) => {
                *f1_out = f1;
                *accuracy_out = accuracy;
                FcStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
