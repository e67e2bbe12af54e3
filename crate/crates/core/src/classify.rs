//! Monte Carlo classification of random GHZ-diagonal states.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{self, CriterionVerdict};
use crate::linalg::{min_eigenvalue_after_pt, Party, PSD_TOL};
use crate::separability::{
    self, abs_sum_certificate, build_separable_witness_state, mu_certificate, two_term_certificate, NoCertificate,
    SeparabilityCertificate, TwoTermSearch,
};
use crate::states::{GhzDiagonalState, SimplexSampler};

/// Samples per deterministic chunk; chunk `c` draws from stream `c`.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Npt,
    PptViolating,
    SepAbsSum,
    SepMu,
    SepTwoTerm,
    SepPptSufficient,
    Undecided,
}

impl Verdict {
    pub const ALL: [Verdict; 7] = [
        Verdict::Npt,
        Verdict::PptViolating,
        Verdict::SepAbsSum,
        Verdict::SepMu,
        Verdict::SepTwoTerm,
        Verdict::SepPptSufficient,
        Verdict::Undecided,
    ];

    pub fn is_entangled(self) -> bool {
        matches!(self, Verdict::Npt | Verdict::PptViolating)
    }

    pub fn is_separable(self) -> bool {
        matches!(self, Verdict::SepAbsSum | Verdict::SepMu | Verdict::SepTwoTerm | Verdict::SepPptSufficient)
    }

    fn index(self) -> usize {
        Verdict::ALL.iter().position(|v| *v == self).expect("listed")
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Npt => "NPT",
            Verdict::PptViolating => "PPT_VIOLATING",
            Verdict::SepAbsSum => "SEP_ABS_SUM",
            Verdict::SepMu => "SEP_MU",
            Verdict::SepTwoTerm => "SEP_TWO_TERM",
            Verdict::SepPptSufficient => "SEP_PPT_SUFFICIENT",
            Verdict::Undecided => "UNDECIDED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationRecord {
    pub probs: [f64; 8],
    pub verdict: Verdict,
    /// Smallest eigenvalue of the partial transpose for `A|BC`, `B|AC`,
    /// `C|AB`.
    pub ppt_min_eigenvalues: [f64; 3],
    pub criterion: CriterionVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<SeparabilityCertificate>,
    /// A certificate candidate failed reconstruction.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub rejected_certificate: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub psd_tol: f64,
    pub search: TwoTermSearch,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { psd_tol: PSD_TOL, search: TwoTermSearch::default() }
    }
}

/// Whether the coherence weights have an odd number of negative entries,
/// the case where the partial transpose test is already decisive.
pub fn odd_sign_pattern(s: &GhzDiagonalState) -> bool {
    s.coherence_weights().iter().product::<f64>() < 0.0
}

/// Classifies one state: partial transposes, then the anti-diagonal
/// criterion, then certificates from cheapest to most expensive.
pub fn classify_state(s: &GhzDiagonalState, opts: &ClassifyOptions) -> ClassificationRecord {
    let start = Instant::now();
    let rho = s.density_matrix();
    let ppt = Party::ALL.map(|p| min_eigenvalue_after_pt(&rho, p));
    let (_, criterion) = criterion::optimize_x(&rho);

    let mut record = ClassificationRecord {
        probs: s.probs,
        verdict: Verdict::Undecided,
        ppt_min_eigenvalues: ppt,
        criterion,
        certificate: None,
        rejected_certificate: false,
        elapsed: Duration::ZERO,
    };

    if ppt.iter().any(|m| *m < -opts.psd_tol) {
        record.verdict = Verdict::Npt;
    } else if record.criterion.violated {
        record.verdict = Verdict::PptViolating;
    } else {
        let (verdict, cert, rejected) = certify(s, opts);
        record.verdict = verdict;
        record.certificate = cert;
        record.rejected_certificate = rejected;
    }
    record.elapsed = start.elapsed();
    record
}

fn certify(s: &GhzDiagonalState, opts: &ClassifyOptions) -> (Verdict, Option<SeparabilityCertificate>, bool) {
    let mut rejected = false;
    let mut note = |r: &NoCertificate| {
        if matches!(r, NoCertificate::Rejected(_)) {
            rejected = true;
        }
    };
    match abs_sum_certificate(s) {
        Ok(c) => return (Verdict::SepAbsSum, Some(c), false),
        Err(e) => note(&e),
    }
    if odd_sign_pattern(s) {
        return (Verdict::SepPptSufficient, None, rejected);
    }
    match mu_certificate(s) {
        Ok(c) => return (Verdict::SepMu, Some(c), rejected),
        Err(e) => note(&e),
    }
    let [l2, l3, l4] = s.diagonal_weights();
    let target = 1.0 - separability::lambda_minus(l2, l3, l4).abs();
    match two_term_certificate(s, target, &opts.search) {
        Ok(c) => (Verdict::SepTwoTerm, Some(c), rejected),
        Err(e) => {
            note(&e);
            (Verdict::Undecided, None, rejected)
        }
    }
}

/// Count with its share of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub count: u64,
    pub percent: f64,
    /// Binomial standard error of `percent`.
    pub std_error: f64,
}

impl Fraction {
    fn new(count: u64, n: u64) -> Self {
        let p = count as f64 / n as f64;
        Self { count, percent: 100.0 * p, std_error: 100.0 * (p * (1.0 - p) / n as f64).sqrt() }
    }
}

/// Consistency checks accumulated over an ensemble. All should be zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    /// NPT states the criterion misses.
    pub dominance_violations: u64,
    /// Criterion-violating states that nevertheless received a certificate.
    pub certificate_conflicts: u64,
    /// Issued certificates that fail a second reconstruction.
    pub revalidation_failures: u64,
    /// Candidates rejected during reconstruction.
    pub rejected_candidates: u64,
    /// PPT states with an odd sign pattern flagged by the criterion.
    pub ppt_sufficiency_conflicts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFraction {
    pub verdict: Verdict,
    #[serde(flatten)]
    pub fraction: Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub n: u64,
    pub seed: u64,
    pub verdicts: Vec<VerdictFraction>,
    pub entangled: Fraction,
    pub npt: Fraction,
    /// PPT for every bipartition yet entangled.
    pub ppt_violating: Fraction,
    pub separable: Fraction,
    /// Certified by `abs_sum`, `mu_cubed` or the PPT test.
    pub separable_direct: Fraction,
    /// Certified only by the two-term search.
    pub separable_two_term: Fraction,
    pub undecided: Fraction,
    pub audit: Audit,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    counts: [u64; 7],
    audit: Audit,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        let (a, b) = (&mut self.audit, other.audit);
        a.dominance_violations += b.dominance_violations;
        a.certificate_conflicts += b.certificate_conflicts;
        a.revalidation_failures += b.revalidation_failures;
        a.rejected_candidates += b.rejected_candidates;
        a.ppt_sufficiency_conflicts += b.ppt_sufficiency_conflicts;
        self
    }
}

fn audit_record(s: &GhzDiagonalState, r: &ClassificationRecord, opts: &ClassifyOptions, audit: &mut Audit) {
    if r.verdict == Verdict::Npt && !r.criterion.violated {
        audit.dominance_violations += 1;
    }
    if r.rejected_certificate {
        audit.rejected_candidates += 1;
    }
    if let Some(cert) = &r.certificate {
        if build_separable_witness_state(cert, s).is_err() {
            audit.revalidation_failures += 1;
        }
    }
    if r.criterion.violated {
        let certified = abs_sum_certificate(s).is_ok()
            || mu_certificate(s).is_ok()
            || (r.verdict == Verdict::PptViolating && {
                let [l2, l3, l4] = s.diagonal_weights();
                let target = 1.0 - separability::lambda_minus(l2, l3, l4).abs();
                two_term_certificate(s, target, &opts.search).is_ok()
            });
        if certified {
            audit.certificate_conflicts += 1;
        }
    }
    if r.verdict == Verdict::PptViolating && odd_sign_pattern(s) {
        audit.ppt_sufficiency_conflicts += 1;
    }
}

fn search_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Classifies `n` uniformly random GHZ-diagonal states. The result depends
/// only on `(n, seed)`, not on the number of worker threads.
pub fn run_ensemble(n: u64, seed: u64) -> EnsembleReport {
    run_ensemble_with(n, seed, &ClassifyOptions::default())
}

pub fn run_ensemble_with(n: u64, seed: u64, opts: &ClassifyOptions) -> EnsembleReport {
    let chunks = n.div_ceil(CHUNK as u64);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sampler = SimplexSampler::with_stream(seed, c);
            let len = (n - c * CHUNK as u64).min(CHUNK as u64);
            let mut t = Tally::default();
            for i in 0..len {
                let index = c * CHUNK as u64 + i;
                let s = GhzDiagonalState::from_probs(sampler.sample()).expect("sampler stays on the simplex");
                let local = ClassifyOptions { search: TwoTermSearch { seed: search_seed(seed, index), ..opts.search }, ..*opts };
                let r = classify_state(&s, &local);
                t.counts[r.verdict.index()] += 1;
                audit_record(&s, &r, &local, &mut t.audit);
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    report_from(n, seed, &tally)
}

fn report_from(n: u64, seed: u64, t: &Tally) -> EnsembleReport {
    let count = |v: Verdict| t.counts[v.index()];
    let sum = |vs: &[Verdict]| vs.iter().map(|v| count(*v)).sum::<u64>();
    let frac = |c: u64| Fraction::new(c, n);
    EnsembleReport {
        n,
        seed,
        verdicts: Verdict::ALL.iter().map(|v| VerdictFraction { verdict: *v, fraction: frac(count(*v)) }).collect(),
        entangled: frac(sum(&[Verdict::Npt, Verdict::PptViolating])),
        npt: frac(count(Verdict::Npt)),
        ppt_violating: frac(count(Verdict::PptViolating)),
        separable: frac(sum(&[Verdict::SepAbsSum, Verdict::SepMu, Verdict::SepTwoTerm, Verdict::SepPptSufficient])),
        separable_direct: frac(sum(&[Verdict::SepAbsSum, Verdict::SepMu, Verdict::SepPptSufficient])),
        separable_two_term: frac(count(Verdict::SepTwoTerm)),
        undecided: frac(count(Verdict::Undecided)),
        audit: t.audit,
    }
}

impl EnsembleReport {
    /// Aligned two-column table: criterion and fraction of states.
    pub fn to_table(&self) -> String {
        let rows: [(&str, &Fraction); 7] = [
            ("Entangled (anti-diagonal criterion)", &self.entangled),
            ("  NPT", &self.npt),
            ("  PPT, but violating", &self.ppt_violating),
            ("Separable", &self.separable),
            ("  via diagonal bound or mu^3", &self.separable_direct),
            ("  using in addition two-term search", &self.separable_two_term),
            ("Undecided", &self.undecided),
        ];
        let mut out = format!("{:<40} {:>9}  {:>8}\n", "Criterion", "Fraction", "Std.err");
        for (label, f) in rows {
            out.push_str(&format!("{label:<40} {:>7.2} %  {:>6.2} %\n", f.percent, f.std_error));
        }
        out.push_str(&format!("n = {}, seed = {}\n", self.n, self.seed));
        let a = &self.audit;
        out.push_str(&format!(
            "audit: dominance {} conflicts {} revalidation {} rejected {} ppt-sufficiency {}\n",
            a.dominance_violations,
            a.certificate_conflicts,
            a.revalidation_failures,
            a.rejected_candidates,
            a.ppt_sufficiency_conflicts
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::kay_state;

    fn classify(s: &GhzDiagonalState) -> Verdict {
        classify_state(s, &ClassifyOptions::default()).verdict
    }

    #[test]
    fn reference_states() {
        let kay = GhzDiagonalState::from_density(&kay_state(2.5).unwrap(), 1e-12).unwrap();
        assert_eq!(classify(&kay), Verdict::PptViolating);
        let kay3 = GhzDiagonalState::from_density(&kay_state(3.0).unwrap(), 1e-12).unwrap();
        assert_eq!(classify(&kay3), Verdict::SepMu);
        assert_eq!(classify(&GhzDiagonalState::maximally_mixed()), Verdict::SepAbsSum);
        let ghz = GhzDiagonalState::from_probs([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(classify(&ghz), Verdict::Npt);
    }

    #[test]
    fn record_keeps_timing_out_of_json() {
        let r = classify_state(&GhzDiagonalState::maximally_mixed(), &ClassifyOptions::default());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("elapsed").is_none());
        assert_eq!(json["verdict"], "SEP_ABS_SUM");
    }

    #[test]
    fn small_ensemble_partitions_and_is_deterministic() {
        let a = run_ensemble(300, 11);
        let b = run_ensemble(300, 11);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let total: u64 = a.verdicts.iter().map(|v| v.fraction.count).sum();
        assert_eq!(total, 300);
        assert_eq!(a.entangled.count + a.separable.count + a.undecided.count, 300);
        assert_eq!(a.audit, Audit::default());
    }

    #[test]
    fn fractions_sum_to_one() {
        let r = report_from(10, 0, &Tally { counts: [3, 1, 2, 1, 1, 1, 1], audit: Audit::default() });
        let s: f64 = r.verdicts.iter().map(|v| v.fraction.percent).sum();
        assert!((s - 100.0).abs() < 1e-12);
        assert!(r.to_table().contains("PPT, but violating"));
    }
}
