//! Pass/fail records produced by the certification routines.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    StarShaped,
    GradientBound,
    Comparison,
    WaitingTime,
}

impl CertificateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::StarShaped => "star_shaped",
            Self::GradientBound => "gradient_bound",
            Self::Comparison => "comparison",
            Self::WaitingTime => "waiting_time",
        }
    }
}

/// Why a certificate holds or fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Passed,
    Failed,
    /// A point sits at or inside the inner radius; the bound is vacuous.
    PreconditionViolated,
    /// The comparison hypothesis is false; no conclusion is drawn.
    HypothesisNotMet,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Passed => "passed",
            Self::Failed => "failed",
            Self::PreconditionViolated => "precondition_violated",
            Self::HypothesisNotMet => "hypothesis_not_met",
        }
    }
}

/// Location of the worst sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    Node(usize),
    Pair(usize, usize),
}

/// `margin ≥ 0` exactly when the verdict is [`Verdict::Passed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub verdict: Verdict,
    pub margin: f64,
    pub witness: Option<Witness>,
    /// Number of samples (nodes or pairs) examined.
    pub samples: usize,
    /// Extra `key: value` lines, e.g. tolerances or sampling density.
    pub notes: Vec<(String, String)>,
}

impl Certificate {
    pub fn new(kind: CertificateKind, margin: f64, witness: Option<Witness>, samples: usize) -> Self {
        let verdict = if margin >= 0.0 {
            Verdict::Passed
        } else {
            Verdict::Failed
        };
        Self {
            kind,
            verdict,
            margin,
            witness,
            samples,
            notes: Vec::new(),
        }
    }

    /// A certificate with no verdict on the conclusion.
    pub fn inconclusive(kind: CertificateKind, verdict: Verdict, witness: Option<Witness>) -> Self {
        debug_assert!(!matches!(verdict, Verdict::Passed | Verdict::Failed));
        Self {
            kind,
            verdict,
            margin: f64::NEG_INFINITY,
            witness,
            samples: 0,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Passed
    }

    pub fn with_note(mut self, key: &str, value: impl ToString) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind: {}", self.kind.as_str())?;
        writeln!(f, "passed: {}", self.passed())?;
        writeln!(f, "verdict: {}", self.verdict.as_str())?;
        writeln!(f, "margin: {:e}", self.margin)?;
        match self.witness {
            Some(Witness::Node(i)) => writeln!(f, "worst_node: {i}")?,
            Some(Witness::Pair(i, j)) => writeln!(f, "worst_pair: {i},{j}")?,
            None => writeln!(f, "worst: none")?,
        }
        writeln!(f, "samples: {}", self.samples)?;
        for (k, v) in &self.notes {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}
