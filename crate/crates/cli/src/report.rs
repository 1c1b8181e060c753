use std::collections::BTreeMap;

use perifix_core::certify::{CheckResult, ConvergenceCertificate};
use perifix_core::integrate::IntegratorSettings;
use serde::Serialize;

use crate::config::ModelConfig;

/// Everything needed to rerun a command and compare its verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub argv: Vec<String>,
    pub model_digest: String,
    pub model: ModelConfig,
    pub settings: IntegratorSettings,
    pub seed: Option<u64>,
    pub checks: Vec<CheckResult>,
    pub certificate: Option<ConvergenceCertificate>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
            && self.certificate.as_ref().is_none_or(|c| c.converged())
    }

    /// Names of the failed checks and, if it did not converge, the certificate status.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| {
                format!(
                    "{} ({:?}, worst margin {:e})",
                    c.name, c.verdict, c.worst_margin
                )
            })
            .collect();
        if let Some(c) = self.certificate.as_ref().filter(|c| !c.converged()) {
            out.push(format!(
                "bracket_converge ({:?}, gap {:e})",
                c.status, c.gap
            ));
        }
        out
    }
}
