use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{ExperimentConfig, ProblemKind, SolverOverrides, SolverSpec};
use crate::error::{Error, Result};

pub const DEFAULT_D: usize = 10_000;
pub const DEFAULT_RUNS: usize = 100;

/// One source of experiment settings (a TOML file or the command line).
/// Unset fields fall through to the next layer and finally to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub problem: Option<ProblemKind>,
    pub d: Option<usize>,
    pub p11: Option<f64>,
    pub runs: Option<usize>,
    pub iters: Option<usize>,
    pub solvers: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub certificates: Option<bool>,
    /// Per-solver parameter overrides, keyed by solver name.
    pub params: BTreeMap<String, SolverOverrides>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `over` wins wherever it sets a field.
    pub fn merge(mut self, over: ConfigLayer) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(problem, d, p11, runs, iters, solvers, seed, out, certificates);
        for (name, o) in over.params {
            self.params.insert(name, o);
        }
        self
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        let problem = self.problem.unwrap_or(ProblemKind::Iiduka);
        let names = self.solvers.unwrap_or_else(|| vec!["fm-hsdm".to_string()]);
        let mut params = self.params;
        let mut solvers = Vec::with_capacity(names.len());
        for name in &names {
            let overrides = params.remove(name).unwrap_or_default();
            solvers.push(SolverSpec::parse(name)?.with_overrides(overrides));
        }
        if let Some(name) = params.keys().next() {
            return Err(Error::Config(format!("parameters given for unselected solver `{name}`")));
        }
        let config = ExperimentConfig {
            problem,
            d: self.d.unwrap_or(DEFAULT_D),
            p11: self.p11.unwrap_or(1.0),
            runs: self.runs.unwrap_or(DEFAULT_RUNS),
            iters: self.iters.unwrap_or(problem.default_iters()),
            solvers,
            base_seed: self.seed.unwrap_or(0),
            output_dir: self.out.unwrap_or_else(|| PathBuf::from("bench-out")),
            certificates: self.certificates.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ConfigLayer::from_toml(
            r#"
            problem = "hyperplane"
            d = 50
            runs = 3
            solvers = ["fm-hsdm", "fista"]
            [params.fista]
            fista_step = 0.05
            "#,
        )
        .unwrap();
        let cli = ConfigLayer { d: Some(20), ..Default::default() };
        let cfg = file.merge(cli).resolve().unwrap();
        assert_eq!(cfg.d, 20);
        assert_eq!(cfg.runs, 3);
        assert_eq!(cfg.iters, 5000);
        assert_eq!(cfg.solvers[1].overrides.fista_step, Some(0.05));
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(ConfigLayer::from_toml("dd = 3").is_err());
        let bad = |l: ConfigLayer| matches!(l.resolve(), Err(Error::Config(_)));
        assert!(bad(ConfigLayer { p11: Some(2.0), ..Default::default() }));
        assert!(bad(ConfigLayer { solvers: Some(vec![]), ..Default::default() }));
        assert!(bad(ConfigLayer { solvers: Some(vec!["fista".into()]), ..Default::default() }));
        let mut l = ConfigLayer::default();
        l.params.insert("admm".into(), SolverOverrides::default());
        assert!(bad(l));
    }
}
