use growclusters::io::{ResultArchive, RunConfig};
use serde::Serialize;

/// What `report` and the fitting commands print.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub n: usize,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_local: Option<usize>,
    pub seed: u64,
}

impl Summary {
    pub fn of(archive: &ResultArchive) -> Self {
        let labels = archive.labels();
        let k = archive.k();
        let mut sizes = vec![0; k];
        for &l in labels {
            sizes[l] += 1;
        }
        let report = archive.selection_report.as_ref();
        match (&archive.config, &archive.partition, &archive.hier_partition) {
            (RunConfig::Hier(c), _, Some(h)) => Self {
                kind: "hier",
                n: labels.len(),
                k,
                sizes,
                objective: h.objective,
                iterations: h.iterations,
                converged: h.converged,
                lambda: None,
                chosen_lambda: None,
                method: None,
                n_local: Some(h.n_local()),
                seed: c.seed,
            },
            (RunConfig::Dp(c), Some(p), _) => Self {
                kind: "dp",
                n: labels.len(),
                k,
                sizes,
                objective: p.objective,
                iterations: p.iterations,
                converged: p.converged,
                lambda: Some(c.lambda),
                chosen_lambda: report.map(|r| r.chosen_lambda),
                method: report.map(|r| r.method.to_string()),
                n_local: None,
                seed: c.seed,
            },
            _ => unreachable!("archives are validated on load"),
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "kind: {}\nn: {}\nK: {}\nsizes: {:?}\nobjective: {}\niterations: {} (converged: {})\nseed: {}\n",
            self.kind, self.n, self.k, self.sizes, self.objective, self.iterations, self.converged, self.seed
        );
        if let Some(l) = self.lambda {
            out += &format!("lambda: {l}\n");
        }
        if let (Some(m), Some(l)) = (&self.method, self.chosen_lambda) {
            out += &format!("selection: {m}, chosen lambda {l}\n");
        }
        if let Some(n) = self.n_local {
            out += &format!("local clusters: {n}\n");
        }
        out
    }

    /// Header and one data row.
    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let sizes: Vec<String> = self.sizes.iter().map(usize::to_string).collect();
        format!(
            "kind,n,k,sizes,objective,iterations,converged,lambda,chosen_lambda,method,n_local,seed\n\
             {},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.kind,
            self.n,
            self.k,
            sizes.join(";"),
            self.objective,
            self.iterations,
            self.converged,
            opt(self.lambda),
            opt(self.chosen_lambda),
            self.method.clone().unwrap_or_default(),
            self.n_local.map(|n| n.to_string()).unwrap_or_default(),
            self.seed
        )
    }
}
