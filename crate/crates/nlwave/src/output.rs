//! Text outputs: diagnostics CSV, certificate and manifest.

use std::fmt::Write as _;
use std::io::{self, Write};

use nlwave_core::diagnostics::{BlowupSample, Certification, EnergyReport};

pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "L2_u",
    "L2_ut",
    "Hs_u",
    "fracA_alpha_u",
    "kinetic",
    "elastic",
    "fU_u",
    "twoF",
    "E_paper",
    "E_conserved",
    "H",
    "Hp",
    "Hpp",
];

/// One diagnostics row. The blow-up columns are empty without a monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub l2_u: f64,
    pub l2_ut: f64,
    pub hs_u: f64,
    pub frac_a_u: f64,
    pub energy: EnergyReport,
    pub blowup: Option<BlowupSample>,
}

/// Shortest round-trip representation, so equal runs give equal bytes.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, r: &DiagnosticsRow) -> io::Result<()> {
        let e = &r.energy;
        let mut cells = vec![
            num(r.t),
            num(r.l2_u),
            num(r.l2_ut),
            num(r.hs_u),
            num(r.frac_a_u),
            num(e.kinetic),
            num(e.elastic),
            num(e.interaction_paper),
            num(e.interaction_potential),
            num(e.e_paper),
            num(e.e_conserved),
        ];
        match r.blowup {
            Some(b) => cells.extend([num(b.h), num(b.dh), num(b.d2h)]),
            None => cells.extend([String::new(), String::new(), String::new()]),
        }
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Outcome of the certifier, including the too-short-trace case.
#[derive(Debug, Clone, PartialEq)]
pub enum CertificateOutcome {
    Decided(Certification),
    InsufficientTrace { samples: usize },
}

/// Flat `key=value` block, one entry per line.
pub fn certificate_text(outcome: &CertificateOutcome) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    match outcome {
        CertificateOutcome::InsufficientTrace { samples } => {
            kv("status", "insufficient_trace".into());
            kv("samples", samples.to_string());
        }
        CertificateOutcome::Decided(Certification::Refuted(r)) => {
            kv("status", "refuted".into());
            kv("reason", r.reason.into());
            kv("worst_margin", num(r.worst_margin));
        }
        CertificateOutcome::Decided(Certification::Certified(c)) => {
            kv("status", "certified".into());
            kv("nu", num(c.nu));
            kv("window_start", num(c.window.0));
            kv("window_end", num(c.window.1));
            kv("start_index", c.start_index.to_string());
            kv("t1_bound", num(c.t1_bound));
            kv("min_margin", num(c.min_margin));
            kv("b", num(c.b));
            kv("t0", num(c.t0));
            kv("e0", num(c.e0));
            match &c.side_conditions {
                None => kv("side_conditions", "unavailable".into()),
                Some(sc) => {
                    kv(
                        "side_conditions",
                        if sc.all_hold { "hold" } else { "violated" }.into(),
                    );
                    kv("energy_slack", num(sc.energy_slack));
                    kv("min_growth_slack", num(sc.min_growth_slack));
                    kv("min_cross_slack", num(sc.min_cross_slack));
                    kv("side_samples", sc.samples.len().to_string());
                    for (i, p) in sc.samples.iter().enumerate() {
                        kv(&format!("side.{i}.t"), num(p.t));
                        kv(&format!("side.{i}.growth_slack"), num(p.growth_slack));
                        kv(&format!("side.{i}.cross_slack"), num(p.cross_slack));
                    }
                }
            }
        }
    }
    s
}

/// Parses a `key=value` block back into ordered pairs.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
