//! File formats: profile CSV with a TOML sidecar, spectral/phase/prediction/
//! kink tables, field snapshots. Floats are written in shortest round-trip
//! form so identical inputs give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{AsymptoticPrediction, KinkSide};
use crate::error::{Error, Result};
use crate::pde::FieldSnapshot;
use crate::phase::PhaseValues;
use crate::scattering::{BackgroundParams, InitialProfile};

/// Sidecar describing a sampled profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSidecar {
    pub a: f64,
    pub r: f64,
    pub x_min: f64,
    pub x_max: f64,
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn parse(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse {what} from '{s}'")))
}

pub fn read_sidecar(path: &Path) -> Result<ProfileSidecar> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Reads rows `x,re,im` (header required) on a uniform grid spanning
/// [x_min, x_max] of the sidecar.
pub fn read_profile(csv_path: &Path, sidecar: &ProfileSidecar) -> Result<InitialProfile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(csv_path)?;
    let mut xs = Vec::new();
    let mut qs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Config(format!("profile rows need 3 columns, found {}", rec.len())));
        }
        xs.push(parse(&rec[0], "x")?);
        qs.push(Complex64::new(parse(&rec[1], "re q")?, parse(&rec[2], "im q")?));
    }
    if xs.len() < 4 {
        return Err(Error::Config("profile needs at least 4 samples".into()));
    }
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        if (x - (xs[0] + i as f64 * dx)).abs() > 1e-6 * dx {
            return Err(Error::Config(format!("profile grid is not uniform at row {}", i + 1)));
        }
    }
    for (name, want, got) in [("x_min", sidecar.x_min, xs[0]), ("x_max", sidecar.x_max, xs[xs.len() - 1])] {
        if (want - got).abs() > 1e-6 * dx {
            return Err(Error::Config(format!("sidecar {name} = {want} but the grid ends at {got}")));
        }
    }
    let bg = BackgroundParams::new(sidecar.a, sidecar.r)?;
    InitialProfile::from_samples(xs[0], dx, qs, bg)
}

pub fn write_profile(path: &Path, profile: &InitialProfile) -> Result<()> {
    let mut w = writer(fs::File::create(path)?);
    w.write_record(["x", "re", "im"])?;
    for (i, q) in profile.samples.iter().enumerate() {
        let x = profile.x_min + i as f64 * profile.dx;
        w.write_record([f(x), f(q.re), f(q.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the spectral table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRow {
    pub k: f64,
    pub a1: Complex64,
    pub a2: Complex64,
    pub b: Complex64,
    pub r1: Complex64,
    pub r2: Complex64,
    /// |a1 a2 - b(k) conj(b(-k)) - 1|.
    pub identity_residual: f64,
}

pub fn write_spectral<W: Write>(out: W, rows: &[SpectralRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record([
        "k", "a1_re", "a1_im", "a2_re", "a2_im", "b_re", "b_im", "r1_re", "r1_im", "r2_re", "r2_im",
        "identity_residual",
    ])?;
    for r in rows {
        let mut rec = vec![f(r.k)];
        for z in [r.a1, r.a2, r.b, r.r1, r.r2] {
            rec.push(f(z.re));
            rec.push(f(z.im));
        }
        rec.push(f(r.identity_residual));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_phase_table<W: Write>(out: W, rows: &[PhaseValues]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["xi", "nu_re", "nu_im", "m", "chi_re", "chi_im", "delta0_re", "delta0_im"])?;
    for p in rows {
        w.write_record([
            f(p.xi),
            f(p.nu.re),
            f(p.nu.im),
            p.m.to_string(),
            f(p.chi_at_minus_xi.re),
            f(p.chi_at_minus_xi.im),
            f(p.delta0.re),
            f(p.delta0.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const TERM_SLOTS: usize = 2;

pub fn write_predictions<W: Write>(out: W, rows: &[AsymptoticPrediction]) -> Result<()> {
    let mut w = writer(out);
    let mut header: Vec<String> = ["xi", "t", "family", "m", "branch", "nu_re", "nu_im", "leading_re", "leading_im"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for s in 1..=TERM_SLOTS {
        for col in ["alpha", "amp_re", "amp_im", "t_power", "phase_coeff", "logt_coeff"] {
            header.push(format!("term{s}_{col}"));
        }
    }
    header.extend(["remainder", "remainder_exponent", "remainder_log", "value_re", "value_im"].map(String::from));
    w.write_record(&header)?;
    for p in rows {
        let v = p.value();
        let mut rec = vec![
            f(p.xi),
            f(p.t),
            p.sector.family.name().to_string(),
            p.sector.m.to_string(),
            p.branch.map(|b| format!("{b:?}")).unwrap_or_default(),
            f(p.nu.re),
            f(p.nu.im),
            f(p.leading.re),
            f(p.leading.im),
        ];
        for s in 0..TERM_SLOTS {
            match p.oscillatory.get(s) {
                Some(o) => rec.extend([
                    o.index.to_string(),
                    f(o.amplitude.re),
                    f(o.amplitude.im),
                    f(o.t_power),
                    f(o.phase_coeff),
                    f(o.logt_coeff),
                ]),
                None => rec.extend(std::iter::repeat_n(String::new(), 6)),
            }
        }
        rec.extend([
            format!("{:?}", p.remainder.kind),
            f(p.remainder.exponent),
            p.remainder.log.to_string(),
            f(v.re),
            f(v.im),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One kink sample; `q` is None at a singular point of the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkRow {
    pub m: usize,
    pub side: KinkSide,
    pub x0: f64,
    pub t: f64,
    pub x: f64,
    pub q: Option<Complex64>,
}

pub fn write_kink<W: Write>(out: W, rows: &[KinkRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["m", "side", "x0", "t", "x", "q_re", "q_im", "status"])?;
    for r in rows {
        let side = match r.side {
            KinkSide::XPositive => "xPositive",
            KinkSide::XNegative => "xNegative",
        };
        let (re, im, status) = match r.q {
            Some(q) => (f(q.re), f(q.im), "ok"),
            None => (String::new(), String::new(), "singular"),
        };
        w.write_record([r.m.to_string(), side.to_string(), f(r.x0), f(r.t), f(r.x), re, im, status.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A header record `t,L,dx` with its values, then `x,re,im` rows.
pub fn write_snapshot<W: Write>(out: W, s: &FieldSnapshot) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).has_headers(false).from_writer(out);
    w.write_record(["t", "L", "dx", "trusted"])?;
    w.write_record([f(s.t), f(s.l), f(s.dx), f(s.trusted)])?;
    w.write_record(["x", "re", "im"])?;
    for (j, q) in s.q.iter().enumerate() {
        w.write_record([f(s.x(j)), f(q.re), f(q.im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<FieldSnapshot> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path)?;
    let recs: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if recs.len() < 3 || &recs[0][0] != "t" || &recs[2][0] != "x" {
        return Err(Error::Config(format!("{} is not a snapshot file", path.display())));
    }
    let h = &recs[1];
    let q = recs[3..]
        .iter()
        .map(|r| Ok(Complex64::new(parse(&r[1], "re q")?, parse(&r[2], "im q")?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSnapshot {
        t: parse(&h[0], "t")?,
        l: parse(&h[1], "L")?,
        dx: parse(&h[2], "dx")?,
        trusted: parse(&h[3], "trusted")?,
        q,
    })
}
