//! Report bodies and their JSON / CSV encodings.

use crate::config::{Format, HeckeSpec, RunConfig};
use anyhow::Result;
use rtf_local::{Complex64, FLReport, MatchingReport};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub pass: bool,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlPointRow {
    pub val: i32,
    pub unit: i64,
    pub near_minus_one: bool,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub error: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlResult {
    pub hecke: HeckeSpec,
    pub constant: Complex64,
    pub max_error: f64,
    pub literal_error: f64,
    pub pass: bool,
    pub points: Vec<FlPointRow>,
}

impl FlResult {
    pub fn new(hecke: &HeckeSpec, r: &FLReport) -> Self {
        FlResult {
            hecke: hecke.clone(),
            constant: r.constant,
            max_error: r.max_error,
            literal_error: r.literal_error,
            pass: r.pass,
            points: r
                .points
                .iter()
                .map(|q| FlPointRow { val: q.val, unit: q.unit, near_minus_one: q.near_minus_one, lhs: q.lhs, rhs: q.rhs, error: q.error })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct FlBody {
    pub results: Vec<FlResult>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KuzRow {
    pub m: u32,
    pub val: i32,
    pub closed: Complex64,
    pub direct: Complex64,
    pub delta: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BasicRow {
    pub s: f64,
    pub val: i32,
    pub closed: Complex64,
    pub series: Complex64,
    pub delta: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TablesBody {
    pub vol_x: f64,
    pub kuznetsov: Vec<KuzRow>,
    pub basic: Vec<BasicRow>,
}

#[derive(Serialize)]
pub struct MatchingBody {
    pub report: MatchingReport,
}

fn json<T: Serialize>(e: &Envelope<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(e)? + "\n")
}

fn csv_text<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
struct FlCsv {
    hecke: String,
    val: i32,
    unit: i64,
    near_minus_one: bool,
    lhs_re: f64,
    lhs_im: f64,
    rhs_re: f64,
    rhs_im: f64,
    error: f64,
}

#[derive(Serialize)]
struct TableCsv {
    table: &'static str,
    m: Option<u32>,
    s: Option<f64>,
    val: i32,
    closed_re: f64,
    closed_im: f64,
    other_re: f64,
    other_im: f64,
    delta: f64,
}

#[derive(Serialize)]
struct MatchingCsv {
    index: usize,
    germ_residual: f64,
    tail_residual: f64,
    ip_torus_re: f64,
    ip_torus_im: f64,
    ip_kuz_re: f64,
    ip_kuz_im: f64,
    ip_error: f64,
}

pub fn hecke_label(h: &HeckeSpec) -> String {
    h.iter().map(|(n, c)| format!("{}:{}", n, c)).collect::<Vec<_>>().join(",")
}

pub fn render_fl(e: &Envelope<FlBody>, format: Format) -> Result<String> {
    match format {
        Format::Json => json(e),
        Format::Csv => csv_text(e.body.results.iter().flat_map(|r| {
            let label = hecke_label(&r.hecke);
            r.points.iter().map(move |q| FlCsv {
                hecke: label.clone(),
                val: q.val,
                unit: q.unit,
                near_minus_one: q.near_minus_one,
                lhs_re: q.lhs.re,
                lhs_im: q.lhs.im,
                rhs_re: q.rhs.re,
                rhs_im: q.rhs.im,
                error: q.error,
            })
        })),
    }
}

pub fn render_tables(e: &Envelope<TablesBody>, format: Format) -> Result<String> {
    match format {
        Format::Json => json(e),
        Format::Csv => {
            let k = e.body.kuznetsov.iter().map(|r| TableCsv {
                table: "kuznetsov",
                m: Some(r.m),
                s: None,
                val: r.val,
                closed_re: r.closed.re,
                closed_im: r.closed.im,
                other_re: r.direct.re,
                other_im: r.direct.im,
                delta: r.delta,
            });
            let b = e.body.basic.iter().map(|r| TableCsv {
                table: "basic",
                m: None,
                s: Some(r.s),
                val: r.val,
                closed_re: r.closed.re,
                closed_im: r.closed.im,
                other_re: r.series.re,
                other_im: r.series.im,
                delta: r.delta,
            });
            csv_text(k.chain(b))
        }
    }
}

pub fn render_matching(e: &Envelope<MatchingBody>, format: Format) -> Result<String> {
    match format {
        Format::Json => json(e),
        Format::Csv => csv_text(e.body.report.samples.iter().map(|s| MatchingCsv {
            index: s.index,
            germ_residual: s.germ_residual,
            tail_residual: s.tail_residual,
            ip_torus_re: s.ip_torus.re,
            ip_torus_im: s.ip_torus.im,
            ip_kuz_re: s.ip_kuz.re,
            ip_kuz_im: s.ip_kuz.im,
            ip_error: s.ip_error,
        })),
    }
}
