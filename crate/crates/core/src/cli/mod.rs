//! Command-line front end. Every command writes one CSV table; analyses
//! that stop partway keep the rows computed so far and end the table with
//! an `#error` line.
//!
//! Exit status: 0 on success, 1 on analysis errors, 2 on usage or netlist
//! errors.

mod report;

pub use crate::circuits::gm_over_id_bias;
pub use report::{Cell, Table};

use crate::cards;
use crate::circuits::{
    design_amplifier, parse_netlist, AmplifierSpec, Circuit, Design, Directive, Feedback, Kind, Topology,
    DEFAULT_GM_OVER_ID,
};
use crate::dcsolve::{bias_match, grid, solve_op, sweep_dc, sweep_with, OperatingPoint, SolveOptions};
use crate::device::DeviceParams;
use crate::distortion::{
    combine, fit_topology, ip3, ip3_enhancement, series_backgate, series_full, series_open_loop, Mode, Output,
    FIT_AMPLITUDE,
};
use crate::error::Error;
use crate::mismatch::{cmrr_monte_carlo_with, MismatchSpec, DEFAULT_A_VT, DEFAULT_SAMPLES};
use crate::smallsig::{
    cm_gain, cmrr_db, cmrr_ratio, device_sets, noise_oracle, small_signal_report, template_noise,
};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bgamp", version, about = "Analysis of inverter-based amplifiers with back-gate feedback")]
pub struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// DC operating point (quantity,value).
    Op(Common),
    /// DC transfer curve (input_v,output_v).
    Sweep(Common),
    /// Differential gain, closed form and oracle, open loop and back gate.
    Gain(Common),
    /// Input-referred noise PSD at bias-matched operating points.
    Noise(Common),
    /// IP3 of complementary stages, closed form and transfer-curve fit.
    Dist(Common),
    /// Nominal CMRR of single and dual CMFB.
    Cmrr(Common),
    /// Monte Carlo CMRR statistics.
    Mc(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// ccs, ccs_ol, scmfb or dcmfb (comma-separated list for mc).
    #[arg(long)]
    template: Option<String>,
    /// Netlist file (op and sweep).
    #[arg(long, conflicts_with = "template")]
    netlist: Option<PathBuf>,
    /// Channel lengths in um: a list `0.15,1` or a range `start:stop:count`.
    #[arg(long = "L", value_name = "LIST")]
    lengths: Option<String>,
    /// g_m/I_D targets in S/A, same syntax as --L.
    #[arg(long)]
    gmid: Option<String>,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    n: usize,
    #[arg(long, env = "BGAMP_SEED", default_value_t = 0)]
    seed: u64,
    /// Noise temperature (K).
    #[arg(long, default_value_t = 300.0)]
    temp: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Back-gate coupling applied to both cards.
    #[arg(long)]
    chi: Option<f64>,
    /// Pelgrom coefficient A_VT (V um).
    #[arg(long, default_value_t = DEFAULT_A_VT)]
    avt: f64,
    /// Sweep points for template sweeps.
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Output node for netlist sweeps.
    #[arg(long, default_value = "out")]
    output: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Op,
    Sweep,
    Gain,
    Noise,
    Dist,
    Cmrr,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// Complementary stage with back-gate feedback.
    Ccs,
    CcsOl,
    Scmfb,
    Dcmfb,
}

impl Template {
    fn parse(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ccs" => Ok(Template::Ccs),
            "ccs_ol" => Ok(Template::CcsOl),
            "scmfb" => Ok(Template::Scmfb),
            "dcmfb" => Ok(Template::Dcmfb),
            other => Err(format!("unknown template '{other}' (expected ccs, ccs_ol, scmfb or dcmfb)")),
        }
    }

    pub fn kind(self) -> Kind {
        match self {
            Template::Ccs => Kind::CcsBg,
            Template::CcsOl => Kind::CcsOl,
            Template::Scmfb => Kind::DiffScmfb,
            Template::Dcmfb => Kind::DiffDcmfb,
        }
    }

    fn feedback(self) -> Feedback {
        if self == Template::CcsOl {
            Feedback::OpenLoop
        } else {
            Feedback::BackGate
        }
    }

    fn label(self) -> &'static str {
        match self {
            Template::Ccs => "ccs",
            Template::CcsOl => "ccs_ol",
            Template::Scmfb => "scmfb",
            Template::Dcmfb => "dcmfb",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Templates(Vec<Template>),
    Netlist(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Input,
    pub lengths: Vec<f64>,
    pub gm_over_id: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub temperature: f64,
    pub out: Option<PathBuf>,
    pub chi: Option<f64>,
    pub a_vt: f64,
    pub points: usize,
    pub output_node: String,
}

/// Parses `a,b,c` or `start:stop:count` (count points, both ends included).
pub fn parse_axis(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        crate::circuits::parse_number(s.trim())
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("invalid number '{}'", s.trim()))
    };
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("range '{text}' must be start:stop:count"));
        };
        let (a, b) = (num(a)?, num(b)?);
        let n: usize = n.trim().parse().map_err(|_| format!("invalid count '{}'", n.trim()))?;
        match n {
            0 => return Err("range count must be positive".into()),
            1 => vec![a],
            _ => grid(a, b, n).map_err(|e| e.to_string())?,
        }
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.iter().any(|v| *v <= 0.0) {
        return Err(format!("values in '{text}' must be positive"));
    }
    Ok(values)
}

impl RunConfig {
    fn from_args(command: Command, a: Common) -> Result<Self, String> {
        let input = match (a.template, a.netlist) {
            (_, Some(p)) => Input::Netlist(p),
            (Some(t), None) => Input::Templates(t.split(',').map(Template::parse).collect::<Result<_, _>>()?),
            (None, None) => Input::Templates(match command {
                Command::Cmrr | Command::Mc => vec![Template::Scmfb, Template::Dcmfb],
                _ => vec![Template::Ccs],
            }),
        };
        let lengths = match a.lengths {
            Some(s) => parse_axis(&s)?,
            None => vec![0.15, 1.0],
        };
        let gm_over_id = match a.gmid {
            Some(s) => parse_axis(&s)?,
            None => vec![DEFAULT_GM_OVER_ID],
        };
        if !(a.temp > 0.0 && a.temp.is_finite()) {
            return Err("--temp must be positive".into());
        }
        if a.points < 2 {
            return Err("--points must be at least 2".into());
        }
        Ok(Self {
            command,
            input,
            lengths,
            gm_over_id,
            samples: a.n,
            seed: a.seed,
            temperature: a.temp,
            out: a.out,
            chi: a.chi,
            a_vt: a.avt,
            points: a.points,
            output_node: a.output,
        })
    }

    /// Builds a configuration from command-line arguments (program name first).
    pub fn parse_from<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        let (command, common) = match cli.command {
            CommandArgs::Op(c) => (Command::Op, c),
            CommandArgs::Sweep(c) => (Command::Sweep, c),
            CommandArgs::Gain(c) => (Command::Gain, c),
            CommandArgs::Noise(c) => (Command::Noise, c),
            CommandArgs::Dist(c) => (Command::Dist, c),
            CommandArgs::Cmrr(c) => (Command::Cmrr, c),
            CommandArgs::Mc(c) => (Command::Mc, c),
        };
        Self::from_args(command, common).map_err(|m| Cli::command().error(clap::error::ErrorKind::ValueValidation, m))
    }
}

use clap::CommandFactory;

/// Result of [`run`]: the CSV text (empty on usage errors), exit status and
/// diagnostics for standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub status: i32,
    pub diagnostics: Vec<String>,
}

enum Failure {
    Usage(String),
    Analysis(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. } | Error::UndefinedModel { .. } => Failure::Usage(e.to_string()),
            e => Failure::Analysis(e),
        }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    diagnostics: Vec<String>,
}

impl Ctx<'_> {
    fn cards(&self, length: f64) -> (DeviceParams, DeviceParams) {
        let p = cards::pair(length);
        match self.cfg.chi {
            Some(chi) => cards::with_chi(p, chi),
            None => p,
        }
    }

    fn design(&self, kind: Kind, feedback: Feedback, length: f64, gmid: f64) -> Result<(Design, OperatingPoint), Error> {
        let (n, p) = self.cards(length);
        let d = design_amplifier(&AmplifierSpec::new(kind, feedback, n, p).gm_over_id(gmid))?;
        let op = solve_op(&d.topology.circuit, Some(&d.guess))?;
        Ok((d, op))
    }

    fn template(&self) -> Result<Template, Failure> {
        match &self.cfg.input {
            Input::Templates(t) if t.len() == 1 => Ok(t[0]),
            Input::Templates(_) => Err(Failure::Usage("this command takes a single --template".into())),
            Input::Netlist(_) => Err(Failure::Usage("this command needs --template; netlists are accepted by op and sweep".into())),
        }
    }

    fn grid_points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cfg
            .lengths
            .iter()
            .flat_map(move |&l| self.cfg.gm_over_id.iter().map(move |&g| (l, g)))
    }

    fn netlist_circuit(&mut self, path: &PathBuf) -> Result<(Circuit, Vec<Directive>), Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let net = parse_netlist(&text).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))?;
        for w in &net.warnings {
            self.diagnostics.push(format!("{}:{}: warning: {}", path.display(), w.span, w.message));
        }
        let c = Circuit::from_netlist(&net).map_err(|e| Failure::Usage(format!("{}:{e}", path.display())))?;
        c.validate()?;
        Ok((c, net.directives))
    }
}

/// Runs a row-producing analysis, turning a mid-table error into the
/// trailer line.
fn fill(table: &mut Table, rows: impl FnOnce(&mut Table) -> Result<(), Error>) -> i32 {
    match rows(table) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            table.fail(e.to_string());
            EXIT_ANALYSIS
        }
    }
}

fn op_rows(t: &mut Table, c: &Circuit, op: &OperatingPoint) {
    for (i, name) in c.node_names().enumerate().skip(1) {
        t.push(vec![format!("v({name})").as_str().into(), op.node_voltages[i].into()]);
    }
    for (s, i) in c.sources.iter().zip(&op.source_currents) {
        t.push(vec![format!("i({})", s.name.to_ascii_lowercase()).as_str().into(), (*i).into()]);
    }
    for (d, b) in c.devices.iter().zip(&op.device_biases) {
        t.push(vec![format!("id({})", d.name.to_ascii_lowercase()).as_str().into(), b.ids.into()]);
    }
    t.push(vec!["iterations".into(), op.iterations.into()]);
    t.push(vec!["source_steps".into(), op.source_steps.into()]);
    t.push(vec!["residual".into(), op.residual.into()]);
}

fn cmd_op(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let mut table = Table::new(&["quantity", "value"]);
    let status = match &ctx.cfg.input {
        Input::Netlist(path) => {
            let (c, _) = ctx.netlist_circuit(path)?;
            fill(&mut table, |t| {
                let op = solve_op(&c, None)?;
                op_rows(t, &c, &op);
                Ok(())
            })
        }
        Input::Templates(_) => {
            let tpl = ctx.template()?;
            if ctx.cfg.lengths.len() != 1 || ctx.cfg.gm_over_id.len() != 1 {
                return Err(Failure::Usage("op takes a single --L and --gmid".into()));
            }
            let (l, g) = (ctx.cfg.lengths[0], ctx.cfg.gm_over_id[0]);
            fill(&mut table, |t| {
                let (d, op) = ctx.design(tpl.kind(), tpl.feedback(), l, g)?;
                op_rows(t, &d.topology.circuit, &op);
                Ok(())
            })
        }
    };
    Ok((table, status))
}

fn template_sweep(t: &Topology, guess: &[f64], points: usize) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let c = &t.circuit;
    let diff = t.kind.is_differential();
    let span = t.supplies.span();
    let inputs = if diff {
        grid(-0.5 * span, 0.5 * span, points)?
    } else {
        grid(t.supplies.vss, t.supplies.vdd, points)?
    };
    let center = if diff { 0.0 } else { t.input_bias };
    let anchor = (0..inputs.len())
        .min_by(|&a, &b| (inputs[a] - center).abs().total_cmp(&(inputs[b] - center).abs()))
        .unwrap_or(0);
    let node = |n: &str| c.node(n).ok_or_else(|| Error::Topology(format!("no node named '{n}'")));
    let (o1, o2) = if diff {
        (node("out1")?, Some(node("out2")?))
    } else {
        (node("out")?, None)
    };
    let observe = move |v: &[f64]| v[o1] - o2.map_or(0.0, |o| v[o]);
    let mut driven = t.clone();
    let ops = sweep_with(
        c,
        &SolveOptions::default(),
        &inputs,
        anchor,
        Some(guess),
        |c, x| {
            driven.circuit = std::mem::take(c);
            let r = if diff {
                driven.set_input(t.input_bias, x)
            } else {
                driven.set_input(x, 0.0)
            };
            *c = std::mem::take(&mut driven.circuit);
            r
        },
        |_, op| observe(&op.node_voltages),
    )?;
    Ok((inputs, ops.iter().map(|o| observe(&o.node_voltages)).collect()))
}

fn cmd_sweep(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let mut table = Table::new(&["input_v", "output_v"]);
    let status = match &ctx.cfg.input {
        Input::Netlist(path) => {
            let (c, directives) = ctx.netlist_circuit(path)?;
            let Some(Directive::Dc {
                source,
                start,
                stop,
                points,
            }) = directives.into_iter().find(|d| matches!(d, Directive::Dc { .. }))
            else {
                return Err(Failure::Usage(format!("{}: no .dc directive", path.display())));
            };
            let out = ctx.cfg.output_node.clone();
            fill(&mut table, |t| {
                let curve = sweep_dc(&c, &source, &out, start, stop, points)?;
                for (x, y) in curve.input.iter().zip(&curve.output) {
                    t.push(vec![(*x).into(), (*y).into()]);
                }
                Ok(())
            })
        }
        Input::Templates(_) => {
            let tpl = ctx.template()?;
            let (l, g) = (ctx.cfg.lengths[0], ctx.cfg.gm_over_id[0]);
            let points = ctx.cfg.points;
            fill(&mut table, |t| {
                let (d, op) = ctx.design(tpl.kind(), tpl.feedback(), l, g)?;
                let (x, y) = template_sweep(&d.topology, &op.node_voltages, points)?;
                for (x, y) in x.iter().zip(&y) {
                    t.push(vec![(*x).into(), (*y).into()]);
                }
                Ok(())
            })
        }
    };
    Ok((table, status))
}

/// Open-loop and back-gate kinds for a template.
fn kinds(tpl: Template) -> (Kind, Kind) {
    match tpl {
        Template::Ccs | Template::CcsOl => (Kind::CcsOl, Kind::CcsBg),
        _ => (tpl.kind(), tpl.kind()),
    }
}

fn cmd_gain(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let tpl = ctx.template()?;
    let (k_ol, k_bg) = kinds(tpl);
    let mut table = Table::new(&[
        "L_um",
        "gm_over_id",
        "gain_ol_closed",
        "gain_ol_oracle",
        "gain_bg_closed",
        "gain_bg_asymptote",
        "gain_bg_oracle",
        "loop_gain",
    ]);
    let status = fill(&mut table, |t| {
        for (l, g) in ctx.grid_points() {
            let (d_ol, op_ol) = ctx.design(k_ol, Feedback::OpenLoop, l, g)?;
            let (d_bg, op_bg) = ctx.design(k_bg, Feedback::BackGate, l, g)?;
            let ol = small_signal_report(&d_ol.topology, &op_ol)?;
            let bg = small_signal_report(&d_bg.topology, &op_bg)?;
            t.push(vec![
                l.into(),
                g.into(),
                ol.a_v_dm_closed.into(),
                ol.a_v_dm.into(),
                bg.a_v_dm_closed.into(),
                bg.a_v_dm_asymptote.unwrap_or(f64::NAN).into(),
                bg.a_v_dm.into(),
                bg.loop_quantity.into(),
            ]);
        }
        Ok(())
    });
    Ok((table, status))
}

/// Log-spaced frequencies from 1 Hz to 1 GHz, five per decade.
pub fn noise_frequencies() -> Vec<f64> {
    (0..=45).map(|k| 10f64.powf(k as f64 / 5.0)).collect()
}

fn cmd_noise(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let tpl = ctx.template()?;
    let (k_ol, _) = kinds(tpl);
    let temp = ctx.cfg.temperature;
    let freqs = noise_frequencies();
    let mut table = Table::new(&[
        "L_um",
        "gm_over_id",
        "freq_hz",
        "psd_ol",
        "psd_bg",
        "psd_oracle_ol",
        "psd_oracle_bg",
    ]);
    let status = fill(&mut table, |t| {
        for (l, g) in ctx.grid_points() {
            let (d, _) = ctx.design(k_ol, Feedback::OpenLoop, l, g)?;
            let bm = bias_match(&d.topology)?;
            let ol = template_noise(&d.topology, &bm.op_open_loop, &freqs, temp)?;
            let bg = template_noise(&bm.matched, &bm.op_back_gate, &freqs, temp)?;
            let or_ol = noise_oracle(&d.topology, &bm.op_open_loop, &freqs, temp)?;
            let or_bg = noise_oracle(&bm.matched, &bm.op_back_gate, &freqs, temp)?;
            for i in 0..freqs.len() {
                t.push(vec![
                    l.into(),
                    g.into(),
                    freqs[i].into(),
                    ol.psd[i].1.into(),
                    bg.psd[i].1.into(),
                    or_ol[i].into(),
                    or_bg[i].into(),
                ]);
            }
        }
        Ok(())
    });
    Ok((table, status))
}

/// IP3 figures of one complementary design at its open-loop bias and the
/// matched back-gate bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ip3Row {
    pub ol_closed: f64,
    pub ol_full: f64,
    pub ol_fit: f64,
    pub bg_closed: f64,
    pub bg_full: f64,
    pub bg_fit: f64,
    pub enhancement_pred: f64,
    pub enhancement_measured: f64,
    pub loop_gain: f64,
}

/// Closed-form and fitted IP3 of a complementary stage with the default
/// design at (`n`, `p`).
pub fn ip3_row(n: DeviceParams, p: DeviceParams, gm_over_id: f64) -> Result<Ip3Row, Error> {
    let d = design_amplifier(&AmplifierSpec::new(Kind::CcsOl, Feedback::OpenLoop, n, p).gm_over_id(gm_over_id))?;
    let bm = bias_match(&d.topology)?;
    let mut out = [(0.0, 0.0, 0.0); 2];
    let mut pred = (0.0, 0.0);
    for (k, (t, op)) in [(&d.topology, &bm.op_open_loop), (&bm.matched, &bm.op_back_gate)].into_iter().enumerate() {
        let s = device_sets(&t.circuit, op, 3)?;
        let g = combine(&s[0], &s[1])?;
        let (closed, mode) = if k == 0 {
            (series_open_loop(&g)?, Mode::OpenLoop)
        } else {
            (series_backgate(&g)?, Mode::BackGate)
        };
        let full = series_full(&g, mode)?;
        let (fit, _) = fit_topology(t, op, FIT_AMPLITUDE, Output::Differential)?;
        out[k] = (ip3(&closed)?, ip3(&full)?, ip3(&fit)?);
        if k == 0 {
            pred = (ip3_enhancement(&g)?, g.g_mb(1) / g.g_ds(1));
        }
    }
    Ok(Ip3Row {
        ol_closed: out[0].0,
        ol_full: out[0].1,
        ol_fit: out[0].2,
        bg_closed: out[1].0,
        bg_full: out[1].1,
        bg_fit: out[1].2,
        enhancement_pred: pred.0,
        enhancement_measured: out[1].2 / out[0].2,
        loop_gain: pred.1,
    })
}

fn cmd_dist(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let tpl = ctx.template()?;
    if tpl.kind().is_differential() {
        return Err(Failure::Usage("dist analyzes complementary stages (--template ccs or ccs_ol)".into()));
    }
    let mut table = Table::new(&[
        "L_um",
        "gm_over_id",
        "ip3_ol_closed_v",
        "ip3_ol_full_v",
        "ip3_ol_v",
        "ip3_bg_closed_v",
        "ip3_bg_full_v",
        "ip3_bg_v",
        "enhancement_pred",
        "enhancement_measured",
    ]);
    let status = fill(&mut table, |t| {
        for (l, g) in ctx.grid_points() {
            let (n, p) = ctx.cards(l);
            let r = ip3_row(n, p, g)?;
            t.push(vec![
                l.into(),
                g.into(),
                r.ol_closed.into(),
                r.ol_full.into(),
                r.ol_fit.into(),
                r.bg_closed.into(),
                r.bg_full.into(),
                r.bg_fit.into(),
                r.enhancement_pred.into(),
                r.enhancement_measured.into(),
            ]);
        }
        Ok(())
    });
    Ok((table, status))
}

fn cmd_cmrr(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let mut table = Table::new(&[
        "L_um",
        "gm_over_id",
        "a_dm_scmfb",
        "a_cm_scmfb_closed",
        "a_cm_scmfb",
        "cmrr_scmfb_db",
        "a_dm_dcmfb",
        "a_cm_dcmfb_closed",
        "a_cm_dcmfb",
        "cmrr_dcmfb_db",
        "ratio_pred",
        "ratio_measured",
    ]);
    let status = fill(&mut table, |t| {
        for (l, g) in ctx.grid_points() {
            let (ds, os) = ctx.design(Kind::DiffScmfb, Feedback::BackGate, l, g)?;
            let (dd, od) = ctx.design(Kind::DiffDcmfb, Feedback::BackGate, l, g)?;
            let rs = small_signal_report(&ds.topology, &os)?;
            let rd = small_signal_report(&dd.topology, &od)?;
            let ss = device_sets(&ds.topology.circuit, &os, 1)?;
            let sd = device_sets(&dd.topology.circuit, &od, 1)?;
            let (cs, cd) = (rs.a_v_cm.unwrap_or(f64::NAN), rd.a_v_cm.unwrap_or(f64::NAN));
            let (db_s, db_d) = (cmrr_db(rs.a_v_dm, cs), cmrr_db(rd.a_v_dm, cd));
            t.push(vec![
                l.into(),
                g.into(),
                rs.a_v_dm.into(),
                cm_gain(Kind::DiffScmfb, &ss)?.into(),
                cs.into(),
                db_s.into(),
                rd.a_v_dm.into(),
                cm_gain(Kind::DiffDcmfb, &sd)?.into(),
                cd.into(),
                db_d.into(),
                cmrr_ratio(&ss, &sd)?.into(),
                10f64.powf((db_d - db_s) / 20.0).into(),
            ]);
        }
        Ok(())
    });
    Ok((table, status))
}

fn cmd_mc(ctx: &mut Ctx) -> Result<(Table, i32), Failure> {
    let Input::Templates(templates) = &ctx.cfg.input else {
        return Err(Failure::Usage("mc needs --template scmfb and/or dcmfb".into()));
    };
    if let Some(t) = templates.iter().find(|t| !t.kind().is_differential()) {
        return Err(Failure::Usage(format!("mc runs differential templates only, got '{}'", t.label())));
    }
    let spec = MismatchSpec {
        a_vt: ctx.cfg.a_vt,
        sigma_kprime_rel: 0.0,
        samples: ctx.cfg.samples,
        seed: ctx.cfg.seed,
    };
    spec.validate()?;
    let g = ctx.cfg.gm_over_id[0];
    let mut table = Table::new(&[
        "topology",
        "length_um",
        "cmrr_mean_db",
        "cmrr_std_db",
        "n",
        "n_failed",
        "seed",
    ]);
    let chi = ctx.cfg.chi;
    let make = move |l: f64| {
        let p = cards::pair(l);
        match chi {
            Some(c) => cards::with_chi(p, c),
            None => p,
        }
    };
    let status = fill(&mut table, |t| {
        for tpl in templates {
            for &l in &ctx.cfg.lengths {
                let s = cmrr_monte_carlo_with(tpl.kind(), &[l], &spec, g, &make)?.remove(0);
                t.push(vec![
                    tpl.label().into(),
                    l.into(),
                    s.mean_db.into(),
                    s.std_db.into(),
                    s.samples.into(),
                    s.n_failed.into(),
                    s.seed.into(),
                ]);
                if !s.valid {
                    return Err(Error::Convergence {
                        iterations: 0,
                        source_steps: 0,
                        residual: f64::NAN,
                        node: format!("{} of {} Monte Carlo samples failed ({} at L = {l} um)", s.n_failed, spec.samples, tpl.label()),
                    });
                }
            }
        }
        Ok(())
    });
    Ok((table, status))
}

/// Runs one command and renders its table.
pub fn run(cfg: &RunConfig) -> Outcome {
    let mut ctx = Ctx {
        cfg,
        diagnostics: Vec::new(),
    };
    let result = match cfg.command {
        Command::Op => cmd_op(&mut ctx),
        Command::Sweep => cmd_sweep(&mut ctx),
        Command::Gain => cmd_gain(&mut ctx),
        Command::Noise => cmd_noise(&mut ctx),
        Command::Dist => cmd_dist(&mut ctx),
        Command::Cmrr => cmd_cmrr(&mut ctx),
        Command::Mc => cmd_mc(&mut ctx),
    };
    let mut diagnostics = ctx.diagnostics;
    match result {
        Ok((table, status)) => Outcome {
            csv: table.render(),
            status,
            diagnostics,
        },
        Err(Failure::Usage(m)) => {
            diagnostics.push(format!("error: {m}"));
            Outcome {
                csv: String::new(),
                status: EXIT_USAGE,
                diagnostics,
            }
        }
        Err(Failure::Analysis(e)) => {
            diagnostics.push(format!("error: {e}"));
            let mut t = Table::new(&["quantity", "value"]);
            t.fail(e.to_string());
            Outcome {
                csv: t.render(),
                status: EXIT_ANALYSIS,
                diagnostics,
            }
        }
    }
}

/// Entry point of the binary: parses `args`, runs, writes the table and
/// returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = run(&cfg);
    for d in &outcome.diagnostics {
        eprintln!("{d}");
    }
    if !outcome.csv.is_empty() {
        let written = match &cfg.out {
            Some(path) => std::fs::write(path, &outcome.csv).map_err(|e| format!("{}: {e}", path.display())),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(outcome.csv.as_bytes()).map_err(|e| e.to_string())
            }
        };
        if let Err(e) = written {
            eprintln!("error: {e}");
            return EXIT_ANALYSIS;
        }
    }
    outcome.status
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_syntax() {
        assert_eq!(parse_axis("0.15,1").unwrap(), vec![0.15, 1.0]);
        let r = parse_axis("0.15:1.0:8").unwrap();
        assert_eq!((r.len(), r[0], r[7]), (8, 0.15, 1.0));
        assert_eq!(parse_axis("150n,1u").unwrap(), vec![150e-9, 1e-6]);
        assert!(parse_axis("1:2").is_err());
        assert!(parse_axis("a").is_err());
        assert!(parse_axis("-1").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let cfg = RunConfig::parse_from(["bgamp", "dist", "--template", "scmfb"]).unwrap();
        let o = run(&cfg);
        assert_eq!((o.status, o.csv.as_str()), (EXIT_USAGE, ""));
        assert!(RunConfig::parse_from(["bgamp", "gain", "--template", "foo"]).is_err());
    }

    #[test]
    fn analysis_errors_keep_rows_and_trailer() {
        let cfg = RunConfig::parse_from(["bgamp", "gain", "--template", "ccs", "--L", "1", "--gmid", "10,40"]).unwrap();
        let o = run(&cfg);
        assert_eq!(o.status, EXIT_ANALYSIS);
        let lines: Vec<&str> = o.csv.lines().collect();
        assert_eq!(lines.len(), 3, "{}", o.csv);
        assert!(lines[2].starts_with("#error: "));
    }
}
